#pragma once

// Recursive branch-and-bound maximizer over breaker states, evaluating
// leaves with the dense reference solver. Second opinion for the oracle.

#include <cstdint>
#include <vector>

#include "reference_power_flow.hpp"

namespace testsupport {

struct SearchResult {
  std::vector<std::uint8_t> states;
  double weighted_kw = -1.0;
  std::uint64_t leaves = 0;
};

namespace detail {

inline int closed_count(const std::vector<std::uint8_t>& s) {
  int n = 0;
  for (auto b : s) n += b;
  return n;
}

// Better: more weighted kW, then fewer closed breakers, then lexicographically smaller.
inline bool better(double kw, const std::vector<std::uint8_t>& s, const SearchResult& best) {
  if (best.weighted_kw < 0.0) return true;
  if (kw > best.weighted_kw + 1e-9) return true;
  if (kw < best.weighted_kw - 1e-9) return false;
  const int a = closed_count(s), b = closed_count(best.states);
  if (a != b) return a < b;
  return s < best.states;
}

inline void search(const mgrestore::FeederData& d, std::vector<std::uint8_t>& s, std::size_t k,
                   SearchResult& best) {
  // Optimistic bound: every load whose own breaker is not fixed open.
  double bound = 0.0;
  for (std::size_t i = 0; i < d.loads.size(); ++i) {
    std::size_t own = 0;
    while (d.breakers[own].id != d.loads[i].breaker_id) ++own;
    if (own >= k || s[own]) bound += d.loads[i].p_rated_kw * d.loads[i].weight;
  }
  if (best.weighted_kw >= 0.0 && bound < best.weighted_kw - 1e-9) return;

  if (k == s.size()) {
    ++best.leaves;
    const auto sol = ref::solve(d, s);
    if (!ref::feasible(d, sol)) return;
    const double kw = ref::weighted_served(d, sol);
    if (better(kw, s, best)) {
      best.states = s;
      best.weighted_kw = kw;
    }
    return;
  }
  for (std::uint8_t v : {0, 1}) {
    s[k] = v;
    search(d, s, k + 1, best);
  }
  s[k] = 0;
}

}  // namespace detail

inline SearchResult tree_search(const mgrestore::FeederData& d) {
  SearchResult best;
  std::vector<std::uint8_t> s(d.breakers.size(), 0);
  detail::search(d, s, 0, best);
  return best;
}

}  // namespace testsupport
