#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mgrestore/power_flow.hpp"

namespace mgrestore {

inline constexpr std::size_t kMaxOracleBreakers = 26;

class TooManyBreakersError : public Error {
 public:
  explicit TooManyBreakersError(std::size_t n)
      : Error("feeder has " + std::to_string(n) + " breakers; exhaustive search is capped at " +
              std::to_string(kMaxOracleBreakers)) {}
};

struct OracleResult {
  BreakerStates best_states;
  double best_weighted_kw = 0.0;
  double best_served_kw = 0.0;
  std::uint64_t feasible_count = 0;
  std::uint64_t evaluated_count = 0;
};

struct OracleOptions {
  unsigned threads = 0;  // 0: hardware concurrency
};

namespace detail {

struct Evaluation {
  bool feasible = false;
  double served_kw = 0.0;
  double weighted_kw = 0.0;
};

struct Candidate {
  BreakerStates states;
  Evaluation eval;
  bool valid = false;
};

inline bool same_kw(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// Strict preference among feasible configurations: more weighted kW, then
// fewer closed breakers, then the lexicographically smaller state string.
inline bool preferred(const BreakerStates& a, double a_kw, const BreakerStates& b, double b_kw) {
  if (!same_kw(a_kw, b_kw)) return a_kw > b_kw;
  const auto ca = std::count(a.begin(), a.end(), 1);
  const auto cb = std::count(b.begin(), b.end(), 1);
  if (ca != cb) return ca < cb;
  return a < b;
}

inline void offer(Candidate& best, const BreakerStates& s, const Evaluation& e) {
  if (!e.feasible) return;
  if (!best.valid || preferred(s, e.weighted_kw, best.states, best.eval.weighted_kw)) {
    best.states = s;
    best.eval = e;
    best.valid = true;
  }
}

inline OracleResult to_result(const Candidate& best, std::size_t breakers, std::uint64_t feasible,
                              std::uint64_t evaluated) {
  OracleResult r;
  r.best_states = best.valid ? best.states : BreakerStates(breakers, 0);
  r.best_weighted_kw = best.valid ? best.eval.weighted_kw : 0.0;
  r.best_served_kw = best.valid ? best.eval.served_kw : 0.0;
  r.feasible_count = feasible;
  r.evaluated_count = evaluated;
  return r;
}

inline Evaluation evaluate(const Feeder& f, const BreakerStates& s) {
  Evaluation e;
  e.feasible = feasible(f, s);
  const auto rp = restored_power(f, s);
  e.served_kw = rp.served_kw;
  e.weighted_kw = rp.weighted_kw;
  return e;
}

// Electrically independent part of a feeder: one tree of the full-closure
// forest, extracted as a stand-alone feeder with element order preserved so
// its solves match the full feeder's bit for bit.
struct Component {
  Feeder sub;
  std::vector<std::size_t> breakers;  // global breaker indices, ascending
  std::vector<Evaluation> memo;
  std::vector<std::uint8_t> known;
};

inline std::vector<Component> split_components(const Feeder& f) {
  std::vector<std::size_t> comp(f.bus_count(), SIZE_MAX);
  std::size_t count = 0;
  for (std::size_t start = 0; start < f.bus_count(); ++start) {
    if (comp[start] != SIZE_MAX) continue;
    std::vector<std::size_t> stack{start};
    comp[start] = count;
    while (!stack.empty()) {
      const auto bus = stack.back();
      stack.pop_back();
      for (const auto& adj : f.adjacency(bus))
        if (comp[adj.bus] == SIZE_MAX) {
          comp[adj.bus] = count;
          stack.push_back(adj.bus);
        }
    }
    ++count;
  }

  std::vector<FeederData> parts(count);
  std::vector<Component> out(count, Component{Feeder(FeederData{}), {}, {}, {}});
  for (auto& p : parts) p.base = f.base();
  for (std::size_t b = 0; b < f.bus_count(); ++b) parts[comp[b]].buses.push_back(f.buses()[b]);
  for (std::size_t l = 0; l < f.line_count(); ++l) parts[comp[f.line_from(l)]].lines.push_back(f.lines()[l]);
  for (std::size_t b = 0; b < f.breaker_count(); ++b) {
    const auto c = comp[f.line_from(f.breaker_line(b))];
    parts[c].breakers.push_back(f.breakers()[b]);
    out[c].breakers.push_back(b);
  }
  for (std::size_t i = 0; i < f.loads().size(); ++i) parts[comp[f.load_bus(i)]].loads.push_back(f.loads()[i]);
  for (std::size_t g = 0; g < f.generators().size(); ++g)
    parts[comp[f.generator_bus(g)]].generators.push_back(f.generators()[g]);

  std::vector<Component> kept;
  for (std::size_t c = 0; c < count; ++c) {
    out[c].sub = Feeder(std::move(parts[c]));
    kept.push_back(std::move(out[c]));
  }
  return kept;
}

// Components memoize up to 2^20 sub-configurations; larger ones re-solve.
inline constexpr std::size_t kMemoBits = 20;

inline const Evaluation& component_eval(Component& c, std::uint32_t key) {
  if (c.breakers.size() <= kMemoBits) {
    if (c.memo.empty()) {
      c.memo.resize(std::size_t{1} << c.breakers.size());
      c.known.assign(c.memo.size(), 0);
    }
    if (c.known[key]) return c.memo[key];
  }
  BreakerStates s(c.breakers.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = (key >> i) & 1u;
  Evaluation e = evaluate(c.sub, s);
  if (c.breakers.size() <= kMemoBits) {
    c.memo[key] = e;
    c.known[key] = 1;
    return c.memo[key];
  }
  c.memo.assign(1, e);
  return c.memo[0];
}

inline std::uint64_t gray(std::uint64_t i) { return i ^ (i >> 1); }

struct ChunkResult {
  Candidate best;
  std::uint64_t feasible = 0;
};

// Enumerates Gray-code indices [lo, hi). Consecutive codes differ in one
// breaker, so only the component owning that breaker is re-evaluated.
inline ChunkResult enumerate_chunk(const Feeder& f, std::vector<Component> comps, std::uint64_t lo,
                                   std::uint64_t hi) {
  ChunkResult out;
  const auto n = f.breaker_count();
  std::vector<std::size_t> owner(n), slot(n);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (std::size_t i = 0; i < comps[c].breakers.size(); ++i) {
      owner[comps[c].breakers[i]] = c;
      slot[comps[c].breakers[i]] = i;
    }

  BreakerStates s(n, 0);
  std::vector<std::uint32_t> keys(comps.size(), 0);
  std::vector<Evaluation> evals(comps.size());
  const auto code = gray(lo);
  for (std::size_t b = 0; b < n; ++b) {
    s[b] = (code >> b) & 1u;
    if (s[b]) keys[owner[b]] |= 1u << slot[b];
  }
  for (std::size_t c = 0; c < comps.size(); ++c) evals[c] = component_eval(comps[c], keys[c]);

  for (std::uint64_t i = lo; i < hi; ++i) {
    if (i != lo) {
      const auto b = static_cast<std::size_t>(std::countr_zero(gray(i) ^ gray(i - 1)));
      s[b] ^= 1u;
      const auto c = owner[b];
      keys[c] ^= 1u << slot[b];
      evals[c] = component_eval(comps[c], keys[c]);
    }
    Evaluation total{true, 0.0, 0.0};
    for (const auto& e : evals) {
      total.feasible = total.feasible && e.feasible;
      total.served_kw += e.served_kw;
      total.weighted_kw += e.weighted_kw;
    }
    if (total.feasible) {
      ++out.feasible;
      offer(out.best, s, total);
    }
  }
  return out;
}

}  // namespace detail

/// Exhaustive search over all 2^n breaker configurations for the feasible
/// maximizer of weighted restored power.
///
/// Configurations are visited in Gray-code order split into contiguous
/// chunks, one per thread; results are identical to plain enumeration.
inline OracleResult brute_force(const Feeder& f, OracleOptions opt = {}) {
  const auto n = f.breaker_count();
  if (n > kMaxOracleBreakers) throw TooManyBreakersError(n);
  const std::uint64_t total = std::uint64_t{1} << n;
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, total));

  const auto comps = detail::split_components(f);
  std::vector<std::future<detail::ChunkResult>> jobs;
  for (unsigned t = 0; t < threads; ++t) {
    const std::uint64_t lo = total * t / threads;
    const std::uint64_t hi = total * (t + 1) / threads;
    jobs.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred,
                              detail::enumerate_chunk, std::cref(f), comps, lo, hi));
  }
  detail::Candidate best;
  std::uint64_t feasible = 0;
  for (auto& job : jobs) {
    auto chunk = job.get();
    feasible += chunk.feasible;
    if (chunk.best.valid) detail::offer(best, chunk.best.states, chunk.best.eval);
  }
  return detail::to_result(best, n, feasible, total);
}

/// Reference enumeration: binary counting, one full solve per configuration.
inline OracleResult brute_force_naive(const Feeder& f) {
  const auto n = f.breaker_count();
  if (n > kMaxOracleBreakers) throw TooManyBreakersError(n);
  const std::uint64_t total = std::uint64_t{1} << n;
  detail::Candidate best;
  std::uint64_t feasible = 0;
  BreakerStates s(n, 0);
  for (std::uint64_t code = 0; code < total; ++code) {
    for (std::size_t b = 0; b < n; ++b) s[b] = (code >> b) & 1u;
    const auto e = detail::evaluate(f, s);
    if (e.feasible) ++feasible;
    detail::offer(best, s, e);
  }
  return detail::to_result(best, n, feasible, total);
}

/// Per-microgrid search: each agent's breakers are enumerated with all
/// others open and the per-microgrid optima are combined. Exact when no
/// electrical island holds breakers of two agents; throws Error otherwise.
inline OracleResult brute_force_decomposed(const Feeder& f) {
  const auto n = f.breaker_count();
  std::vector<std::size_t> agent_of(n, SIZE_MAX);
  for (std::size_t a = 0; a < f.agent_count(); ++a)
    for (auto b : f.agent_breakers(a)) agent_of[b] = a;
  for (const auto& comp : detail::split_components(f))
    for (auto b : comp.breakers)
      if (agent_of[b] != agent_of[comp.breakers.front()])
        throw Error("microgrids share an electrical island; decomposition does not apply");

  OracleResult r;
  r.best_states.assign(n, 0);
  r.feasible_count = 1;
  for (std::size_t a = 0; a < f.agent_count(); ++a) {
    const auto& mine = f.agent_breakers(a);
    if (mine.size() > kMaxOracleBreakers) throw TooManyBreakersError(mine.size());
    detail::Candidate best;
    std::uint64_t feasible = 0;
    BreakerStates s(n, 0);
    const std::uint64_t total = std::uint64_t{1} << mine.size();
    for (std::uint64_t code = 0; code < total; ++code) {
      for (std::size_t i = 0; i < mine.size(); ++i) s[mine[i]] = (code >> i) & 1u;
      const auto e = detail::evaluate(f, s);
      if (e.feasible) ++feasible;
      detail::offer(best, s, e);
    }
    r.evaluated_count += total;
    r.feasible_count *= feasible;
    if (!best.valid) continue;  // cannot happen: all-open is feasible on valid feeders
    for (auto b : mine) r.best_states[b] = best.states[b];
    r.best_weighted_kw += best.eval.weighted_kw;
    r.best_served_kw += best.eval.served_kw;
  }
  return r;
}

}  // namespace mgrestore
