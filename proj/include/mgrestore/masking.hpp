#pragma once

#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "mgrestore/agent.hpp"

namespace mgrestore {

// Anything that can judge a candidate joint action, e.g. MaskOracle.
template <class V>
concept JointValidator = requires(const V& v, const JointAction& a) {
  { v(a) } -> std::convertible_to<bool>;
};

inline constexpr int kExploreResampleCap = 1000;

/// Demotion bookkeeping for one selection round.
struct MaskState {
  std::vector<std::vector<std::uint8_t>> demoted;  // per agent, per action
  std::vector<std::uint8_t> pinned;                // agent fell back to a forced no-op
  int iterations = 0;
  int cap = 0;

  explicit MaskState(std::span<const std::size_t> action_counts) : pinned(action_counts.size(), 0) {
    for (auto n : action_counts) {
      demoted.emplace_back(n, 0);
      cap += static_cast<int>(n);
    }
    cap += static_cast<int>(action_counts.size());
  }
};

struct SelectionStats {
  int validations = 0;
  int demotions = 0;
  int fallbacks = 0;
};

/// Exploration branch: draw every agent's action uniformly and redraw the
/// whole joint action until the validator accepts it.
template <JointValidator V, class URBG>
JointAction explore_joint(const V& valid, std::span<const std::size_t> action_counts, URBG& rng,
                          SelectionStats* stats = nullptr, int cap = kExploreResampleCap) {
  JointAction a(action_counts.size());
  for (int attempt = 0; attempt < cap; ++attempt) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = {uniform_index(rng, action_counts[i])};
    if (stats) ++stats->validations;
    if (valid(a)) return a;
  }
  throw MaskExhaustedError("no valid joint action after " + std::to_string(cap) + " random draws");
}

namespace detail {

// Forced no-op for an agent whose whole action set was demoted: the open
// toggle with the highest original value, preferring breakers already open.
inline std::size_t fallback_action(std::span<const double> q, const Observation& o) {
  std::size_t best = q.size();
  bool best_noop = false;
  for (std::size_t k = 0; k < o.bits.size(); ++k) {
    const std::size_t idx = 2 * k + 1;
    const bool noop = o.bits[k] == 0;
    if (best == q.size() || (noop && !best_noop) || (noop == best_noop && q[idx] > q[best])) {
      best = idx;
      best_noop = noop;
    }
  }
  return best;
}

}  // namespace detail

/// Exploitation branch: every agent proposes its best non-demoted action;
/// while the joint action is rejected, one uniformly chosen agent demotes its
/// current proposal (value pinned to -inf) and all agents propose again.
template <JointValidator V, class URBG>
JointAction exploit_joint(const V& valid, const std::vector<std::vector<double>>& q_values,
                          const std::vector<Observation>& observations, URBG& rng,
                          SelectionStats* stats = nullptr) {
  std::vector<std::size_t> counts;
  for (const auto& q : q_values) counts.push_back(q.size());
  MaskState mask(counts);
  JointAction a(q_values.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = {masked_argmax(q_values[i], mask.demoted[i])};

  while (true) {
    if (stats) ++stats->validations;
    if (valid(a)) return a;
    if (++mask.iterations > mask.cap)
      throw MaskExhaustedError("demotion loop exceeded its iteration cap");

    std::vector<std::size_t> free_agents;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!mask.pinned[i]) free_agents.push_back(i);
    if (free_agents.empty())
      throw MaskExhaustedError("every agent is pinned to a no-op and the joint action is still invalid");

    const auto j = free_agents[uniform_index(rng, free_agents.size())];
    mask.demoted[j][a[j].index] = 1;
    if (stats) ++stats->demotions;
    const bool exhausted =
        std::all_of(mask.demoted[j].begin(), mask.demoted[j].end(), [](auto d) { return d != 0; });
    if (exhausted) {
      mask.pinned[j] = 1;
      a[j] = {detail::fallback_action(q_values[j], observations[j])};
      if (stats) ++stats->fallbacks;
    } else {
      a[j] = {masked_argmax(q_values[j], mask.demoted[j])};
    }
  }
}

}  // namespace mgrestore
