#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgrestore/power_flow.hpp"

namespace mgrestore {

// Local view of one agent: bit k is 1 iff the agent's k-th breaker is closed.
struct Observation {
  std::vector<std::uint8_t> bits;

  std::vector<double> as_input() const { return {bits.begin(), bits.end()}; }
  bool operator==(const Observation&) const = default;
};

// Index into an agent's 2n toggle actions: 2k closes breaker k, 2k+1 opens it.
struct AgentAction {
  std::size_t index = 0;

  bool operator==(const AgentAction&) const = default;
};

using JointAction = std::vector<AgentAction>;

struct DecodedAction {
  std::size_t breaker = 0;  // ordinal within the agent's partition list
  bool close = false;

  bool operator==(const DecodedAction&) const = default;
};

inline AgentAction encode_action(std::size_t breaker_ordinal, bool close, std::size_t breaker_count) {
  if (breaker_ordinal >= breaker_count)
    throw DimensionError("breaker ordinal " + std::to_string(breaker_ordinal) + " out of range for " +
                         std::to_string(breaker_count) + " breakers");
  return {2 * breaker_ordinal + (close ? 0 : 1)};
}

inline DecodedAction decode_action(AgentAction a, std::size_t breaker_count) {
  if (a.index >= 2 * breaker_count)
    throw DimensionError("action index " + std::to_string(a.index) + " out of range for " +
                         std::to_string(breaker_count) + " breakers");
  return {a.index / 2, a.index % 2 == 0};
}

enum class RewardMode { masked, penalty };

struct EnvironmentOptions {
  RewardMode reward_mode = RewardMode::masked;
  double penalty = -1.0;  // reward for a violating step in penalty mode
  int max_steps = 16;
};

// Applies a joint action to a copy of `states`. Toggles of different agents
// touch disjoint breakers, so application order is irrelevant.
inline BreakerStates apply_joint(const Feeder& f, BreakerStates states, const JointAction& a) {
  if (a.size() != f.agent_count())
    throw DimensionError("joint action has " + std::to_string(a.size()) + " entries, feeder has " +
                         std::to_string(f.agent_count()) + " agents");
  for (std::size_t agent = 0; agent < a.size(); ++agent) {
    const auto& mine = f.agent_breakers(agent);
    const auto d = decode_action(a[agent], mine.size());
    states[mine[d.breaker]] = d.close ? 1 : 0;
  }
  return states;
}

// Normalized restored power: weighted served kW over total rated kW.
inline double normalized_reward(const Feeder& f, const BreakerStates& states) {
  const double total = f.total_load_kw();
  if (total <= 0.0) return 0.0;
  return restored_power(f, states).weighted_kw / total;
}

/// Validity queries against a frozen breaker configuration. Each query
/// solves the power flow of the candidate successor state on a copy.
class MaskOracle {
 public:
  MaskOracle(Feeder f, BreakerStates states) : feeder_(std::move(f)), states_(std::move(states)) {}

  bool valid(const JointAction& a) const {
    return check_constraints(feeder_, solve(feeder_, apply_joint(feeder_, states_, a))).all_ok();
  }
  bool operator()(const JointAction& a) const { return valid(a); }

  const BreakerStates& states() const { return states_; }

 private:
  Feeder feeder_;
  BreakerStates states_;
};

struct StepResult {
  std::vector<Observation> observations;
  double reward = 0.0;
  double served_kw = 0.0;
  double weighted_kw = 0.0;
  bool violation = false;
  ConstraintReport report;
  MaskOracle mask;
};

/// The restoration MDP: breaker states of a partitioned feeder, joint toggle
/// actions, shared normalized reward.
class Environment {
 public:
  explicit Environment(Feeder f, EnvironmentOptions opt = {})
      : feeder_(std::move(f)), opt_(opt), states_(all_open(feeder_)) {}

  const Feeder& feeder() const { return feeder_; }
  const EnvironmentOptions& options() const { return opt_; }
  const BreakerStates& breaker_states() const { return states_; }
  int step_count() const { return step_count_; }
  std::size_t agent_count() const { return feeder_.agent_count(); }

  std::vector<std::size_t> action_counts() const {
    std::vector<std::size_t> n;
    for (const auto& mine : feeder_.agent_layout()) n.push_back(2 * mine.size());
    return n;
  }

  std::vector<Observation> reset() {
    states_ = all_open(feeder_);
    step_count_ = 0;
    return observations();
  }

  std::vector<Observation> observations() const { return observe(states_); }

  std::vector<Observation> observe(const BreakerStates& states) const {
    std::vector<Observation> obs;
    for (const auto& mine : feeder_.agent_layout()) {
      Observation o;
      for (auto b : mine) o.bits.push_back(states[b]);
      obs.push_back(std::move(o));
    }
    return obs;
  }

  MaskOracle mask_oracle() const { return MaskOracle(feeder_, states_); }

  bool validate_joint(const JointAction& a) const { return mask_oracle().valid(a); }

  // Reward the penalty formulation would assign to `a` from the current state.
  double reward_penalty(const JointAction& a, double penalty) const {
    const auto next = apply_joint(feeder_, states_, a);
    if (!check_constraints(feeder_, solve(feeder_, next)).all_ok()) return penalty;
    return normalized_reward(feeder_, next);
  }

  /// Applies `a`, solves the new operating point and returns the feedback.
  /// Under masked rewards a violating action is a caller error and leaves
  /// the state untouched.
  StepResult step(const JointAction& a) {
    if (step_count_ >= opt_.max_steps)
      throw ContractViolation("episode exhausted after " + std::to_string(opt_.max_steps) + " steps");
    auto next = apply_joint(feeder_, states_, a);
    auto report = check_constraints(feeder_, solve(feeder_, next));
    if (opt_.reward_mode == RewardMode::masked && !report.all_ok())
      throw ContractViolation("joint action violates operating constraints under masking");

    states_ = std::move(next);
    ++step_count_;
    const auto rp = restored_power(feeder_, states_);
    StepResult r{observations(), 0.0, rp.served_kw, rp.weighted_kw, !report.all_ok(), report,
                 mask_oracle()};
    const double total = feeder_.total_load_kw();
    r.reward = total > 0.0 ? rp.weighted_kw / total : 0.0;
    if (r.violation) r.reward = opt_.penalty;
    return r;
  }

 private:
  Feeder feeder_;
  EnvironmentOptions opt_;
  BreakerStates states_;
  int step_count_ = 0;
};

}  // namespace mgrestore
