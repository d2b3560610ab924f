#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "mgrestore/masking.hpp"

namespace mgrestore {

enum class AgentMode { multi, single };

struct TrainingConfig {
  int episodes = 500;
  int steps_per_episode = 16;
  int sync_interval = 50;  // environment steps between target syncs
  Hyperparameters hyper;
  EpsilonSchedule schedule;
  bool masking = true;
  AgentMode agent_mode = AgentMode::multi;
  double penalty = -1.0;  // reward of a violating step when masking is off
  std::uint64_t seed = 0;
};

struct EpisodeLog {
  int episode = 0;
  double reward = 0.0;           // cumulative normalized reward R
  double restored_kw = 0.0;      // served load at the end of the episode
  int violations = 0;            // steps that ended in a constraint violation
  double epsilon = 0.0;
  double capacity_scaled_reward = 0.0;  // R * total load / generation capacity
  double mean_loss = 0.0;        // average training loss over the episode's updates
};

// Networks bound to the feeder layout they were trained on (in single-agent
// mode the partition collapses to one agent).
struct TrainedModels {
  Feeder feeder;
  std::vector<AgentPair> agents;
};

struct TrainingResult {
  TrainedModels models;
  std::vector<EpisodeLog> logs;
  double best_feasible_weighted_kw = 0.0;  // over every state visited
  long long shadow_validations = 0;
};

inline Feeder training_layout(const Feeder& f, AgentMode mode) {
  return mode == AgentMode::single ? f.with_single_agent() : f;
}

inline void check_config(const TrainingConfig& cfg) {
  if (cfg.episodes < 0) throw Error("episodes must be non-negative");
  if (cfg.steps_per_episode <= 0) throw Error("steps per episode must be positive");
  if (cfg.sync_interval <= 0) throw Error("sync interval must be positive");
  const auto& h = cfg.hyper;
  if (!(h.gamma >= 0.0 && h.gamma < 1.0)) throw Error("gamma must lie in [0, 1)");
  if (!(h.alpha > 0.0 && h.alpha <= 1.0)) throw Error("alpha must lie in (0, 1]");
  if (!(h.eta > 0.0)) throw Error("eta must be positive");
  if (h.batch_size == 0 || h.capacity < h.batch_size) throw Error("need 0 < batch_size <= capacity");
  const auto& s = cfg.schedule;
  if (!(0.0 <= s.eps_min && s.eps_min < s.eps_max && s.eps_max <= 1.0))
    throw Error("epsilon bounds must satisfy 0 <= eps_min < eps_max <= 1");
  if (!(s.lambda > 0.0)) throw Error("epsilon decay must be positive");
}

/// Centralized training of one deep-Q agent per microgrid.
///
/// Per step: one uniform draw against the episode's epsilon picks the
/// exploration or exploitation branch; with masking on, the joint action is
/// screened by shadow power flows before it reaches the environment. Every
/// agent stores (o, a, r, o') and trains once all buffers can fill a batch;
/// targets sync every `sync_interval` steps; epsilon decays per episode.
inline TrainingResult train(const Feeder& feeder, const TrainingConfig& cfg,
                            const std::function<void(const EpisodeLog&)>& on_episode = {}) {
  check_config(cfg);
  const Feeder layout = training_layout(feeder, cfg.agent_mode);
  Environment env(layout, {cfg.masking ? RewardMode::masked : RewardMode::penalty, cfg.penalty,
                           cfg.steps_per_episode});
  const auto counts = env.action_counts();
  const std::size_t m = env.agent_count();

  Rng rng(cfg.seed);
  TrainingResult result{{layout, {}}, {}, 0.0, 0};
  auto& agents = result.models.agents;
  std::vector<ReplayBuffer> buffers;
  for (std::size_t i = 0; i < m; ++i) {
    agents.push_back(make_agent(layout.agent_breakers(i).size(), cfg.hyper.hidden, rng));
    buffers.emplace_back(cfg.hyper.capacity);
  }

  const double capacity_kw = layout.generation_capacity_kw();
  const double scale = capacity_kw > 0.0 ? layout.total_load_kw() / capacity_kw : 0.0;
  long long k = 0;
  std::vector<std::vector<double>> q(m);

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const double eps = epsilon(cfg.schedule, episode);
    EpisodeLog log{episode, 0.0, 0.0, 0, eps, 0.0, 0.0};
    int updates = 0;
    auto obs = env.reset();

    for (int u = 0; u < cfg.steps_per_episode; ++u) {
      ++k;
      const bool explore = uniform_unit(rng) <= eps;
      JointAction joint(m);
      if (cfg.masking) {
        const auto oracle = env.mask_oracle();
        SelectionStats stats;
        if (explore) {
          joint = explore_joint(oracle, counts, rng, &stats);
        } else {
          for (std::size_t i = 0; i < m; ++i) q[i] = agents[i].main.forward(obs[i].as_input());
          joint = exploit_joint(oracle, q, obs, rng, &stats);
        }
        result.shadow_validations += stats.validations;
      } else if (explore) {
        for (std::size_t i = 0; i < m; ++i) joint[i] = {uniform_index(rng, counts[i])};
      } else {
        for (std::size_t i = 0; i < m; ++i)
          joint[i] = {masked_argmax(agents[i].main.forward(obs[i].as_input()), {})};
      }

      const auto step = env.step(joint);
      log.reward += step.reward;
      if (step.violation) {
        ++log.violations;
      } else {
        result.best_feasible_weighted_kw = std::max(result.best_feasible_weighted_kw, step.weighted_kw);
      }

      for (std::size_t i = 0; i < m; ++i) buffers[i].push({obs[i], joint[i], step.reward, step.observations[i]});
      const bool ready = std::all_of(buffers.begin(), buffers.end(),
                                     [&](const ReplayBuffer& b) { return b.size() >= cfg.hyper.batch_size; });
      if (ready) {
        for (std::size_t i = 0; i < m; ++i) {
          const auto batch = buffers[i].sample(cfg.hyper.batch_size, rng);
          log.mean_loss += train_step(agents[i], batch, cfg.hyper);
          ++updates;
        }
      }
      if (k % cfg.sync_interval == 0)
        for (auto& a : agents) sync_target(a);
      obs = step.observations;
      log.restored_kw = step.served_kw;
    }
    if (updates > 0) log.mean_loss /= updates;
    log.capacity_scaled_reward = log.reward * scale;
    result.logs.push_back(log);
    if (on_episode) on_episode(log);
  }
  return result;
}

struct TraceStep {
  int step = 0;
  JointAction action;
  std::vector<DecodedAction> toggles;  // per agent
  BreakerStates states;                // after the step
  double served_kw = 0.0;
  double reward = 0.0;
  bool violation = false;
};

struct RestorationTrace {
  std::vector<TraceStep> steps;
  int violations = 0;

  BreakerStates final_states() const { return steps.empty() ? BreakerStates{} : steps.back().states; }

  // 1-based step at which `target` is first reached.
  std::optional<int> first_step_reaching(const BreakerStates& target) const {
    for (const auto& s : steps)
      if (s.states == target) return s.step;
    return std::nullopt;
  }
};

/// Decentralized greedy rollout from the all-open state: each agent acts on
/// its own observation with its main network, no validity screening.
inline RestorationTrace execute(const TrainedModels& models, int max_steps, double penalty = -1.0) {
  const auto& f = models.feeder;
  if (models.agents.size() != f.agent_count())
    throw DimensionError("model count does not match the feeder partition");
  for (std::size_t i = 0; i < models.agents.size(); ++i)
    if (models.agents[i].main.input_size() != f.agent_breakers(i).size())
      throw DimensionError("model " + std::to_string(i) + " does not match its microgrid");

  Environment env(f, {RewardMode::penalty, penalty, max_steps});
  auto obs = env.reset();
  RestorationTrace trace;
  for (int u = 1; u <= max_steps; ++u) {
    TraceStep ts;
    ts.step = u;
    for (std::size_t i = 0; i < models.agents.size(); ++i) {
      const auto qv = models.agents[i].main.forward(obs[i].as_input());
      ts.action.push_back({masked_argmax(qv, {})});
      ts.toggles.push_back(decode_action(ts.action.back(), f.agent_breakers(i).size()));
    }
    const auto r = env.step(ts.action);
    ts.states = env.breaker_states();
    ts.served_kw = r.served_kw;
    ts.reward = r.reward;
    ts.violation = r.violation;
    trace.violations += r.violation ? 1 : 0;
    trace.steps.push_back(std::move(ts));
    obs = r.observations;
  }
  return trace;
}

struct RewardStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

// Statistics of episode rewards over logs[first, first + count).
inline RewardStats reward_stats(const std::vector<EpisodeLog>& logs, std::size_t first, std::size_t count) {
  RewardStats s;
  const std::size_t end = std::min(logs.size(), first + count);
  if (first >= end) return s;
  const double n = static_cast<double>(end - first);
  for (std::size_t i = first; i < end; ++i) s.mean += logs[i].reward / n;
  for (std::size_t i = first; i < end; ++i) s.stddev += (logs[i].reward - s.mean) * (logs[i].reward - s.mean) / n;
  s.stddev = std::sqrt(s.stddev);
  return s;
}

inline RewardStats final_window(const std::vector<EpisodeLog>& logs, std::size_t window = 50) {
  const std::size_t w = std::min(window, logs.size());
  return reward_stats(logs, logs.size() - w, w);
}

inline RewardStats first_window(const std::vector<EpisodeLog>& logs, std::size_t window = 50) {
  return reward_stats(logs, 0, std::min(window, logs.size()));
}

// First episode whose trailing window mean comes within 5% of the final
// window mean; -1 when the run is shorter than one window.
inline int convergence_episode(const std::vector<EpisodeLog>& logs, std::size_t window = 50) {
  if (logs.size() < window || window == 0) return -1;
  const double target = final_window(logs, window).mean;
  const double threshold = target - 0.05 * std::abs(target);
  for (std::size_t e = window - 1; e < logs.size(); ++e)
    if (reward_stats(logs, e + 1 - window, window).mean >= threshold) return static_cast<int>(e);
  return -1;
}

struct Variant {
  std::string name;
  TrainingConfig config;
};

struct ComparisonRow {
  std::string name;
  int convergence_episode = -1;
  RewardStats first;
  RewardStats last;
  long long violations = 0;
  double wall_seconds = 0.0;
};

/// Trains each variant independently (concurrently when threads allow).
inline std::vector<ComparisonRow> compare(const Feeder& f, const std::vector<Variant>& variants,
                                          std::vector<TrainingResult>* results = nullptr) {
  std::vector<std::future<std::pair<ComparisonRow, TrainingResult>>> jobs;
  for (const auto& v : variants) {
    jobs.push_back(std::async(std::launch::async, [&f, v]() {
      const auto t0 = std::chrono::steady_clock::now();
      auto res = train(f, v.config);
      const auto t1 = std::chrono::steady_clock::now();
      ComparisonRow row;
      row.name = v.name;
      row.convergence_episode = convergence_episode(res.logs);
      row.first = first_window(res.logs);
      row.last = final_window(res.logs);
      for (const auto& l : res.logs) row.violations += l.violations;
      row.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
      return std::make_pair(row, std::move(res));
    }));
  }
  std::vector<ComparisonRow> rows;
  for (auto& j : jobs) {
    auto [row, res] = j.get();
    rows.push_back(std::move(row));
    if (results) results->push_back(std::move(res));
  }
  return rows;
}

}  // namespace mgrestore
