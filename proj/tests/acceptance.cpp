// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--tier fast|slow|all]
//
// fast: criteria 1-5, 8, 9 (plus the exclusion notice for 10)
// slow: criteria 4, 6, 7 on the 123-node feeder
// Exit status is nonzero when any printed criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mgrestore/mgrestore.hpp"
#include "support/finite_difference.hpp"
#include "support/random_feeder.hpp"
#include "support/reference_power_flow.hpp"

using namespace mgrestore;

namespace {

constexpr int kEpisodes13 = 500;
constexpr int kEpisodes123 = 2000;
constexpr std::uint64_t kSeedOptimality = 7;
constexpr std::uint64_t kStepSeeds[] = {1, 2, 3, 4, 5};

bool any_failed = false;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  any_failed = any_failed || !pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_reward(const std::vector<EpisodeLog>& logs) {
  double m = -1e300;
  for (const auto& l : logs) m = std::max(m, l.reward);
  return m;
}

long long violations(const std::vector<EpisodeLog>& logs) {
  long long v = 0;
  for (const auto& l : logs) v += l.violations;
  return v;
}

struct Run {
  std::string label;
  TrainingResult result;
  RestorationTrace trace;
};

Run run(const Feeder& f, const std::string& label, int episodes, std::uint64_t seed, bool masking,
        AgentMode mode = AgentMode::multi) {
  TrainingConfig cfg;
  cfg.episodes = episodes;
  cfg.seed = seed;
  cfg.masking = masking;
  cfg.agent_mode = mode;
  const auto t0 = std::chrono::steady_clock::now();
  Run r{label, train(f, cfg), {}};
  r.trace = execute(r.result.models, cfg.steps_per_episode, cfg.penalty);
  const auto last = final_window(r.result.logs);
  std::printf("  run %-22s %.1fs  final50 R %.4f +/- %.4f  max R %.4f  violations %lld  greedy end %s (%d violating steps)\n",
              label.c_str(), seconds_since(t0), last.mean, last.stddev, max_reward(r.result.logs),
              violations(r.result.logs), format_states(r.trace.final_states()).c_str(), r.trace.violations);
  std::fflush(stdout);
  return r;
}

// Ordering of criterion 3: final-window mean against the best single episode.
bool converged(const Run& r, std::string& detail) {
  const double last = final_window(r.result.logs).mean;
  const double best = max_reward(r.result.logs);
  const bool ok = last >= 0.95 * best;
  detail += fmt(" %s=%.3f", r.label.c_str(), best > 0 ? last / best : 0.0);
  return ok;
}

std::set<double> closed_load_kw(const Feeder& f, const BreakerStates& s) {
  std::set<double> kw;
  for (const auto& l : f.loads())
    for (std::size_t b = 0; b < f.breaker_count(); ++b)
      if (s[b] && f.breakers()[b].id == l.breaker_id) kw.insert(l.p_rated_kw);
  return kw;
}

void fast_tier(std::vector<Run>& masked13) {
  const auto f = builtin_feeder("ieee13");

  // 1: oracle optimum and a trained masked rollout reaching it
  const auto oracle = brute_force(f);
  const bool oracle_ok = oracle.best_served_kw == 2563.0 &&
                         closed_load_kw(f, oracle.best_states) == std::set<double>{400, 1150, 843, 170};
  const double oracle_ratio = 100.0 * oracle.best_served_kw / 2600.0;
  auto seven = run(f, "ieee13 multi mask s7", kEpisodes13, kSeedOptimality, true);
  const auto end = seven.trace.final_states();
  const double served = restored_power(f, end).served_kw;
  const double ratio = 100.0 * served / 2600.0;
  report(1,
         oracle_ok && std::abs(oracle_ratio - 98.6) <= 0.1 && end == oracle.best_states &&
             std::abs(ratio - 98.6) <= 0.1 && seven.trace.violations == 0,
         fmt("oracle %s %.0f kW (%.2f%%); trained rollout ends %s serving %.0f kW (%.2f%%), %d violating steps",
             format_states(oracle.best_states).c_str(), oracle.best_served_kw, oracle_ratio, format_states(end).c_str(),
             served, ratio, seven.trace.violations));
  masked13.push_back(std::move(seven));

  // 2: optimum reached within four steps for at least three of five seeds
  int good = 0;
  std::string detail;
  for (auto seed : kStepSeeds) {
    auto r = run(f, "ieee13 multi mask s" + std::to_string(seed), kEpisodes13, seed, true);
    const auto first = r.trace.first_step_reaching(oracle.best_states);
    const bool ok = first && *first <= 4;
    const bool held = r.trace.final_states() == oracle.best_states;
    good += ok;
    detail += fmt(" s%llu:%s", static_cast<unsigned long long>(seed),
                  first ? (std::to_string(*first) + (held ? "" : " then left")).c_str() : "never");
    masked13.push_back(std::move(r));
  }
  report(2, good >= 3, fmt("%d/5 seeds reach the optimum in <= 4 steps (need >= 3); first step:", good) + detail);

  // 5: single-agent masking ablation
  auto sm = run(f, "ieee13 single mask s7", kEpisodes13, kSeedOptimality, true, AgentMode::single);
  auto su = run(f, "ieee13 single nomask s7", kEpisodes13, kSeedOptimality, false, AgentMode::single);
  const auto m = final_window(sm.result.logs), u = final_window(su.result.logs);
  const bool c5 = m.mean >= u.mean && m.stddev <= 0.6 * u.stddev;
  masked13.push_back(std::move(sm));

  // 3: every masked ieee13 run converges to its plateau
  bool all_conv = true;
  std::string conv = "final50 mean / max episode R:";
  for (const auto& r : masked13) all_conv = converged(r, conv) && all_conv;
  report(3, all_conv, conv + " (need >= 0.95)");

  // 4 (13-node part): no violations in masked training
  long long v = 0;
  for (const auto& r : masked13) v += violations(r.result.logs);
  report(4, v == 0, fmt("%lld violations over %zu masked ieee13 runs", v, masked13.size()));

  report(5, c5,
         fmt("masked final50 %.4f +/- %.4f vs unmasked %.4f +/- %.4f (std ratio %.3f, need mean >= and ratio <= 0.6)",
             m.mean, m.stddev, u.mean, u.stddev, u.stddev > 0 ? m.stddev / u.stddev : INFINITY));

  // 8: learning-core and solver numerics
  const auto t8 = std::chrono::steady_clock::now();
  Rng rng(8);
  double fd_worst = 0.0;
  auto bits = [&](std::size_t n) {
    Observation o;
    for (std::size_t i = 0; i < n; ++i) o.bits.push_back(static_cast<std::uint8_t>(uniform_index(rng, 2)));
    return o;
  };
  for (int c = 0; c < 100;) {
    const std::size_t n = 1 + uniform_index(rng, 5);
    std::vector<std::size_t> hidden;
    for (std::size_t l = 0, depth = 1 + uniform_index(rng, 2); l < depth; ++l) hidden.push_back(2 + uniform_index(rng, 7));
    auto pair = make_agent(n, hidden, rng);
    pair.target = QNetwork::random(pair.main.widths(), rng);
    Hyperparameters h;
    h.gamma = uniform_real(rng, 0.0, 0.99);
    h.alpha = uniform_real(rng, 0.05, 1.0);
    std::vector<Experience> batch;
    for (std::size_t b = 0, size = 1 + uniform_index(rng, 6); b < size; ++b)
      batch.push_back({bits(n), {uniform_index(rng, 2 * n)}, uniform_real(rng, -1.0, 1.0), bits(n)});
    // central differences are meaningless across a rectifier kink
    if (std::any_of(batch.begin(), batch.end(),
                    [&](const Experience& e) { return testsupport::near_kink(pair.main, e.o, 1e-3); }))
      continue;
    ++c;
    std::vector<double> labels;
    for (const auto& e : batch) labels.push_back(training_label(pair, e, h).blended);
    std::vector<DenseLayer> grad;
    loss_and_gradient(pair, batch, h, grad);
    const auto fd = testsupport::central_difference(pair.main, [&] {
      double loss = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double q = pair.main.forward(batch[i].o.as_input())[batch[i].a.index];
        loss += (labels[i] - q) * (labels[i] - q);
      }
      return loss / static_cast<double>(batch.size());
    });
    fd_worst = std::max(fd_worst, testsupport::max_relative_error(testsupport::flatten(grad), fd));
  }
  const EpsilonSchedule sched{0.01, 1.0, 0.01};
  const double eps_err = std::max(std::abs(epsilon(sched, 0) - 1.0),
                                  std::abs(epsilon(sched, 100) - (0.01 + 0.99 * std::exp(-1.0))));
  const bool eps_ok = eps_err <= 1e-12 && std::abs(epsilon(sched, 100) - 0.37420) < 5e-6;
  bool alpha_ok = true;
  for (int t = 0; t < 20; ++t) {
    auto pair = make_agent(3, {6}, rng);
    Hyperparameters h;
    h.alpha = 1.0;
    const Experience e{{{1, 0, 1}}, {uniform_index(rng, 6)}, uniform_real(rng, 0, 1), {{0, 1, 1}}};
    const auto lab = training_label(pair, e, h);
    alpha_ok = alpha_ok && lab.blended == lab.y;
  }
  double balance_worst = 0.0;
  int solves = 0;
  double ref_worst = 0.0;
  testsupport::RandomFeederOptions small;
  small.max_breakers = 7;
  small.max_islands = 1;
  for (int i = 0; i < 50; ++i) {
    const auto d = testsupport::random_feeder(rng, small);
    const Feeder g(d);
    BreakerStates s(g.breaker_count());
    for (auto& b : s) b = static_cast<std::uint8_t>(uniform_index(rng, 2));
    const auto sol = solve(g, s);
    const auto ref = ref::solve(d, s);
    if (sol.converged != ref.converged) ref_worst = INFINITY;
    if (!sol.converged) continue;
    ++solves;
    balance_worst = std::max(balance_worst, std::abs(sol.total_generation_kw() - sol.served_load_kw - sol.total_losses_kw));
    for (std::size_t b = 0; b < g.bus_count(); ++b) ref_worst = std::max(ref_worst, std::abs(sol.bus_voltage[b] - ref.vmag[b]));
  }
  for (const auto& name : builtin_feeder_names()) {
    const auto g = builtin_feeder(name);
    for (int k = 0; k < 200; ++k) {
      BreakerStates s(g.breaker_count());
      for (auto& b : s) b = static_cast<std::uint8_t>(uniform_index(rng, 2));
      const auto sol = solve(g, s);
      if (!sol.converged) continue;
      ++solves;
      balance_worst = std::max(balance_worst, std::abs(sol.total_generation_kw() - sol.served_load_kw - sol.total_losses_kw));
    }
  }
  const double t8s = seconds_since(t8);
  report(8, fd_worst < 1e-4 && eps_ok && alpha_ok && balance_worst < 1e-3 && ref_worst < 1e-5 && t8s < 60.0,
         fmt("gradient rel err %.2e (100 cases), epsilon err %.1e, alpha=1 exact %s, energy balance %.2e kW over %d "
             "solves, reference deviation %.2e p.u. on 50 feeders, %.1fs",
             fd_worst, eps_err, alpha_ok ? "yes" : "no", balance_worst, solves, ref_worst, t8s));

  // 9: oracle self-consistency
  const auto t9 = std::chrono::steady_clock::now();
  int agree = 0;
  for (int i = 0; i < 20; ++i) {
    const Feeder g(testsupport::random_feeder(rng));
    const auto a = brute_force(g);
    const auto b = brute_force_naive(g);
    agree += g.breaker_count() <= 10 && a.best_states == b.best_states &&
             std::abs(a.best_weighted_kw - b.best_weighted_kw) <= 1e-9 && a.feasible_count == b.feasible_count;
  }
  const auto dec = brute_force_decomposed(f);
  const bool dec_ok = dec.best_states == oracle.best_states && dec.best_weighted_kw == oracle.best_weighted_kw;
  const double t9s = seconds_since(t9);
  report(9, agree == 20 && dec_ok && t9s < 60.0,
         fmt("gray = naive on %d/20 random feeders; decomposed ieee13 %s %.0f kW vs exhaustive %s; %.1fs", agree,
             format_states(dec.best_states).c_str(), dec.best_weighted_kw, dec_ok ? "equal" : "different", t9s));

  std::printf("criterion 10 EXCLUDED: 8500-node results and published wall-clock times are out of scope at desk scale\n");
}

void slow_tier() {
  const auto f = builtin_feeder("ieee123");
  const auto oracle = brute_force(f);
  const auto dec = brute_force_decomposed(f);
  std::printf("  oracle ieee123 %s %.0f kW (decomposed %.0f kW)\n", format_states(oracle.best_states).c_str(),
              oracle.best_weighted_kw, dec.best_weighted_kw);

  auto masked = run(f, "ieee123 multi mask s1", kEpisodes123, 1, true);
  auto unmasked = run(f, "ieee123 multi nomask s1", kEpisodes123, 1, false);

  const auto gain = [](const Run& r) {
    const double a = first_window(r.result.logs).mean, b = final_window(r.result.logs).mean;
    return a != 0.0 ? (b - a) / std::abs(a) : INFINITY;
  };
  std::string conv;
  const bool masked_conv = converged(masked, conv);
  const double gm = gain(masked), gu = gain(unmasked);
  report(4, violations(masked.result.logs) == 0,
         fmt("%lld violations in the masked ieee123 run", violations(masked.result.logs)));
  report(6, gu < 0.10 && gm > 0.50 && masked_conv,
         fmt("unmasked final50 vs first50 %+.1f%% (need < 10%%), masked %+.1f%% (need > 50%%), masked convergence%s "
             "(need >= 0.95)",
             100 * gu, 100 * gm, conv.c_str()));

  const auto end = masked.trace.final_states();
  const bool end_ok = feasible(f, end);
  const double kw = restored_power(f, end).weighted_kw;
  report(7,
         oracle.best_weighted_kw == dec.best_weighted_kw && oracle.best_weighted_kw >= 0.94 * 2400.0 && end_ok &&
             kw >= 0.92 * oracle.best_weighted_kw,
         fmt("optimum %.0f kW = %.2f%% of 2400 kW (need >= 94%%); rollout ends %s, %s, %.0f kW = %.1f%% of optimum "
             "(need >= 92%%)",
             oracle.best_weighted_kw, 100 * oracle.best_weighted_kw / 2400.0, format_states(end).c_str(),
             end_ok ? "feasible" : "infeasible", kw, 100 * kw / oracle.best_weighted_kw));
}

}  // namespace

int main(int argc, char** argv) {
  std::string tier = "all";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--tier") == 0 && i + 1 < argc) {
      tier = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--tier fast|slow|all]\n");
      return 2;
    }
  }
  if (tier != "fast" && tier != "slow" && tier != "all") {
    std::fprintf(stderr, "unknown tier '%s'\n", tier.c_str());
    return 2;
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Run> masked13;
  if (tier != "slow") fast_tier(masked13);
  if (tier != "fast") slow_tier();
  std::printf("%s tier finished in %.1fs: %s\n", tier.c_str(), seconds_since(t0), any_failed ? "FAILURES" : "all pass");
  return any_failed ? 1 : 0;
}
