#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mgrestore/mgrestore.hpp"

namespace mgrestore::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// Everything a train/compare invocation depends on.
struct RunConfig {
  std::string name;  // variant label (compare only)
  std::string feeder = "ieee13";
  TrainingConfig training;
  bool has_seed = false;
  int eval_steps = 16;
  std::string out;
};

inline std::string on_off(bool b) { return b ? "on" : "off"; }

inline bool parse_on_off(const std::string& s, const char* what) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw ParseError(std::string(what) + " must be 'on' or 'off', got '" + s + "'");
}

inline AgentMode parse_agents(const std::string& s) {
  if (s == "multi") return AgentMode::multi;
  if (s == "single") return AgentMode::single;
  throw ParseError("agents must be 'multi' or 'single', got '" + s + "'");
}

inline std::string agents_name(AgentMode m) { return m == AgentMode::single ? "single" : "multi"; }

inline json config_to_json(const RunConfig& c) {
  const auto& t = c.training;
  json j{{"feeder", c.feeder},
         {"episodes", t.episodes},
         {"steps", t.steps_per_episode},
         {"sync_interval", t.sync_interval},
         {"seed", c.has_seed ? json(t.seed) : json(nullptr)},
         {"mask", on_off(t.masking)},
         {"agents", agents_name(t.agent_mode)},
         {"reward_mode", t.masking ? "masked" : "penalty"},
         {"penalty", t.penalty},
         {"gamma", t.hyper.gamma},
         {"alpha", t.hyper.alpha},
         {"eta", t.hyper.eta},
         {"batch_size", t.hyper.batch_size},
         {"capacity", t.hyper.capacity},
         {"hidden", t.hyper.hidden},
         {"eps_min", t.schedule.eps_min},
         {"eps_max", t.schedule.eps_max},
         {"lambda", t.schedule.lambda},
         {"eval_steps", c.eval_steps},
         {"out", c.out}};
  if (!c.name.empty()) j["name"] = c.name;
  return j;
}

// Overlays the keys present in `j` onto `c`; unknown keys are rejected.
inline void apply_config(const json& j, RunConfig& c, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": configuration must be a JSON object");
  auto& t = c.training;
  std::string reward_mode;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "name") c.name = value.get<std::string>();
      else if (key == "feeder") c.feeder = value.get<std::string>();
      else if (key == "episodes") t.episodes = value.get<int>();
      else if (key == "steps") t.steps_per_episode = value.get<int>();
      else if (key == "sync_interval") t.sync_interval = value.get<int>();
      else if (key == "seed") {
        if (!value.is_null()) {
          t.seed = value.get<std::uint64_t>();
          c.has_seed = true;
        }
      } else if (key == "mask") t.masking = value.is_boolean() ? value.get<bool>() : parse_on_off(value.get<std::string>(), "mask");
      else if (key == "agents") t.agent_mode = parse_agents(value.get<std::string>());
      else if (key == "reward_mode") reward_mode = value.get<std::string>();
      else if (key == "penalty") t.penalty = value.get<double>();
      else if (key == "gamma") t.hyper.gamma = value.get<double>();
      else if (key == "alpha") t.hyper.alpha = value.get<double>();
      else if (key == "eta") t.hyper.eta = value.get<double>();
      else if (key == "batch_size") t.hyper.batch_size = value.get<std::size_t>();
      else if (key == "capacity") t.hyper.capacity = value.get<std::size_t>();
      else if (key == "hidden") t.hyper.hidden = value.get<std::vector<std::size_t>>();
      else if (key == "eps_min") t.schedule.eps_min = value.get<double>();
      else if (key == "eps_max") t.schedule.eps_max = value.get<double>();
      else if (key == "lambda") t.schedule.lambda = value.get<double>();
      else if (key == "eval_steps") c.eval_steps = value.get<int>();
      else if (key == "out") c.out = value.get<std::string>();
      else throw ParseError(where + ": unknown key '" + key + "'");
    } catch (const json::exception&) {
      throw ParseError(where + ": key '" + key + "' has the wrong type");
    }
  }
  // The reward mode follows from masking; an explicit value must agree.
  if (!reward_mode.empty() && reward_mode != (t.masking ? "masked" : "penalty"))
    throw ParseError(where + ": reward_mode '" + reward_mode + "' contradicts mask " + on_off(t.masking));
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline fs::path ensure_dir(const std::string& dir) {
  if (dir.empty()) throw Error("an output directory is required (--out)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

// Built-in name, or a path to a feeder document.
inline Feeder resolve_feeder(const std::string& name) {
  const auto names = builtin_feeder_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) return builtin_feeder(name);
  std::error_code ec;
  if (!fs::is_regular_file(name, ec)) throw UnknownFeederError(name);
  std::ifstream in(name);
  if (!in) throw Error("cannot read feeder file '" + name + "'");
  return load_feeder(in);
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline bool verbose() {
  const char* v = std::getenv("MGRESTORE_VERBOSE");
  return v && *v && std::string(v) != "0";
}

inline std::string episodes_csv(const std::vector<EpisodeLog>& logs) {
  std::string s = "episode,R,restored_kw,violations,epsilon,capacity_scaled_R\n";
  for (const auto& l : logs)
    s += std::to_string(l.episode) + "," + num(l.reward) + "," + num(l.restored_kw) + "," +
         std::to_string(l.violations) + "," + num(l.epsilon) + "," + num(l.capacity_scaled_reward) + "\n";
  return s;
}

inline std::string trace_csv(const Feeder& f, const RestorationTrace& trace) {
  std::string s = "step,agent,breaker,toggle,served_kw,reward\n";
  for (const auto& st : trace.steps)
    for (std::size_t i = 0; i < st.toggles.size(); ++i) {
      const auto& br = f.breakers()[f.agent_breakers(i)[st.toggles[i].breaker]];
      s += std::to_string(st.step) + "," + std::to_string(i) + "," + br.id + "," +
           (st.toggles[i].close ? "close" : "open") + "," + num(st.served_kw) + "," + num(st.reward) + "\n";
    }
  return s;
}

inline std::string trace_summary(const Feeder& f, const RestorationTrace& trace) {
  if (trace.steps.empty()) return "empty trace";
  const auto& last = trace.steps.back();
  return "greedy rollout ends at " + format_states(last.states) + " serving " + num(last.served_kw) + " of " +
         num(f.generation_capacity_kw()) + " kW capacity, " + std::to_string(trace.violations) + " violating steps";
}

inline std::vector<Checkpoint> load_checkpoints(const std::string& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    const auto name = e.path().filename().string();
    if (name.rfind("agent_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
  }
  if (ec) throw Error("cannot read checkpoint directory '" + dir + "'");
  if (files.empty()) throw Error("no agent_*.json checkpoints in '" + dir + "'");
  std::vector<Checkpoint> cps;
  for (const auto& p : files) cps.push_back(checkpoint_from_json(read_json_file(p.string())));
  return cps;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json oracle_to_json(const Feeder& f, const OracleResult& r, const std::string& method) {
  std::vector<std::string> closed;
  for (std::size_t b = 0; b < r.best_states.size(); ++b)
    if (r.best_states[b]) closed.push_back(f.breakers()[b].id);
  return {{"format_version", 1},
          {"feeder", f.name()},
          {"feeder_hash", feeder_hash(f)},
          {"method", method},
          {"best_states", format_states(r.best_states)},
          {"closed_breakers", closed},
          {"best_weighted_kw", r.best_weighted_kw},
          {"best_served_kw", r.best_served_kw},
          {"feasible_count", r.feasible_count},
          {"evaluated_count", r.evaluated_count}};
}

// Training flags shared by train and compare. Values start at the defaults so
// --help shows them; a flag only overrides when it was given.
struct TrainingFlags {
  RunConfig defaults;
  std::string feeder, mask, agents, out, config;
  int episodes, steps, sync_interval, eval_steps;
  std::uint64_t seed = 0;
  double penalty, gamma, alpha, eta, eps_min, eps_max, lambda;
  std::size_t batch_size, capacity;
  std::vector<std::size_t> hidden;
  bool print_config = false;
  std::map<std::string, CLI::Option*> given;

  TrainingFlags() {
    const auto& t = defaults.training;
    feeder = defaults.feeder;
    mask = on_off(t.masking);
    agents = agents_name(t.agent_mode);
    episodes = t.episodes;
    steps = t.steps_per_episode;
    sync_interval = t.sync_interval;
    eval_steps = defaults.eval_steps;
    penalty = t.penalty;
    gamma = t.hyper.gamma;
    alpha = t.hyper.alpha;
    eta = t.hyper.eta;
    batch_size = t.hyper.batch_size;
    capacity = t.hyper.capacity;
    hidden = t.hyper.hidden;
    eps_min = t.schedule.eps_min;
    eps_max = t.schedule.eps_max;
    lambda = t.schedule.lambda;
  }

  void attach(CLI::App* app) {
    auto add = [&](const std::string& key, auto& var, const std::string& help) {
      given[key] = app->add_option("--" + key, var, help)->capture_default_str();
    };
    add("feeder", feeder, "built-in feeder name (ieee13, ieee123) or path to a feeder document");
    app->add_option("--config", config, "JSON configuration file; flags override its values");
    add("episodes", episodes, "training episodes");
    add("steps", steps, "steps per episode");
    add("sync-interval", sync_interval, "environment steps between target-network syncs");
    given["seed"] = app->add_option("--seed", seed, "random seed (required; no time-based default)");
    add("mask", mask, "invalid-action masking: on|off (off uses the penalty reward)");
    add("agents", agents, "multi (one agent per microgrid) or single (one agent for all breakers)");
    add("penalty", penalty, "reward of a violating step when masking is off");
    add("gamma", gamma, "discount factor");
    add("alpha", alpha, "label blend rate");
    add("eta", eta, "gradient step size");
    add("batch-size", batch_size, "replay mini-batch size");
    add("capacity", capacity, "replay buffer capacity");
    given["hidden"] = app->add_option("--hidden", hidden, "hidden layer widths, e.g. 64,64")
                          ->delimiter(',')
                          ->capture_default_str();
    add("eps-min", eps_min, "epsilon floor");
    add("eps-max", eps_max, "initial epsilon");
    add("lambda", lambda, "epsilon decay per episode");
    add("eval-steps", eval_steps, "steps of the greedy rollout written after training");
    given["out"] = app->add_option("--out", out, "output directory");
    app->add_flag("--print-config", print_config, "print the fully resolved configuration and exit");
  }

  bool has(const std::string& key) const {
    auto it = given.find(key);
    return it != given.end() && it->second->count() > 0;
  }

  // defaults <- config file <- `overlay` document (if any) <- flags
  RunConfig resolve(const json* overlay = nullptr, const std::string& overlay_name = "") const {
    RunConfig c = defaults;
    if (!config.empty()) apply_config(read_json_file(config), c, config);
    if (overlay) apply_config(*overlay, c, overlay_name);
    auto& t = c.training;
    if (has("feeder")) c.feeder = feeder;
    if (has("episodes")) t.episodes = episodes;
    if (has("steps")) t.steps_per_episode = steps;
    if (has("sync-interval")) t.sync_interval = sync_interval;
    if (has("seed")) {
      t.seed = seed;
      c.has_seed = true;
    }
    if (has("mask")) t.masking = parse_on_off(mask, "--mask");
    if (has("agents")) t.agent_mode = parse_agents(agents);
    if (has("penalty")) t.penalty = penalty;
    if (has("gamma")) t.hyper.gamma = gamma;
    if (has("alpha")) t.hyper.alpha = alpha;
    if (has("eta")) t.hyper.eta = eta;
    if (has("batch-size")) t.hyper.batch_size = batch_size;
    if (has("capacity")) t.hyper.capacity = capacity;
    if (has("hidden")) t.hyper.hidden = hidden;
    if (has("eps-min")) t.schedule.eps_min = eps_min;
    if (has("eps-max")) t.schedule.eps_max = eps_max;
    if (has("lambda")) t.schedule.lambda = lambda;
    if (has("eval-steps")) c.eval_steps = eval_steps;
    if (has("out")) c.out = out;
    return c;
  }
};

inline void require_seed(const RunConfig& c) {
  if (!c.has_seed) throw Error("a seed is required: pass --seed or set \"seed\" in the config file");
}

inline int cmd_train(const TrainingFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig c = flags.resolve();
  if (flags.print_config) {
    out << config_to_json(c).dump(2) << "\n";
    return 0;
  }
  require_seed(c);
  if (c.eval_steps <= 0) throw Error("eval-steps must be positive");
  const Feeder f = resolve_feeder(c.feeder);
  check_config(c.training);
  const auto dir = ensure_dir(c.out);
  json resolved = config_to_json(c);
  resolved["feeder_hash"] = feeder_hash(f);
  write_file(dir / "config.json", resolved.dump(2) + "\n");

  const bool loud = verbose();
  auto result = train(f, c.training, [&](const EpisodeLog& l) {
    if (loud) err << "episode " << l.episode << " R=" << num(l.reward) << " eps=" << num(l.epsilon) << "\n";
  });
  write_file(dir / "episodes.csv", episodes_csv(result.logs));
  for (const auto& cp : make_checkpoints(result.models))
    write_file(dir / ("agent_" + std::to_string(cp.agent) + ".json"), checkpoint_to_json(cp).dump() + "\n");
  const auto trace = execute(result.models, c.eval_steps, c.training.penalty);
  write_file(dir / "trace.csv", trace_csv(result.models.feeder, trace));

  long long violations = 0;
  for (const auto& l : result.logs) violations += l.violations;
  const auto last = final_window(result.logs);
  out << "trained " << result.logs.size() << " episodes on " << f.name() << " (" << result.models.agents.size()
      << " agents, mask " << on_off(c.training.masking) << "); final mean R " << num(last.mean) << " +/- "
      << num(last.stddev) << ", " << violations << " training violations\n";
  out << trace_summary(result.models.feeder, trace) << "\n";
  return 0;
}

inline int cmd_eval(const std::string& feeder, const std::string& checkpoints, int steps, double penalty,
                    const std::string& out_dir, bool strict, std::ostream& out) {
  if (steps <= 0) throw Error("steps must be positive");
  const Feeder f = resolve_feeder(feeder);
  const auto models = bind_checkpoints(f, load_checkpoints(checkpoints), strict);
  const auto trace = execute(models, steps, penalty);
  const auto csv = trace_csv(models.feeder, trace);
  if (out_dir.empty()) {
    out << csv;
  } else {
    write_file(ensure_dir(out_dir) / "trace.csv", csv);
  }
  out << trace_summary(models.feeder, trace) << "\n";
  return 0;
}

inline int cmd_oracle(const std::string& feeder, const std::string& method, unsigned threads, bool force,
                      const std::string& out_dir, std::ostream& out) {
  const Feeder f = resolve_feeder(feeder);
  const auto hash = feeder_hash(f);
  fs::path cache;
  if (!out_dir.empty()) {
    cache = ensure_dir(out_dir) / "oracle.json";
    std::error_code ec;
    if (!force && fs::is_regular_file(cache, ec)) {
      try {
        const auto cached = read_json_file(cache.string());
        if (cached.value("feeder_hash", "") == hash && cached.value("method", "") == method) {
          out << "cached " << cache.string() << ": best " << cached.at("best_states").get<std::string>()
              << " weighted " << num(cached.at("best_weighted_kw").get<double>()) << " kW\n";
          return 0;
        }
      } catch (const std::exception&) {
        // unreadable cache: recompute
      }
    }
  }
  OracleResult r;
  if (method == "gray") r = brute_force(f, {threads});
  else if (method == "naive") r = brute_force_naive(f);
  else if (method == "decomposed") r = brute_force_decomposed(f);
  else throw Error("method must be gray, naive or decomposed, got '" + method + "'");

  json doc = oracle_to_json(f, r, method);
  doc["timestamp"] = utc_timestamp();
  doc["cache_reused"] = false;
  if (!cache.empty()) write_file(cache, doc.dump(2) + "\n");
  out << "best " << format_states(r.best_states) << " weighted " << num(r.best_weighted_kw) << " kW, served "
      << num(r.best_served_kw) << " kW (" << r.feasible_count << " feasible of " << r.evaluated_count << ")\n";
  return 0;
}

inline int cmd_powerflow(const std::string& feeder, const std::string& states, const std::string& out_dir,
                         std::ostream& out) {
  const Feeder f = resolve_feeder(feeder);
  const auto s = parse_states(f, states);
  const auto sol = solve(f, s);
  const auto rep = check_constraints(f, sol);
  const auto rp = restored_power(f, s);
  auto ok = [](bool b) { return b ? "ok" : "VIOLATED"; };
  out << "states " << format_states(s) << ": " << (sol.converged ? "converged" : "diverged") << " in "
      << sol.iterations << " iterations\n";
  out << "served " << num(sol.served_load_kw) << " kW (weighted " << num(rp.weighted_kw) << "), losses "
      << num(sol.total_losses_kw) << " kW, generation " << num(sol.total_generation_kw()) << " kW\n";
  out << "power balance " << ok(rep.power_balance) << " (margin " << num(rep.power_balance_margin_kw) << " kW)\n";
  out << "voltage " << ok(rep.voltage) << (rep.worst_bus.empty() ? "" : " (worst " + rep.worst_bus + " at " +
                                                                            num(rep.worst_voltage) + " pu)")
      << "\n";
  out << "generator P " << ok(rep.gen_p) << ", generator Q " << ok(rep.gen_q) << "\n";
  out << "line rating " << ok(rep.line_s) << (rep.worst_line.empty() ? "" : " (worst " + rep.worst_line + " at " +
                                                                                num(100 * rep.worst_line_loading) + "%)")
      << "\n";
  out << (rep.all_ok() ? "feasible" : "infeasible") << "\n";
  if (!out_dir.empty()) {
    const auto dir = ensure_dir(out_dir);
    std::string buses = "bus,energized,v_pu\n";
    for (std::size_t b = 0; b < f.bus_count(); ++b)
      buses += f.buses()[b].id + "," + std::to_string(sol.bus_energized[b]) + "," + num(sol.bus_voltage[b]) + "\n";
    std::string lines = "line,energized,p_kw,q_kvar,s_kva,loading\n";
    for (std::size_t l = 0; l < f.line_count(); ++l) {
      const auto& fl = sol.line_flow[l];
      lines += f.lines()[l].id + "," + std::to_string(sol.line_energized[l]) + "," + num(fl.p_kw) + "," +
               num(fl.q_kvar) + "," + num(fl.s_kva) + "," + num(fl.s_kva / f.lines()[l].s_rating_kva) + "\n";
    }
    std::string gens = "generator,online,p_kw,q_kvar\n";
    for (std::size_t g = 0; g < f.generators().size(); ++g)
      gens += f.generators()[g].id + "," + std::to_string(sol.generator[g].online ? 1 : 0) + "," +
              num(sol.generator[g].p_kw) + "," + num(sol.generator[g].q_kvar) + "\n";
    write_file(dir / "buses.csv", buses);
    write_file(dir / "lines.csv", lines);
    write_file(dir / "generators.csv", gens);
  }
  return 0;
}

inline int cmd_validate(const std::string& feeder, std::ostream& out, std::ostream& err) {
  const auto names = builtin_feeder_names();
  std::optional<Feeder> f;
  if (std::find(names.begin(), names.end(), feeder) != names.end()) {
    f = builtin_feeder(feeder);
  } else {
    std::error_code ec;
    if (!fs::is_regular_file(feeder, ec)) throw UnknownFeederError(feeder);
    f = Feeder(feeder_from_json(read_json_file(feeder)));
  }
  const auto report = validate_feeder(*f);
  for (const auto& v : report.violations) out << v << "\n";
  if (!report.ok()) {
    err << "error: feeder '" << f->name() << "' has " << report.violations.size() << " violation(s)\n";
    return 1;
  }
  out << "ok: " << f->name() << " (" << f->bus_count() << " buses, " << f->line_count() << " lines, "
      << f->breaker_count() << " breakers, " << f->agent_count() << " agents, " << num(f->total_load_kw())
      << " kW load, " << num(f->generation_capacity_kw()) << " kW generation)\n";
  return 0;
}

inline std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// Fields every compared variant must share; masking and agent mode may differ.
inline void check_common(const std::vector<RunConfig>& runs) {
  const auto& a = runs.front();
  for (const auto& b : runs) {
    const auto& x = a.training;
    const auto& y = b.training;
    auto differ = [&](const char* what) {
      throw Error("variants '" + a.name + "' and '" + b.name + "' differ in " + what);
    };
    if (b.feeder != a.feeder) differ("feeder");
    if (x.seed != y.seed) differ("seed");
    if (x.episodes != y.episodes || x.steps_per_episode != y.steps_per_episode) differ("episode counts");
    if (x.sync_interval != y.sync_interval) differ("sync interval");
    if (!(x.hyper == y.hyper)) differ("hyperparameters");
    if (!(x.schedule == y.schedule)) differ("epsilon schedule");
    if (x.penalty != y.penalty) differ("penalty");
  }
}

inline int cmd_compare(const TrainingFlags& flags, const std::vector<std::string>& variant_paths, std::ostream& out,
                       std::ostream& err) {
  std::vector<RunConfig> runs;
  for (const auto& p : variant_paths) {
    const auto doc = read_json_file(p);
    RunConfig c = flags.resolve(&doc, p);
    if (c.name.empty()) c.name = stem_of(p);
    runs.push_back(std::move(c));
  }
  if (runs.empty()) throw Error("compare needs at least one variant file");
  if (flags.print_config) {
    json all = json::array();
    for (const auto& r : runs) all.push_back(config_to_json(r));
    out << all.dump(2) << "\n";
    return 0;
  }
  for (const auto& r : runs) {
    require_seed(r);
    check_config(r.training);
    if (std::count_if(runs.begin(), runs.end(), [&](const RunConfig& o) { return o.name == r.name; }) > 1)
      throw Error("duplicate variant name '" + r.name + "'");
  }
  check_common(runs);
  const Feeder f = resolve_feeder(runs.front().feeder);
  const std::string out_dir = flags.has("out") ? flags.out : runs.front().out;
  const auto dir = ensure_dir(out_dir);

  json resolved = json::array();
  std::vector<Variant> variants;
  for (const auto& r : runs) {
    resolved.push_back(config_to_json(r));
    variants.push_back({r.name, r.training});
  }
  write_file(dir / "config.json", resolved.dump(2) + "\n");
  if (verbose()) err << "training " << variants.size() << " variants\n";

  std::vector<TrainingResult> results;
  const auto rows = compare(f, variants, &results);
  const bool relative = rows.size() > 1;
  std::string csv = "variant,convergence_episode,first50_mean,first50_std,final50_mean,final50_std,violations,"
                    "wall_seconds";
  csv += relative ? ",final50_mean_vs_first_pct\n" : "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv += r.name + "," + std::to_string(r.convergence_episode) + "," + num(r.first.mean) + "," +
           num(r.first.stddev) + "," + num(r.last.mean) + "," + num(r.last.stddev) + "," +
           std::to_string(r.violations) + "," + num(r.wall_seconds);
    if (relative) {
      const double base = rows.front().last.mean;
      csv += "," + (base != 0.0 ? num(100.0 * (r.last.mean - base) / std::abs(base)) : std::string("nan"));
    }
    csv += "\n";
    write_file(dir / ("episodes_" + r.name + ".csv"), episodes_csv(results[i].logs));
  }
  write_file(dir / "comparison.csv", csv);
  out << csv;
  return 0;
}

/// Entry point behind the executable; returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Load restoration in networked microgrids with multi-agent deep Q-learning", "mgrestore"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  TrainingFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train agents, write episodes.csv, checkpoints and a greedy trace");
  train_flags.attach(train_cmd);

  std::string eval_feeder = "ieee13", eval_checkpoints, eval_out;
  int eval_steps = 16;
  double eval_penalty = -1.0;
  bool eval_strict = false;
  auto* eval_cmd = app.add_subcommand("eval", "greedy decentralized rollout from saved checkpoints");
  eval_cmd->add_option("--feeder", eval_feeder, "built-in feeder name or feeder document path")->capture_default_str();
  eval_cmd->add_option("--checkpoints", eval_checkpoints, "directory holding agent_<i>.json")->required();
  eval_cmd->add_option("--steps", eval_steps, "rollout length")->capture_default_str();
  eval_cmd->add_option("--penalty", eval_penalty, "reward reported for a violating step")->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "write trace.csv here instead of printing it");
  eval_cmd->add_flag("--strict", eval_strict, "reject checkpoints trained on a feeder with a different hash");

  std::string oracle_feeder = "ieee13", oracle_method = "gray", oracle_out;
  unsigned oracle_threads = 0;
  bool oracle_force = false;
  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive search for the best feasible breaker configuration");
  oracle_cmd->add_option("--feeder", oracle_feeder, "built-in feeder name or feeder document path")
      ->capture_default_str();
  oracle_cmd->add_option("--method", oracle_method, "gray, naive or decomposed")->capture_default_str();
  oracle_cmd->add_option("--threads", oracle_threads, "worker threads for gray (0: all cores)")->capture_default_str();
  oracle_cmd->add_option("--out", oracle_out, "directory for oracle.json (reused when the feeder hash matches)");
  oracle_cmd->add_flag("--force", oracle_force, "recompute even when a matching oracle.json exists");

  TrainingFlags compare_flags;
  std::vector<std::string> variant_paths;
  auto* compare_cmd = app.add_subcommand("compare", "train several variants with shared settings and tabulate them");
  compare_flags.attach(compare_cmd);
  compare_cmd->add_option("variants", variant_paths, "variant configuration files (JSON)")->required();

  std::string pf_feeder = "ieee13", pf_states, pf_out;
  auto* pf_cmd = app.add_subcommand("powerflow", "solve one breaker configuration and report its constraints");
  pf_cmd->add_option("--feeder", pf_feeder, "built-in feeder name or feeder document path")->capture_default_str();
  pf_cmd->add_option("--states", pf_states, "breaker states in feeder order, e.g. 011000101")->required();
  pf_cmd->add_option("--out", pf_out, "write buses.csv, lines.csv and generators.csv here");

  std::string val_feeder = "ieee13";
  auto* val_cmd = app.add_subcommand("validate", "check a feeder for structural problems");
  val_cmd->add_option("--feeder", val_feeder, "built-in feeder name or feeder document path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << "\n";
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags, out, err);
    if (*eval_cmd) return cmd_eval(eval_feeder, eval_checkpoints, eval_steps, eval_penalty, eval_out, eval_strict, out);
    if (*oracle_cmd) return cmd_oracle(oracle_feeder, oracle_method, oracle_threads, oracle_force, oracle_out, out);
    if (*compare_cmd) return cmd_compare(compare_flags, variant_paths, out, err);
    if (*pf_cmd) return cmd_powerflow(pf_feeder, pf_states, pf_out, out);
    if (*val_cmd) return cmd_validate(val_feeder, out, err);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mgrestore::cli
