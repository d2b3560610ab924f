#pragma once

#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mgrestore/errors.hpp"

namespace mgrestore {

// Per-unit base used to convert kW/kvar into the solver's per-unit system.
struct PowerBase {
  double s_base_kva = 1000.0;
  double v_base_kv = 4.16;

  bool operator==(const PowerBase&) const = default;
};

struct Bus {
  std::string id;
  double v_min = 0.95;  // p.u.
  double v_max = 1.05;  // p.u.

  bool operator==(const Bus&) const = default;
};

struct Line {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double resistance = 0.0;  // p.u.
  double reactance = 0.0;   // p.u.
  double s_rating_kva = 0.0;

  bool operator==(const Line&) const = default;
};

struct Breaker {
  std::string id;
  std::string line_id;
  bool closed = false;  // normal (pre-outage) state

  bool operator==(const Breaker&) const = default;
};

struct LoadPoint {
  std::string id;
  std::string bus_id;
  double p_rated_kw = 0.0;
  double q_rated_kvar = 0.0;
  double weight = 1.0;  // priority in (0, 1]
  std::string breaker_id;

  bool operator==(const LoadPoint&) const = default;
};

struct Generator {
  std::string id;
  std::string bus_id;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  double q_min_kvar = 0.0;
  double q_max_kvar = 0.0;

  bool operator==(const Generator&) const = default;
};

// agents[i] is the ordered list of breaker ids controlled by agent i. The
// order fixes the layout of that agent's observation and action vectors.
struct MicrogridPartition {
  std::vector<std::vector<std::string>> agents;

  bool operator==(const MicrogridPartition&) const = default;
};

struct FeederData {
  std::string name;
  PowerBase base;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Breaker> breakers;
  std::vector<LoadPoint> loads;
  std::vector<Generator> generators;
  MicrogridPartition partition;

  bool operator==(const FeederData&) const = default;
};

/// Immutable, reference-resolved feeder.
///
/// Construction resolves every id cross-reference and throws ReferenceError
/// on a dangling one. It does not check the physical invariants (radiality,
/// partition coverage, value ranges); use validate_feeder for that. Copies
/// share the same underlying storage.
class Feeder {
 public:
  struct Adjacent {
    std::size_t line;
    std::size_t bus;
  };

  explicit Feeder(FeederData data) : impl_(std::make_shared<Impl>(std::move(data))) {}

  const FeederData& data() const { return impl_->data; }
  const std::string& name() const { return impl_->data.name; }
  const PowerBase& base() const { return impl_->data.base; }
  const std::vector<Bus>& buses() const { return impl_->data.buses; }
  const std::vector<Line>& lines() const { return impl_->data.lines; }
  const std::vector<Breaker>& breakers() const { return impl_->data.breakers; }
  const std::vector<LoadPoint>& loads() const { return impl_->data.loads; }
  const std::vector<Generator>& generators() const { return impl_->data.generators; }
  const MicrogridPartition& partition() const { return impl_->data.partition; }

  std::size_t bus_count() const { return buses().size(); }
  std::size_t line_count() const { return lines().size(); }
  std::size_t breaker_count() const { return breakers().size(); }
  std::size_t agent_count() const { return impl_->agent_breakers.size(); }

  std::size_t line_from(std::size_t line) const { return impl_->line_from[line]; }
  std::size_t line_to(std::size_t line) const { return impl_->line_to[line]; }
  std::size_t breaker_line(std::size_t breaker) const { return impl_->breaker_line[breaker]; }
  const std::vector<std::size_t>& line_breakers(std::size_t line) const {
    return impl_->line_breakers[line];
  }
  std::size_t load_bus(std::size_t load) const { return impl_->load_bus[load]; }
  std::size_t load_breaker(std::size_t load) const { return impl_->load_breaker[load]; }
  std::size_t generator_bus(std::size_t gen) const { return impl_->gen_bus[gen]; }
  const std::vector<Adjacent>& adjacency(std::size_t bus) const { return impl_->adjacency[bus]; }
  const std::vector<std::size_t>& loads_at(std::size_t bus) const { return impl_->bus_loads[bus]; }
  const std::vector<std::size_t>& generators_at(std::size_t bus) const {
    return impl_->bus_gens[bus];
  }

  // Breaker indices of agent i, in partition order.
  const std::vector<std::size_t>& agent_breakers(std::size_t agent) const {
    return impl_->agent_breakers[agent];
  }
  const std::vector<std::vector<std::size_t>>& agent_layout() const {
    return impl_->agent_breakers;
  }

  std::optional<std::size_t> find_bus(std::string_view id) const { return find(impl_->bus_ids, id); }
  std::optional<std::size_t> find_line(std::string_view id) const {
    return find(impl_->line_ids, id);
  }
  std::optional<std::size_t> find_breaker(std::string_view id) const {
    return find(impl_->breaker_ids, id);
  }
  std::optional<std::size_t> find_load(std::string_view id) const {
    return find(impl_->load_ids, id);
  }

  double total_load_kw() const {
    double total = 0.0;
    for (const auto& l : loads()) total += l.p_rated_kw;
    return total;
  }

  double generation_capacity_kw() const {
    double total = 0.0;
    for (const auto& g : generators()) total += g.p_max_kw;
    return total;
  }

  // Same topology, loads and generators, with every breaker handed to a
  // single agent (agent order, then list order).
  Feeder with_single_agent() const {
    FeederData d = data();
    std::vector<std::string> all;
    for (const auto& ids : d.partition.agents) all.insert(all.end(), ids.begin(), ids.end());
    d.partition.agents = {std::move(all)};
    return Feeder(std::move(d));
  }

 private:
  using IdMap = std::unordered_map<std::string, std::size_t>;

  struct Impl {
    explicit Impl(FeederData d) : data(std::move(d)) { resolve(); }

    FeederData data;
    IdMap bus_ids, line_ids, breaker_ids, load_ids;
    std::vector<std::size_t> line_from, line_to, breaker_line, load_bus, load_breaker, gen_bus;
    std::vector<std::vector<std::size_t>> line_breakers, bus_loads, bus_gens, agent_breakers;
    std::vector<std::vector<Adjacent>> adjacency;

    static IdMap index(const auto& items) {
      IdMap m;
      for (std::size_t i = 0; i < items.size(); ++i) m.emplace(items[i].id, i);  // first wins
      return m;
    }

    static std::size_t lookup(const IdMap& m, const std::string& id, const char* kind,
                              const std::string& owner) {
      auto it = m.find(id);
      if (it == m.end())
        throw ReferenceError(owner + " references unknown " + kind + " '" + id + "'");
      return it->second;
    }

    void resolve() {
      bus_ids = index(data.buses);
      line_ids = index(data.lines);
      breaker_ids = index(data.breakers);
      load_ids = index(data.loads);

      adjacency.resize(data.buses.size());
      bus_loads.resize(data.buses.size());
      bus_gens.resize(data.buses.size());
      line_breakers.resize(data.lines.size());

      for (const auto& l : data.lines) {
        const auto from = lookup(bus_ids, l.from_bus, "bus", "line " + l.id);
        const auto to = lookup(bus_ids, l.to_bus, "bus", "line " + l.id);
        const auto idx = line_from.size();
        line_from.push_back(from);
        line_to.push_back(to);
        adjacency[from].push_back({idx, to});
        if (to != from) adjacency[to].push_back({idx, from});
      }
      for (std::size_t b = 0; b < data.breakers.size(); ++b) {
        const auto& br = data.breakers[b];
        const auto line = lookup(line_ids, br.line_id, "line", "breaker " + br.id);
        breaker_line.push_back(line);
        line_breakers[line].push_back(b);
      }
      for (std::size_t i = 0; i < data.loads.size(); ++i) {
        const auto& ld = data.loads[i];
        load_bus.push_back(lookup(bus_ids, ld.bus_id, "bus", "load " + ld.id));
        load_breaker.push_back(lookup(breaker_ids, ld.breaker_id, "breaker", "load " + ld.id));
        bus_loads[load_bus.back()].push_back(i);
      }
      for (std::size_t i = 0; i < data.generators.size(); ++i) {
        const auto& g = data.generators[i];
        gen_bus.push_back(lookup(bus_ids, g.bus_id, "bus", "generator " + g.id));
        bus_gens[gen_bus.back()].push_back(i);
      }
      for (std::size_t a = 0; a < data.partition.agents.size(); ++a) {
        std::vector<std::size_t> ids;
        for (const auto& id : data.partition.agents[a])
          ids.push_back(lookup(breaker_ids, id, "breaker", "partition agent " + std::to_string(a)));
        agent_breakers.push_back(std::move(ids));
      }
    }
  };

  static std::optional<std::size_t> find(const IdMap& m, std::string_view id) {
    auto it = m.find(std::string(id));
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  std::shared_ptr<const Impl> impl_;
};

// Per-breaker binary state vector; 1 = closed.
using BreakerStates = std::vector<std::uint8_t>;

inline BreakerStates all_open(const Feeder& f) { return BreakerStates(f.breaker_count(), 0); }
inline BreakerStates all_closed(const Feeder& f) { return BreakerStates(f.breaker_count(), 1); }

// A line conducts iff every breaker mounted on it is closed.
inline std::vector<std::uint8_t> closed_lines(const Feeder& f, const BreakerStates& states) {
  std::vector<std::uint8_t> closed(f.line_count(), 1);
  for (std::size_t b = 0; b < f.breaker_count(); ++b)
    if (!states[b]) closed[f.breaker_line(b)] = 0;
  return closed;
}

// Buses connected to at least one generator through conducting lines.
inline std::vector<std::uint8_t> energized_buses(const Feeder& f,
                                                 const std::vector<std::uint8_t>& line_closed) {
  std::vector<std::uint8_t> on(f.bus_count(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t g = 0; g < f.generators().size(); ++g) {
    const auto bus = f.generator_bus(g);
    if (!on[bus]) {
      on[bus] = 1;
      stack.push_back(bus);
    }
  }
  while (!stack.empty()) {
    const auto bus = stack.back();
    stack.pop_back();
    for (const auto& adj : f.adjacency(bus)) {
      if (!line_closed[adj.line] || on[adj.bus]) continue;
      on[adj.bus] = 1;
      stack.push_back(adj.bus);
    }
  }
  return on;
}

inline BreakerStates parse_states(const Feeder& f, std::string_view bits) {
  if (bits.size() != f.breaker_count())
    throw ParseError("breaker-state string has " + std::to_string(bits.size()) +
                     " characters, feeder has " + std::to_string(f.breaker_count()) + " breakers");
  BreakerStates s;
  for (char c : bits) {
    if (c != '0' && c != '1') throw ParseError("breaker-state string must contain only 0 and 1");
    s.push_back(c == '1');
  }
  return s;
}

inline std::string format_states(const BreakerStates& s) {
  std::string out;
  for (auto v : s) out.push_back(v ? '1' : '0');
  return out;
}

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks every feeder invariant and reports each offending element.
///
/// Topology rule: with all breakers closed the network must be a forest in
/// which every tree holds at least one generator. Networked microgrids are
/// modelled as electrically separate islands, so full connectivity is not
/// required.
inline ValidationReport validate_feeder(const Feeder& f) {
  ValidationReport r;
  auto add = [&](std::string msg) { r.violations.push_back(std::move(msg)); };

  auto check_unique = [&](const auto& items, const char* kind) {
    std::set<std::string> seen;
    for (const auto& it : items)
      if (!seen.insert(it.id).second) add(std::string("duplicate ") + kind + " id " + it.id);
  };
  check_unique(f.buses(), "bus");
  check_unique(f.lines(), "line");
  check_unique(f.breakers(), "breaker");
  check_unique(f.loads(), "load");
  check_unique(f.generators(), "generator");

  if (!(f.base().s_base_kva > 0.0)) add("s_base_kva must be positive");
  if (!(f.base().v_base_kv > 0.0)) add("v_base_kv must be positive");

  for (const auto& b : f.buses())
    if (!(0.0 < b.v_min && b.v_min < b.v_max)) add("bus " + b.id + " has invalid voltage limits");
  for (std::size_t i = 0; i < f.line_count(); ++i) {
    const auto& l = f.lines()[i];
    if (l.resistance < 0.0) add("line " + l.id + " has negative resistance");
    if (l.reactance < 0.0) add("line " + l.id + " has negative reactance");
    if (!(l.s_rating_kva > 0.0)) add("line " + l.id + " has non-positive s_rating");
    if (f.line_from(i) == f.line_to(i)) add("line " + l.id + " connects bus " + l.from_bus + " to itself");
  }
  for (const auto& l : f.loads()) {
    if (l.p_rated_kw < 0.0) add("load " + l.id + " has negative p_rated");
    if (!(l.weight > 0.0 && l.weight <= 1.0)) add("load " + l.id + " has weight outside (0, 1]");
  }
  for (const auto& g : f.generators()) {
    if (g.p_min_kw > g.p_max_kw) add("generator " + g.id + " has p_min > p_max");
    if (g.q_min_kvar > g.q_max_kvar) add("generator " + g.id + " has q_min > q_max");
    if (!(g.p_max_kw > 0.0)) add("generator " + g.id + " has non-positive p_max");
  }

  // Radiality at full closure, via union-find over lines.
  std::vector<std::size_t> parent(f.bus_count());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  bool radial = true;
  for (std::size_t i = 0; i < f.line_count(); ++i) {
    const auto a = root(f.line_from(i));
    const auto b = root(f.line_to(i));
    if (a == b) {
      if (f.line_from(i) != f.line_to(i) && radial)
        add("non-radial topology (line " + f.lines()[i].id + " closes a loop)");
      radial = false;
      continue;
    }
    parent[a] = b;
  }

  const std::vector<std::uint8_t> every_line(f.line_count(), 1);
  const auto reachable = energized_buses(f, every_line);
  for (std::size_t b = 0; b < f.bus_count(); ++b)
    if (!reachable[b]) add("bus " + f.buses()[b].id + " has no path to a generator");

  // A load's breaker must sit on its supply path: opening it alone de-energizes the load.
  for (std::size_t i = 0; i < f.loads().size(); ++i) {
    const auto bus = f.load_bus(i);
    if (!reachable[bus]) continue;
    auto lines = every_line;
    lines[f.breaker_line(f.load_breaker(i))] = 0;
    if (energized_buses(f, lines)[bus])
      add("load " + f.loads()[i].id + " is not controlled by breaker " + f.loads()[i].breaker_id);
  }

  std::vector<int> owners(f.breaker_count(), 0);
  for (std::size_t a = 0; a < f.agent_count(); ++a) {
    if (f.agent_breakers(a).empty()) add("partition agent " + std::to_string(a) + " has no breakers");
    for (auto b : f.agent_breakers(a)) ++owners[b];
  }
  if (f.agent_count() == 0 && f.breaker_count() > 0) add("partition has no agents");
  for (std::size_t b = 0; b < f.breaker_count(); ++b) {
    if (owners[b] == 0) add("uncovered breaker " + f.breakers()[b].id);
    if (owners[b] > 1) add("breaker " + f.breakers()[b].id + " assigned to several agents");
  }
  return r;
}

}  // namespace mgrestore
