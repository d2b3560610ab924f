#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mgrestore/grid.hpp"

namespace mgrestore {

namespace detail {

// One islanded microgrid laid out as a trunk with switched laterals.
// trunk[0] hosts the first generator; each lateral hangs off a trunk bus
// through a line carrying exactly one breaker that feeds one load.
struct IslandLayout {
  struct Source {
    std::string id;
    std::string trunk_bus;
    double p_max_kw;
  };
  struct Lateral {
    std::string bus;
    std::string trunk_bus;
    double p_kw;
    double q_kvar;
  };

  std::vector<std::string> trunk;
  std::vector<Source> sources;
  std::vector<Lateral> laterals;
};

struct LineImpedance {
  double r;
  double x;
  double s_rating_kva;
};

inline void append_island(FeederData& d, const IslandLayout& island, LineImpedance trunk_z,
                          LineImpedance lateral_z) {
  std::vector<std::string> agent;
  for (const auto& bus : island.trunk) d.buses.push_back({bus});
  for (std::size_t i = 1; i < island.trunk.size(); ++i)
    d.lines.push_back({"l" + island.trunk[i - 1] + "_" + island.trunk[i], island.trunk[i - 1],
                       island.trunk[i], trunk_z.r, trunk_z.x, trunk_z.s_rating_kva});
  for (const auto& src : island.sources) {
    // Reactive capability of the inverter-interfaced sources.
    d.generators.push_back({src.id, src.trunk_bus, 0.0, src.p_max_kw, -0.3 * src.p_max_kw,
                            0.75 * src.p_max_kw});
  }
  for (const auto& lat : island.laterals) {
    const auto n = d.loads.size() + 1;
    const std::string line_id = "l" + lat.trunk_bus + "_" + lat.bus;
    const std::string cb = "cb" + std::to_string(n);
    d.buses.push_back({lat.bus});
    d.lines.push_back({line_id, lat.trunk_bus, lat.bus, lateral_z.r, lateral_z.x,
                       lateral_z.s_rating_kva});
    d.breakers.push_back({cb, line_id, true});
    d.loads.push_back({"L" + std::to_string(n), lat.bus, lat.p_kw, lat.q_kvar, 1.0, cb});
    agent.push_back(cb);
  }
  d.partition.agents.push_back(std::move(agent));
}

// Single-phase equivalent of the 13-node networked-microgrid case: two
// islands, nine switched loads (3461 kW), three sources (2600 kW).
inline FeederData ieee13_data() {
  FeederData d;
  d.name = "ieee13";
  d.base = {1000.0, 4.16};
  const LineImpedance trunk{0.0005, 0.001, 3000.0};
  const LineImpedance lateral{0.001, 0.002, 2000.0};

  IslandLayout mg1;
  mg1.trunk = {"650", "632"};
  mg1.sources = {{"G1", "650", 585.0}};
  mg1.laterals = {{"645", "632", 230.0, 104.0},
                  {"646", "632", 170.0, 77.0},
                  {"633", "632", 400.0, 180.0},
                  {"634", "632", 200.0, 90.0}};
  append_island(d, mg1, trunk, lateral);

  IslandLayout mg2;
  mg2.trunk = {"680", "671", "684"};
  mg2.sources = {{"G2", "671", 1215.0}, {"G3", "680", 800.0}};
  mg2.laterals = {{"611", "684", 170.0, 77.0},
                  {"652", "684", 128.0, 58.0},
                  {"670", "671", 1150.0, 518.0},
                  {"692", "671", 170.0, 77.0},
                  {"675", "671", 843.0, 379.0}};
  append_island(d, mg2, trunk, lateral);
  return d;
}

// Synthesized 123-node case: five islands with 10/5/3/3/5 switched loads
// (3025 kW total) and five sources (2400 kW total). Per-load ratings are
// synthetic; only the aggregates follow the published case.
inline FeederData ieee123_data() {
  FeederData d;
  d.name = "ieee123";
  d.base = {1000.0, 4.16};
  const LineImpedance trunk{0.0008, 0.0016, 1500.0};
  const LineImpedance lateral{0.0015, 0.003, 1000.0};

  auto lateral_q = [](double p) { return std::round(0.5 * p); };
  auto island = [&](std::vector<std::string> trunk_buses, IslandLayout::Source src,
                    std::vector<std::pair<std::string, double>> loads) {
    IslandLayout mg;
    mg.trunk = std::move(trunk_buses);
    mg.sources = {std::move(src)};
    for (std::size_t i = 0; i < loads.size(); ++i) {
      // Laterals are spread evenly along the trunk.
      const auto& tap = mg.trunk[(i * mg.trunk.size()) / loads.size()];
      mg.laterals.push_back({loads[i].first, tap, loads[i].second, lateral_q(loads[i].second)});
    }
    return mg;
  };

  append_island(d,
                island({"150", "1", "7", "8"}, {"G1", "150", 690.0},
                       {{"2", 40.0}, {"3", 75.0}, {"4", 60.0}, {"5", 135.0}, {"6", 90.0},
                        {"9", 120.0}, {"10", 55.0}, {"11", 80.0}, {"12", 105.0}, {"14", 140.0}}),
                trunk, lateral);
  append_island(d,
                island({"13", "18", "21"}, {"G2", "13", 565.0},
                       {{"19", 210.0}, {"20", 140.0}, {"22", 175.0}, {"23", 95.0}, {"24", 130.0}}),
                trunk, lateral);
  append_island(d, island({"60", "62"}, {"G3", "60", 340.0}, {{"61", 180.0}, {"63", 120.0}, {"64", 150.0}}),
                trunk, lateral);
  append_island(d,
                island({"300", "97"}, {"G4", "300", 300.0}, {{"98", 100.0}, {"99", 160.0}, {"100", 125.0}}),
                trunk, lateral);
  append_island(d,
                island({"76", "72", "78"}, {"G5", "76", 505.0},
                       {{"73", 95.0}, {"74", 150.0}, {"77", 70.0}, {"79", 120.0}, {"80", 105.0}}),
                trunk, lateral);
  return d;
}

}  // namespace detail

inline std::vector<std::string> builtin_feeder_names() { return {"ieee13", "ieee123"}; }

/// Built-in feeders; throws UnknownFeederError for any other name.
inline Feeder builtin_feeder(std::string_view name) {
  if (name == "ieee13") return Feeder(detail::ieee13_data());
  if (name == "ieee123") return Feeder(detail::ieee123_data());
  throw UnknownFeederError(std::string(name));
}

}  // namespace mgrestore
