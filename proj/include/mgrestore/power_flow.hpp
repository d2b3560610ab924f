#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mgrestore/grid.hpp"

namespace mgrestore {

struct LineFlow {
  double p_kw = 0.0;    // upstream (source-side) end, positive away from the island's slack
  double q_kvar = 0.0;
  double s_kva = 0.0;
};

struct GeneratorOutput {
  double p_kw = 0.0;
  double q_kvar = 0.0;
  bool online = false;  // island has demand
};

struct PowerFlowSolution {
  bool converged = true;
  int iterations = 0;
  std::vector<double> bus_voltage;  // p.u. magnitude; 1.0 on de-energized buses
  std::vector<std::uint8_t> bus_energized;
  std::vector<LineFlow> line_flow;
  std::vector<std::uint8_t> line_energized;
  std::vector<GeneratorOutput> generator;
  double total_losses_kw = 0.0;
  double total_losses_kvar = 0.0;
  double served_load_kw = 0.0;
  double served_load_kvar = 0.0;

  double total_generation_kw() const {
    double p = 0.0;
    for (const auto& g : generator) p += g.p_kw;
    return p;
  }
};

struct SolverOptions {
  double tolerance = 1e-6;  // max per-iteration voltage change, p.u.
  int max_iterations = 100;
};

namespace detail {

using cplx = std::complex<double>;

// Energized island rooted at its slack generator, in breadth-first order.
struct Island {
  std::size_t slack_gen = 0;
  std::vector<std::size_t> order;        // buses, root first
  std::vector<std::size_t> parent_line;  // per entry of order (unused for root)
  std::vector<std::size_t> parent_pos;   // index into order of the parent bus
  std::vector<std::size_t> gens;
};

inline std::vector<Island> energized_islands(const Feeder& f,
                                             const std::vector<std::uint8_t>& line_closed) {
  std::vector<Island> islands;
  std::vector<std::uint8_t> seen(f.bus_count(), 0);
  std::vector<std::uint8_t> placed(f.bus_count(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t first = 0; first < f.generators().size(); ++first) {
    if (seen[f.generator_bus(first)]) continue;
    Island isl;
    // Collect the island's generators, then root it at the slack bus: the
    // largest unit holds the voltage reference, lowest index breaks ties.
    stack.assign(1, f.generator_bus(first));
    seen[stack.back()] = 1;
    while (!stack.empty()) {
      const auto bus = stack.back();
      stack.pop_back();
      for (auto g : f.generators_at(bus)) isl.gens.push_back(g);
      for (const auto& adj : f.adjacency(bus)) {
        if (!line_closed[adj.line] || seen[adj.bus]) continue;
        seen[adj.bus] = 1;
        stack.push_back(adj.bus);
      }
    }
    std::sort(isl.gens.begin(), isl.gens.end());
    isl.slack_gen = isl.gens.front();
    for (auto g : isl.gens)
      if (f.generators()[g].p_max_kw > f.generators()[isl.slack_gen].p_max_kw) isl.slack_gen = g;

    const auto root = f.generator_bus(isl.slack_gen);
    isl.order.push_back(root);
    isl.parent_line.push_back(0);
    isl.parent_pos.push_back(0);
    placed[root] = 1;
    for (std::size_t pos = 0; pos < isl.order.size(); ++pos) {
      const auto bus = isl.order[pos];
      for (const auto& adj : f.adjacency(bus)) {
        if (!line_closed[adj.line] || placed[adj.bus]) continue;
        placed[adj.bus] = 1;
        isl.order.push_back(adj.bus);
        isl.parent_line.push_back(adj.line);
        isl.parent_pos.push_back(pos);
      }
    }
    islands.push_back(std::move(isl));
  }
  return islands;
}

// Backward/forward sweep on one island. Non-slack units inject their
// proportional share of (load + losses) from the previous iterate; the slack
// unit closes the balance. Returns false on divergence.
inline bool sweep_island(const Feeder& f, const Island& isl, const SolverOptions& opt,
                         PowerFlowSolution& sol) {
  const double sbase = f.base().s_base_kva;
  const std::size_t n = isl.order.size();

  std::vector<cplx> load(n, 0.0);  // p.u. demand per island position
  cplx total_load = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto ld : f.loads_at(isl.order[i])) {
      const auto& l = f.loads()[ld];
      load[i] += cplx(l.p_rated_kw, l.q_rated_kvar) / sbase;
    }
    total_load += load[i];
  }

  double p_cap = 0.0, q_cap = 0.0;
  for (auto g : isl.gens) {
    p_cap += f.generators()[g].p_max_kw;
    q_cap += std::max(f.generators()[g].q_max_kvar, 0.0);
  }
  // zero total capacity splits evenly; only reachable with zero demand to be feasible
  auto p_share = [&](std::size_t g) {
    return p_cap > 0.0 ? f.generators()[g].p_max_kw / p_cap : 1.0 / static_cast<double>(isl.gens.size());
  };
  auto q_share = [&](std::size_t g) {
    return q_cap > 0.0 ? std::max(f.generators()[g].q_max_kvar, 0.0) / q_cap : p_share(g);
  };
  std::vector<std::size_t> gen_pos(f.generators().size(), 0);
  for (std::size_t i = 0; i < n; ++i)
    for (auto g : f.generators_at(isl.order[i])) gen_pos[g] = i;

  std::vector<cplx> v(n, 1.0), current(n, 0.0), branch(n, 0.0), inject(n, 0.0);
  std::vector<cplx> unit_out(f.generators().size(), 0.0);
  cplx losses = 0.0;
  bool converged = false;
  int iter = 0;

  auto dispatch = [&]() {
    std::fill(inject.begin(), inject.end(), cplx(0.0));
    const cplx demand = total_load + losses;
    for (auto g : isl.gens) {
      if (g == isl.slack_gen) continue;
      unit_out[g] = cplx(p_share(g) * demand.real(), q_share(g) * demand.imag());
      inject[gen_pos[g]] += unit_out[g];
    }
  };
  auto backward = [&]() {
    for (std::size_t i = 0; i < n; ++i) current[i] = std::conj((load[i] - inject[i]) / v[i]);
    for (std::size_t i = 0; i < n; ++i) branch[i] = current[i];
    for (std::size_t i = n; i-- > 1;) branch[isl.parent_pos[i]] += branch[i];
  };

  for (iter = 1; iter <= opt.max_iterations; ++iter) {
    dispatch();
    backward();
    double delta = 0.0;
    cplx new_losses = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const auto& line = f.lines()[isl.parent_line[i]];
      const cplx z(line.resistance, line.reactance);
      const cplx vi = v[isl.parent_pos[i]] - z * branch[i];
      delta = std::max(delta, std::abs(vi - v[i]));
      v[i] = vi;
      new_losses += z * std::norm(branch[i]);
    }
    losses = new_losses;
    if (!std::isfinite(delta) || !std::isfinite(losses.real())) break;
    if (std::any_of(v.begin(), v.end(), [](const cplx& x) { return std::abs(x) < 1e-3; })) break;
    if (delta < opt.tolerance) {
      converged = true;
      break;
    }
  }
  sol.iterations = std::max(sol.iterations, std::min(iter, opt.max_iterations));
  if (!converged) return false;

  // Currents consistent with the final voltages; flows and losses from them
  // telescope, so generation balances load plus losses exactly.
  backward();
  cplx island_losses = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const auto line = isl.parent_line[i];
    const cplx send = v[isl.parent_pos[i]] * std::conj(branch[i]);
    const cplx recv = v[i] * std::conj(branch[i]);
    island_losses += send - recv;
    const cplx s = send * sbase;
    sol.line_flow[line] = {s.real(), s.imag(), std::abs(s)};
    sol.line_energized[line] = 1;
  }
  cplx others = 0.0;
  for (auto g : isl.gens)
    if (g != isl.slack_gen) others += unit_out[g];
  const cplx slack_out = total_load + island_losses - others;

  const bool online = std::abs(total_load) > 0.0;
  for (auto g : isl.gens) {
    const cplx out = g == isl.slack_gen ? slack_out : unit_out[g];
    sol.generator[g] = {out.real() * sbase, out.imag() * sbase, online};
  }
  for (std::size_t i = 0; i < n; ++i) {
    sol.bus_voltage[isl.order[i]] = std::abs(v[i]);
    sol.bus_energized[isl.order[i]] = 1;
  }
  sol.total_losses_kw += island_losses.real() * sbase;
  sol.total_losses_kvar += island_losses.imag() * sbase;
  sol.served_load_kw += total_load.real() * sbase;
  sol.served_load_kvar += total_load.imag() * sbase;
  return true;
}

}  // namespace detail

/// Steady-state power flow of the sub-network energized under `states`.
///
/// Each energized island is solved by a backward/forward current-summation
/// sweep rooted at its largest generator. Divergence is reported through
/// `converged`, never thrown.
inline PowerFlowSolution solve(const Feeder& f, const BreakerStates& states,
                               const SolverOptions& opt = {}) {
  if (states.size() != f.breaker_count())
    throw DimensionError("breaker-state vector has " + std::to_string(states.size()) +
                         " entries, feeder has " + std::to_string(f.breaker_count()));
  PowerFlowSolution sol;
  sol.bus_voltage.assign(f.bus_count(), 1.0);
  sol.bus_energized.assign(f.bus_count(), 0);
  sol.line_flow.assign(f.line_count(), {});
  sol.line_energized.assign(f.line_count(), 0);
  sol.generator.assign(f.generators().size(), {});

  const auto closed = closed_lines(f, states);
  for (const auto& island : detail::energized_islands(f, closed))
    if (!detail::sweep_island(f, island, opt, sol)) sol.converged = false;
  return sol;
}

struct ConstraintReport {
  bool power_balance = true;  // served + losses <= total p_max
  double power_balance_margin_kw = 0.0;
  bool voltage = true;
  std::string worst_bus;      // energized bus with the largest limit excursion
  double worst_voltage = 1.0;
  bool gen_p = true;
  bool gen_q = true;
  bool line_s = true;
  std::string worst_line;     // energized line with the highest loading
  double worst_line_loading = 0.0;  // s / s_rating
  bool converged = true;

  bool all_ok() const { return converged && power_balance && voltage && gen_p && gen_q && line_s; }
};

/// Evaluates the operating limits on a solution of `f`. A diverged solution
/// fails every constraint.
inline ConstraintReport check_constraints(const Feeder& f, const PowerFlowSolution& sol) {
  ConstraintReport r;
  if (!sol.converged) {
    r.converged = r.power_balance = r.voltage = r.gen_p = r.gen_q = r.line_s = false;
    r.power_balance_margin_kw = -std::numeric_limits<double>::infinity();
    return r;
  }
  constexpr double kw_tol = 1e-6;
  constexpr double pu_tol = 1e-9;

  r.power_balance_margin_kw = f.generation_capacity_kw() - (sol.served_load_kw + sol.total_losses_kw);
  r.power_balance = r.power_balance_margin_kw >= -kw_tol;

  double worst_excursion = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < f.bus_count(); ++b) {
    if (!sol.bus_energized[b]) continue;
    const auto& bus = f.buses()[b];
    const double v = sol.bus_voltage[b];
    const double excursion = std::max(bus.v_min - v, v - bus.v_max);
    if (excursion > worst_excursion) {
      worst_excursion = excursion;
      r.worst_bus = bus.id;
      r.worst_voltage = v;
    }
    if (excursion > pu_tol) r.voltage = false;
  }

  for (std::size_t g = 0; g < f.generators().size(); ++g) {
    const auto& out = sol.generator[g];
    if (!out.online) continue;
    const auto& gen = f.generators()[g];
    if (out.p_kw < gen.p_min_kw - kw_tol || out.p_kw > gen.p_max_kw + kw_tol) r.gen_p = false;
    if (out.q_kvar < gen.q_min_kvar - kw_tol || out.q_kvar > gen.q_max_kvar + kw_tol) r.gen_q = false;
  }

  for (std::size_t l = 0; l < f.line_count(); ++l) {
    if (!sol.line_energized[l]) continue;
    const double loading = sol.line_flow[l].s_kva / f.lines()[l].s_rating_kva;
    if (loading > r.worst_line_loading || r.worst_line.empty()) {
      r.worst_line_loading = loading;
      r.worst_line = f.lines()[l].id;
    }
    if (sol.line_flow[l].s_kva > f.lines()[l].s_rating_kva + kw_tol) r.line_s = false;
  }
  return r;
}

struct RestoredPower {
  double served_kw = 0.0;
  double weighted_kw = 0.0;
};

/// Restored load under `states`: a load counts once its bus is energized,
/// i.e. every breaker between it and a generator is closed.
inline RestoredPower restored_power(const Feeder& f, const BreakerStates& states) {
  if (states.size() != f.breaker_count())
    throw DimensionError("breaker-state vector does not match feeder");
  const auto on = energized_buses(f, closed_lines(f, states));
  RestoredPower r;
  for (std::size_t i = 0; i < f.loads().size(); ++i) {
    if (!on[f.load_bus(i)]) continue;
    r.served_kw += f.loads()[i].p_rated_kw;
    r.weighted_kw += f.loads()[i].p_rated_kw * f.loads()[i].weight;
  }
  return r;
}

// Convenience: solve + check.
inline bool feasible(const Feeder& f, const BreakerStates& states) {
  return check_constraints(f, solve(f, states)).all_ok();
}

}  // namespace mgrestore
