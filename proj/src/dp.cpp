#include "hems/dp.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "hems/error.hpp"

namespace hems {

namespace {
constexpr double kNoValue = std::numeric_limits<double>::infinity();
}

void DpGrids::validate() const {
  if (!(soc_step > 0.0) || !(power_step > 0.0)) throw ValidationError("DP grid steps must be positive");
}

DpBenchmark::DpBenchmark(std::span<const double> demand, const SystemModel& model, const HorizonSpec& horizon,
                         const DpGrids& grids)
    : demand_(demand.begin(), demand.end()), model_(&model), horizon_(horizon), grids_(grids) {
  grids.validate();
  horizon.validate();
  if (static_cast<int>(demand_.size()) != horizon.n_steps) throw ValidationError("demand length does not match horizon");
  if (!model.homogeneous()) throw ValidationError("the DP treats all stacks as one and needs identical stacks");
  for (int j = 1; j < horizon.n_stacks; ++j) {
    if (horizon.prev_power(j) != horizon.prev_power(0) || horizon.prev_on(j) != horizon.prev_on(0)) {
      throw ValidationError("the DP needs a homogeneous initial stack state");
    }
  }
  const auto& sp = model.stack(0);
  const int m = horizon.n_stacks;
  k_soc_ = model.soc_per_amp(horizon.dt);

  auto& P = policy_;
  P.n_steps = horizon.n_steps;
  P.n_stacks = m;
  P.dt = horizon.dt;

  // SOC points sit on soc_min + k * step so round initial values land on the grid.
  double lo = horizon.soc_min, hi = horizon.soc_max;
  if (grids.reachable_only) {
    const double reach = horizon.n_steps * k_soc_ * std::max(-model.cell.i_min, model.cell.i_max);
    lo = std::max(lo, horizon.soc_initial - reach);
    hi = std::min(hi, horizon.soc_initial + reach);
  }
  const auto k_lo = static_cast<long>(std::floor((lo - horizon.soc_min) / grids.soc_step + 1e-9));
  const auto k_hi = static_cast<long>(std::ceil((hi - horizon.soc_min) / grids.soc_step - 1e-9));
  for (long k = k_lo; k <= k_hi; ++k) {
    const double s = std::min(horizon.soc_min + static_cast<double>(k) * grids.soc_step, horizon.soc_max);
    if (P.soc_grid.empty() || s > P.soc_grid.back()) P.soc_grid.push_back(s);
  }

  P.power_grid.push_back(0.0);
  const double u_lo = m * sp.p_min, u_hi = m * sp.p_max;
  for (double u = u_lo; u < u_hi - 1e-9; u += grids.power_step) P.power_grid.push_back(u);
  P.power_grid.push_back(u_hi);

  const double p0 = m * horizon.prev_power(0);
  const bool on0 = horizon.prev_on(0) != 0;
  init_power_ = P.n_power();
  for (std::size_t k = 0; k < P.n_power(); ++k) {
    if (std::abs(P.power_grid[k] - p0) < 1e-9 && (k > 0) == on0) init_power_ = k;
  }
  if (init_power_ == P.n_power()) throw ValidationError("initial collective power is not on the DP power grid");

  const double entries = static_cast<double>(P.n_steps + 1) * static_cast<double>(P.n_soc() * P.n_power());
  if (entries > 2e8) throw ValidationError("DP table too large; enable reachable_only or coarsen the grids");
}

StageEval DpBenchmark::stage(int t, double soc, std::size_t prev, std::size_t u) const {
  StageEval e;
  const auto& P = policy_;
  const auto& sp = model_->stack(0);
  const int m = P.n_stacks;
  const double dt = P.dt;
  const double p_stack = P.power_grid[u] / m;
  const double p_prev = P.power_grid[prev] / m;
  const int on = u > 0 ? 1 : 0, on_prev = prev > 0 ? 1 : 0;

  const double bat_kw = demand_[static_cast<std::size_t>(t)] - P.power_grid[u];
  const double cell_w = model_->cell_power_w(bat_kw);
  if (cell_w > max_discharge_power(soc, model_->cell)) return e;
  e.current = power_to_current_exact(cell_w, soc, model_->cell);
  if (e.current < model_->cell.i_min - 1e-12 || e.current > model_->cell.i_max + 1e-12) return e;
  e.next_soc = soc + k_soc_ * e.current;
  if (e.next_soc < horizon_.soc_min - 1e-9 || e.next_soc > horizon_.soc_max + 1e-9) return e;

  const auto one = stack_step_cost(p_stack, on, p_prev, on_prev, dt, horizon_.h2_price, sp, model_->rates);
  e.cost.h2 = m * one.h2;
  e.cost.fc_load_change = m * one.fc_load_change;
  e.cost.fc_on_off = m * one.fc_on_off;
  e.cost.fc_idling = m * one.fc_idling;
  e.cost.fc_high_load = m * one.fc_high_load;
  e.cost.battery_degradation = pack_degradation_cost(e.current, dt, model_->surrogate, model_->cell, model_->pack);
  e.feasible = true;
  return e;
}

double DpBenchmark::interpolate(int t, double soc, std::size_t prev) const {
  const auto& g = policy_.soc_grid;
  if (soc < g.front() - 1e-9 || soc > g.back() + 1e-9) return kNoValue;
  auto it = std::upper_bound(g.begin(), g.end(), soc);
  std::size_t hi = static_cast<std::size_t>(it - g.begin());
  if (hi == 0) return policy_.v(t, 0, prev);
  if (hi == g.size()) return policy_.v(t, g.size() - 1, prev);
  const std::size_t lo = hi - 1;
  const double w = (soc - g[lo]) / (g[hi] - g[lo]);
  const double a = policy_.v(t, lo, prev), b = policy_.v(t, hi, prev);
  if (w <= 1e-12) return a;
  if (w >= 1.0 - 1e-12) return b;
  if (!std::isfinite(a) || !std::isfinite(b)) return kNoValue;
  return (1.0 - w) * a + w * b;
}

double DpBenchmark::bellman_rhs(int t, std::size_t s, std::size_t prev) const {
  double best = kNoValue;
  for (std::size_t u = 0; u < policy_.n_power(); ++u) {
    const auto e = stage(t, policy_.soc_grid[s], prev, u);
    if (!e.feasible) continue;
    const double v = e.cost.total() + interpolate(t + 1, e.next_soc, u);
    best = std::min(best, v);
  }
  return best;
}

DpResult DpBenchmark::solve() {
  const auto start = std::chrono::steady_clock::now();
  auto& P = policy_;
  const std::size_t ns = P.n_soc(), np = P.n_power();
  const int n = P.n_steps;
  P.value.assign(static_cast<std::size_t>(n + 1) * ns * np, kNoValue);
  P.control.assign(static_cast<std::size_t>(n) * ns * np, -1);
  for (std::size_t s = 0; s < ns; ++s) {
    const double soc = P.soc_grid[s];
    const bool ok = soc >= horizon_.soc_final_min - 1e-9 && soc <= horizon_.soc_final_max + 1e-9;
    for (std::size_t p = 0; p < np; ++p) P.value[P.index(n, s, p)] = ok ? 0.0 : kNoValue;
  }

  DpResult res;
  // Stage cost splits into a stack part f(prev, u) and a battery part g(s, u)
  // that also carries the continuation value; V(s, prev) = min_u f + g.
  std::vector<double> f(np * np), g(ns * np);
  for (int t = n - 1; t >= 0; --t) {
    for (std::size_t prev = 0; prev < np; ++prev) {
      for (std::size_t u = 0; u < np; ++u) {
        const int on = u > 0, on_prev = prev > 0;
        const auto one = stack_step_cost(P.power_grid[u] / P.n_stacks, on, P.power_grid[prev] / P.n_stacks, on_prev,
                                         P.dt, horizon_.h2_price, model_->stack(0), model_->rates);
        f[prev * np + u] = P.n_stacks * one.total();
      }
    }
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t u = 0; u < np; ++u) {
        // prev only affects the stack part, so any index gives the battery part.
        const auto e = stage(t, P.soc_grid[s], 0, u);
        g[s * np + u] = e.feasible ? e.cost.battery_degradation + interpolate(t + 1, e.next_soc, u) : kNoValue;
      }
    }
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t prev = 0; prev < np; ++prev) {
        double best = kNoValue;
        int arg = -1;
        for (std::size_t u = 0; u < np; ++u) {
          const double v = f[prev * np + u] + g[s * np + u];
          if (v < best) {
            best = v;
            arg = static_cast<int>(u);
          }
        }
        P.value[P.index(t, s, prev)] = best;
        P.control[static_cast<std::size_t>(t) * ns * np + s * np + prev] = static_cast<std::int16_t>(arg);
      }
    }
    res.transitions += static_cast<long>(ns * np * np);
  }

  const double soc0 = horizon_.soc_initial;
  res.cost = kNoValue;
  for (std::size_t s = 0; s < ns; ++s) {
    if (std::abs(P.soc_grid[s] - soc0) < 1e-9) res.cost = P.v(0, s, init_power_);
  }
  if (res.cost == kNoValue) {
    // Off-grid initial SOC: interpolate the first table.
    const double v = interpolate(0, soc0, init_power_);
    res.cost = v;
  }
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!std::isfinite(res.cost)) throw InfeasibleError("DP: no feasible policy from the initial state");
  return res;
}

DpRollout DpBenchmark::rollout() const {
  if (policy_.value.empty()) throw ValidationError("rollout needs a solved policy");
  const auto& P = policy_;
  const int m = P.n_stacks;
  std::vector<double> p0(static_cast<std::size_t>(m), horizon_.prev_power(0));
  std::vector<int> o0(static_cast<std::size_t>(m), horizon_.prev_on(0));
  TruthSimulator sim(*model_, horizon_.h2_price, P.dt, horizon_.soc_initial, p0, o0);
  std::size_t prev = init_power_;
  std::vector<double> pw(static_cast<std::size_t>(m));
  std::vector<int> on(static_cast<std::size_t>(m));
  for (int t = 0; t < P.n_steps; ++t) {
    const double soc = sim.soc();
    double best = kNoValue;
    std::size_t arg = P.n_power();
    for (std::size_t u = 0; u < P.n_power(); ++u) {
      const auto e = stage(t, soc, prev, u);
      if (!e.feasible) continue;
      const double v = e.cost.total() + interpolate(t + 1, e.next_soc, u);
      if (v < best) {
        best = v;
        arg = u;
      }
    }
    if (arg == P.n_power()) throw DomainError("DP rollout left the value grid at step " + std::to_string(t));
    std::fill(pw.begin(), pw.end(), P.power_grid[arg] / m);
    std::fill(on.begin(), on.end(), arg > 0 ? 1 : 0);
    sim.step(demand_[static_cast<std::size_t>(t)], demand_[static_cast<std::size_t>(t)], pw, on);
    prev = arg;
  }
  DpRollout out;
  out.trace = sim.trace();
  out.cost = account_costs(out.trace, *model_, horizon_.h2_price);
  return out;
}

void save_value_tables(const DpPolicy& policy, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "value dump assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::int64_t header[3] = {policy.n_steps + 1, static_cast<std::int64_t>(policy.n_soc()),
                                  static_cast<std::int64_t>(policy.n_power())};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(policy.value.data()),
            static_cast<std::streamsize>(policy.value.size() * sizeof(double)));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace hems
