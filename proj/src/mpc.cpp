#include "hems/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hems/error.hpp"

namespace hems {

std::string to_string(HorizonPolicy p) { return p == HorizonPolicy::kShrinking ? "shrinking" : "rolling"; }

HorizonPolicy horizon_policy_from_string(const std::string& s) {
  if (s == "shrinking") return HorizonPolicy::kShrinking;
  if (s == "rolling") return HorizonPolicy::kRolling;
  throw ValidationError("unknown horizon policy '" + s + "' (shrinking | rolling)");
}

void MpcConfig::validate(double dt) const {
  if (!(horizon_s > 0.0) || !(block_s > 0.0)) throw ValidationError("MPC horizon and block must be positive");
  if (block_s > horizon_s) throw ValidationError("MPC block longer than the horizon");
  auto multiple = [dt](double v) { return std::abs(v / dt - std::round(v / dt)) < 1e-9; };
  if (!multiple(horizon_s) || !multiple(block_s)) throw ValidationError("MPC horizon and block must be multiples of dt");
  if (!(curtail_margin > 0.0 && curtail_margin <= 1.0)) throw ValidationError("curtail margin must lie in (0, 1]");
  if (!(group_time_limit > 0.0)) throw ValidationError("group time limit must be positive");
}

std::vector<double> curtail_regen(std::span<const double> demand, const SystemModel& model, const HorizonSpec& base,
                                  double margin, std::vector<Curtailment>* log) {
  const auto& sur = model.surrogate;
  const double k_cur = sur.a_bat * 1000.0 / model.pack.cell_count;  // A per pack kW
  if (k_cur >= 0.0) throw ValidationError("battery current model has the wrong sign");
  // I = k_cur B + b_bat SOC <= i_max  <=>  B >= (i_max - b_bat SOC) / k_cur.
  double floor_kw = -kInf;
  for (double soc : {base.soc_min, base.soc_max}) {
    floor_kw = std::max(floor_kw, (model.cell.i_max - sur.b_bat * soc) / k_cur);
  }
  floor_kw = std::min(floor_kw, 0.0) * margin;
  std::vector<double> out(demand.begin(), demand.end());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k] < floor_kw) {
      if (log) log->push_back({static_cast<int>(k), out[k], floor_kw});
      out[k] = floor_kw;
    }
  }
  return out;
}

WarmStart group_hint(const BuiltProblem& built, const SystemModel& model, const SolverOptions& opts,
                     double time_limit) {
  const auto& L = built.layout;
  const auto& h = built.horizon;
  WarmStart best;
  if (L.n_units != L.n_stacks || !model.homogeneous()) return best;
  const int m = L.n_stacks;

  // Stacks that are on come first, highest power first; a group is a prefix.
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (h.prev_on(a) != h.prev_on(b)) return h.prev_on(a) > h.prev_on(b);
    return h.prev_power(a) > h.prev_power(b);
  });

  SystemModel sub_model = model;
  sub_model.stacks = {model.stack(0)};
  const auto& sp = model.stack(0);
  SolverOptions o = opts;
  o.time_limit = std::min(opts.time_limit, time_limit);
  o.log = nullptr;
  o.rel_gap_tol = std::max(opts.rel_gap_tol, 1e-4);

  double best_cost = kInf;
  for (int k = 1; k <= m; ++k) {
    const int lead = order[0], last = order[static_cast<std::size_t>(k - 1)];
    if (h.prev_on(lead) != h.prev_on(last) || h.prev_power(lead) != h.prev_power(last)) break;
    HorizonSpec hk = h;
    hk.mode = StackControl::kCollective;
    hk.n_stacks = k;
    hk.initial_power.assign(static_cast<std::size_t>(k), h.prev_power(lead));
    hk.initial_on.assign(static_cast<std::size_t>(k), h.prev_on(lead));
    double shutdown = 0.0;  // stacks outside the group that must switch off now
    for (int r = k; r < m; ++r) {
      const int j = order[static_cast<std::size_t>(r)];
      if (h.prev_on(j)) {
        shutdown += loss_on_off(true, model.rates, sp) + loss_load_change(h.prev_power(j), model.rates, sp);
      }
    }
    BuiltProblem sub;
    try {
      sub = build(built.demand_kw, hk, sub_model);
    } catch (const ValidationError&) {
      continue;
    }
    const auto sol = solve(sub.problem, o);
    if (!sol.has_incumbent() || sol.objective + shutdown >= best_cost) continue;
    best_cost = sol.objective + shutdown;

    const auto& S = sub.layout;
    best.values.assign(static_cast<std::size_t>(L.total()), 0.0);
    for (int t = 0; t < L.n_steps; ++t) {
      for (int r = 0; r < m; ++r) {
        const int j = order[static_cast<std::size_t>(r)];
        const int base = L.stack_base(t, j);
        if (r < k) {
          for (int c = 0; c < VariableLayout::kStackVars; ++c) best.values[base + c] = sol.values[S.stack_base(t, 0) + c];
        } else {
          best.values[L.ramp(t, j)] = t == 0 ? h.prev_power(j) : 0.0;
          best.values[L.sw(t, j)] = t == 0 ? h.prev_on(j) : 0.0;
          best.values[L.idle(t, j)] = 1.0;  // P = 0 sits below the idle threshold
        }
      }
      for (int c = 0; c < VariableLayout::kBatteryVars; ++c) {
        best.values[L.battery_base(t) + c] = sol.values[S.battery_base(t) + c];
      }
    }
  }
  return best;
}

WindowSolve solve_window(std::span<const double> demand, const HorizonSpec& h, const SystemModel& model,
                         const MpcConfig& cfg, const SolverOptions& opts, const WarmStart& previous) {
  WindowSolve ws;
  auto attempt = [&](const HorizonSpec& hs) {
    ws.built = build(demand, hs, model);
    std::vector<WarmStart> hints;
    if (previous.values.size() == static_cast<std::size_t>(ws.built.problem.num_vars())) hints.push_back(previous);
    if (hs.mode == StackControl::kIndividual && cfg.group_hint) {
      hints.push_back(group_hint(ws.built, model, opts, cfg.group_time_limit));
    }
    ws.solution = solve(ws.built.problem, opts, hints);
  };
  attempt(h);
  if (ws.solution.status == MiqpStatus::kInfeasible) {
    const double mid = 0.5 * (h.soc_final_min + h.soc_final_max);
    const double half = h.soc_final_max - h.soc_final_min;
    HorizonSpec wide = h;
    wide.soc_final_min = std::max(h.soc_min, mid - half);
    wide.soc_final_max = std::min(h.soc_max, mid + half);
    attempt(wide);
    ws.recovered = true;
    if (ws.solution.status == MiqpStatus::kInfeasible) {
      throw SolveFailure("window of " + std::to_string(h.n_steps) + " steps is infeasible even with terminal window [" +
                             std::to_string(wide.soc_final_min) + ", " + std::to_string(wide.soc_final_max) +
                             "] %, initial SOC " + std::to_string(h.soc_initial) + " %",
                         ws.solution.status);
    }
  }
  if (!ws.solution.has_incumbent()) {
    throw SolveFailure("window of " + std::to_string(h.n_steps) + " steps: " + to_string(ws.solution.status) +
                           " without incumbent",
                       ws.solution.status);
  }
  return ws;
}

OptimizeResult optimize_once(const PowerProfile& profile, const SystemModel& model, const HorizonSpec& base,
                             const MpcConfig& cfg, StackControl mode, const SolverOptions& opts) {
  profile.validate();
  cfg.validate(profile.dt);
  const int n = static_cast<int>(std::lround(cfg.horizon_s / profile.dt));
  if (static_cast<int>(profile.size()) < n) throw ValidationError("profile is shorter than the horizon");
  OptimizeResult out;
  std::vector<double> raw(profile.demand_kw.begin(), profile.demand_kw.begin() + n);
  const auto served = cfg.curtail ? curtail_regen(raw, model, base, cfg.curtail_margin, &out.curtailments) : raw;
  HorizonSpec h = base;
  h.n_steps = n;
  h.dt = profile.dt;
  h.mode = mode;
  out.window = solve_window(served, h, model, cfg, opts, WarmStart{});
  out.schedule = extract_schedule(out.window.built, out.window.solution.values);
  TruthSimulator sim(model, base.h2_price, profile.dt, out.schedule.soc_initial, out.schedule.initial_power,
                     out.schedule.initial_on);
  for (int k = 0; k < n; ++k) {
    const auto& st = out.schedule.steps[static_cast<std::size_t>(k)];
    sim.step(served[static_cast<std::size_t>(k)], raw[static_cast<std::size_t>(k)], st.stack_power, st.stack_on);
  }
  out.trace = sim.trace();
  out.trace.curtailments = out.curtailments;
  out.cost = account_costs(out.trace, model, base.h2_price);
  out.surrogate = objective_terms(out.window.built, out.window.solution.values);
  return out;
}

namespace {

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

MpcResult run_mpc(const PowerProfile& profile, const SystemModel& model, const HorizonSpec& base,
                  const MpcConfig& cfg, StackControl mode, const SolverOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  profile.validate();
  cfg.validate(profile.dt);
  const double dt = profile.dt;
  const int horizon = static_cast<int>(std::lround(cfg.horizon_s / dt));
  const int block = static_cast<int>(std::lround(cfg.block_s / dt));
  if (static_cast<int>(profile.size()) < horizon) {
    throw ValidationError("profile holds " + std::to_string(profile.size()) + " steps, horizon needs " +
                          std::to_string(horizon));
  }
  const int mission = cfg.policy == HorizonPolicy::kShrinking ? horizon : static_cast<int>(profile.size());

  MpcResult res;
  res.mode = mode;
  std::vector<double> raw(profile.demand_kw.begin(), profile.demand_kw.begin() + mission);
  std::vector<Curtailment> clipped;
  const auto served = cfg.curtail ? curtail_regen(raw, model, base, cfg.curtail_margin, &clipped) : raw;

  const int m = base.n_stacks;
  std::vector<double> p0(static_cast<std::size_t>(m));
  std::vector<int> o0(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    p0[j] = base.prev_power(j);
    o0[j] = base.prev_on(j);
  }
  TruthSimulator sim(model, base.h2_price, dt, base.soc_initial, p0, o0);

  std::vector<double> prev_values;
  int prev_step_size = 0, prev_applied = 0;
  for (int pos = 0; pos < mission;) {
    const int window = cfg.policy == HorizonPolicy::kShrinking ? mission - pos : std::min(horizon, mission - pos);
    const int apply = std::min(block, window);
    HorizonSpec h = base;
    h.n_steps = window;
    h.dt = dt;
    h.mode = mode;
    h.soc_initial = sim.soc();
    h.initial_power = sim.stack_power();
    h.initial_on = sim.stack_on();
    std::span<const double> demand(served.data() + pos, static_cast<std::size_t>(window));

    BlockReport rep;
    rep.start_step = pos;
    rep.window_steps = window;
    rep.applied_steps = apply;
    rep.soc_start = h.soc_initial;
    rep.power_start = h.initial_power;
    rep.on_start = h.initial_on;

    WarmStart previous;
    if (!prev_values.empty()) previous = warm_start_from(prev_values, prev_step_size, prev_applied, window);
    auto ws = solve_window(demand, h, model, cfg, opts, previous);
    const auto& built = ws.built;
    const auto& sol = ws.solution;
    rep.recovered = ws.recovered;
    rep.status = sol.status;
    rep.objective = sol.objective;
    rep.best_bound = sol.best_bound;
    rep.gap = sol.gap;
    rep.wall_time = sol.wall_time;
    rep.nodes = sol.nodes_explored;
    rep.incumbent_source = sol.incumbent_source;

    const auto sched = extract_schedule(built, sol.values);
    for (int k = 0; k < apply; ++k) {
      const auto& st = sched.steps[static_cast<std::size_t>(k)];
      sim.step(served[static_cast<std::size_t>(pos + k)], raw[static_cast<std::size_t>(pos + k)], st.stack_power,
               st.stack_on);
    }
    // Solver view of the applied part.
    Schedule applied = sched;
    applied.steps.resize(static_cast<std::size_t>(apply));
    const double bat = surrogate_battery_cost(applied, model);
    res.surrogate_battery += bat;
    res.surrogate_cost += objective_terms(built, sol.values, apply).total();

    prev_values = sol.values;
    prev_step_size = built.layout.step_size();
    prev_applied = apply;
    res.blocks.push_back(std::move(rep));
    pos += apply;
  }
  res.trace = sim.trace();
  for (auto& c : clipped) res.trace.curtailments.push_back(c);
  res.cost = account_costs(res.trace, model, base.h2_price);
  res.wall_time = elapsed(start);
  return res;
}

}  // namespace hems
