#include "hems/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hems/error.hpp"

namespace hems {

std::string to_string(StackControl mode) { return mode == StackControl::kIndividual ? "isc" : "csc"; }

StackControl stack_control_from_string(const std::string& s) {
  if (s == "isc" || s == "ISC" || s == "individual") return StackControl::kIndividual;
  if (s == "csc" || s == "CSC" || s == "collective") return StackControl::kCollective;
  throw ValidationError("unknown stack control mode '" + s + "'");
}

void HorizonSpec::validate() const {
  if (n_steps < 1) throw ValidationError("horizon needs at least one step");
  if (n_stacks < 1) throw ValidationError("horizon needs at least one stack");
  if (!(dt > 0.0)) throw ValidationError("horizon dt must be positive");
  if (!(soc_min <= soc_final_min && soc_final_min <= soc_final_max && soc_final_max <= soc_max)) {
    throw ValidationError("SOC windows must nest: soc_min <= final_min <= final_max <= soc_max");
  }
  if (soc_initial < soc_min || soc_initial > soc_max) {
    throw InfeasibleError("initial SOC " + std::to_string(soc_initial) + " % outside [soc_min, soc_max]");
  }
  if (!initial_power.empty() && static_cast<int>(initial_power.size()) != n_stacks) {
    throw ValidationError("initial power needs one entry per stack");
  }
  if (!initial_on.empty() && static_cast<int>(initial_on.size()) != n_stacks) {
    throw ValidationError("initial on-state needs one entry per stack");
  }
  if (!(h2_price >= 0.0)) throw ValidationError("hydrogen price must be non-negative");
}

bool SystemModel::homogeneous() const {
  for (const auto& s : stacks) {
    const auto& a = stacks.front();
    if (s.p_min != a.p_min || s.p_max != a.p_max || s.p_low != a.p_low || s.p_high != a.p_high ||
        s.a_fc != a.a_fc || s.b_fc != a.b_fc || s.c_fc != a.c_fc || s.stack_cost != a.stack_cost ||
        s.v_drop_max != a.v_drop_max || s.v_drop_max_event != a.v_drop_max_event) {
      return false;
    }
  }
  return true;
}

namespace {

std::string base36(int v, int width) {
  static const char* digits = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::string s(static_cast<std::size_t>(width), '0');
  for (int k = width - 1; k >= 0 && v > 0; --k) {
    s[static_cast<std::size_t>(k)] = digits[v % 36];
    v /= 36;
  }
  return s;
}

std::string stack_name(char kind, int t, int u) { return std::string(1, kind) + base36(t, 3) + base36(u, 2); }
std::string step_name(char kind, int t) { return std::string(1, kind) + base36(t, 3); }
std::string row_name(const char* code, int t, int u = -1) {
  return std::string(code) + base36(t, 3) + (u >= 0 ? base36(u, 2) : std::string());
}

}  // namespace

BuiltProblem build(std::span<const double> demand, const HorizonSpec& horizon, const SystemModel& model) {
  horizon.validate();
  model.cell.validate();
  model.pack.validate();
  model.rates.validate();
  if (static_cast<int>(demand.size()) != horizon.n_steps) {
    throw ValidationError("demand length " + std::to_string(demand.size()) + " does not match horizon " +
                          std::to_string(horizon.n_steps));
  }
  if (model.stacks.size() != 1 && static_cast<int>(model.stacks.size()) != horizon.n_stacks) {
    throw ValidationError("stack parameter list must hold one entry or one per stack");
  }
  for (const auto& s : model.stacks) s.validate();
  if (model.surrogate.a_d < 0.0) throw ValidationError("battery degradation slope a_d is negative (non-convex)");

  const bool collective = horizon.mode == StackControl::kCollective;
  if (collective) {
    if (!model.homogeneous()) throw ValidationError("collective control needs identical stacks");
    for (int j = 1; j < horizon.n_stacks; ++j) {
      if (horizon.prev_power(j) != horizon.prev_power(0) || horizon.prev_on(j) != horizon.prev_on(0)) {
        throw ValidationError("collective control needs a homogeneous initial stack state");
      }
    }
  }
  for (int j = 0; j < horizon.n_stacks; ++j) {
    const auto& sp = model.stack(j);
    const double p0 = horizon.prev_power(j);
    const bool on0 = horizon.prev_on(j) != 0;
    if (on0 ? (p0 < sp.p_min - 1e-9 || p0 > sp.p_max + 1e-9) : p0 != 0.0) {
      throw ValidationError("initial power of stack " + std::to_string(j) + " is inconsistent with its on-state");
    }
  }

  BuiltProblem out;
  out.horizon = horizon;
  out.demand_kw.assign(demand.begin(), demand.end());
  auto& L = out.layout;
  L.n_steps = horizon.n_steps;
  L.n_stacks = horizon.n_stacks;
  L.n_units = collective ? 1 : horizon.n_stacks;
  const int mult = L.multiplicity();
  const double dt = horizon.dt;

  for (int u = 0; u < L.n_units; ++u) {
    const auto& sp = model.stack(u);
    CostRates r;
    r.fuel_q = mult * 2.0 * dt * horizon.h2_price * sp.a_fc;
    r.fuel_lin = mult * dt * horizon.h2_price * sp.b_fc;
    r.fuel_on = mult * dt * horizon.h2_price * sp.c_fc;
    r.ramp = mult * load_change_rate(model.rates, sp);
    r.on_off = mult * on_off_cost(model.rates, sp);
    r.idle = mult * dt * idling_rate(model.rates, sp);
    r.high = mult * dt * high_load_rate(model.rates, sp);
    out.unit_rates.push_back(r);
  }
  const auto& sur = model.surrogate;
  const double pack_value = model.pack.energy_kwh * model.pack.price_per_kwh;
  out.battery_rates.bat_q = 2.0 * sur.a_d / model.cell.capacity_ah * dt / 7200.0 * pack_value;
  out.battery_rates.bat_lin = sur.b_d * dt / 7200.0 * pack_value;

  auto& P = out.problem;
  const double i_abs_max = std::max(-model.cell.i_min, model.cell.i_max);
  for (int t = 0; t < L.n_steps; ++t) {
    for (int u = 0; u < L.n_units; ++u) {
      const auto& sp = model.stack(u);
      const auto& r = out.unit_rates[u];
      P.add_var(stack_name('P', t, u), 0.0, sp.p_max, false, r.fuel_q, r.fuel_lin);
      P.add_var(stack_name('D', t, u), 0.0, sp.p_max, false, 0.0, r.ramp);
      P.add_var(stack_name('O', t, u), 0.0, 1.0, true, 0.0, r.fuel_on);
      P.add_var(stack_name('S', t, u), 0.0, 1.0, true, 0.0, r.on_off);
      P.add_var(stack_name('H', t, u), 0.0, 1.0, true, 0.0, r.high);
      P.add_var(stack_name('I', t, u), 0.0, 1.0, true, 0.0, 0.0);
      P.add_var(stack_name('Z', t, u), 0.0, 1.0, false, 0.0, r.idle);
    }
    P.add_var(step_name('B', t), -kInf, kInf, false);
    P.add_var(step_name('C', t), model.cell.i_min, model.cell.i_max, false);
    P.add_var(step_name('A', t), 0.0, i_abs_max, false, out.battery_rates.bat_q, out.battery_rates.bat_lin);
    P.add_var(step_name('Q', t), horizon.soc_min, horizon.soc_max, false);
  }

  const double k_soc = model.soc_per_amp(dt);
  const double k_cur = sur.a_bat * 1000.0 / model.pack.cell_count;  // A per pack kW
  std::vector<MiqpProblem::Entry> balance;
  for (int t = 0; t < L.n_steps; ++t) {
    for (int u = 0; u < L.n_units; ++u) {
      const auto& sp = model.stack(u);
      const int p = L.power(t, u), d = L.ramp(t, u), o = L.on(t, u), s = L.sw(t, u);
      const int h = L.high(t, u), i = L.idle(t, u), z = L.idle_aux(t, u);
      const double eps = kBandTol;
      P.add_row(row_name("GL", t, u), "gate_lo", 0.0, kInf, {{p, 1.0}, {o, -sp.p_min}});
      P.add_row(row_name("GH", t, u), "gate_hi", -kInf, 0.0, {{p, 1.0}, {o, -sp.p_max}});
      if (t == 0) {
        const double o0 = horizon.prev_on(u);
        const double p0 = horizon.prev_power(u);
        P.add_row(row_name("SU", t, u), "switch_up", -o0, kInf, {{s, 1.0}, {o, -1.0}});
        P.add_row(row_name("SD", t, u), "switch_dn", o0, kInf, {{s, 1.0}, {o, 1.0}});
        P.add_row(row_name("RU", t, u), "ramp_up", -p0, kInf, {{d, 1.0}, {p, -1.0}});
        P.add_row(row_name("RD", t, u), "ramp_dn", p0, kInf, {{d, 1.0}, {p, 1.0}});
      } else {
        const int op = L.on(t - 1, u), pp = L.power(t - 1, u);
        P.add_row(row_name("SU", t, u), "switch_up", 0.0, kInf, {{s, 1.0}, {o, -1.0}, {op, 1.0}});
        P.add_row(row_name("SD", t, u), "switch_dn", 0.0, kInf, {{s, 1.0}, {o, 1.0}, {op, -1.0}});
        P.add_row(row_name("RU", t, u), "ramp_up", 0.0, kInf, {{d, 1.0}, {p, -1.0}, {pp, 1.0}});
        P.add_row(row_name("RD", t, u), "ramp_dn", 0.0, kInf, {{d, 1.0}, {p, 1.0}, {pp, -1.0}});
      }
      // h = 0 forces P <= p_high - eps; h = 1 forces P >= p_high - eps.
      P.add_row(row_name("HL", t, u), "high_off", -kInf, sp.p_high - eps,
                {{p, 1.0}, {h, -(sp.p_max - sp.p_high + eps)}});
      P.add_row(row_name("HH", t, u), "high_on", 0.0, kInf, {{p, 1.0}, {h, -(sp.p_high - eps)}});
      // i = 0 forces P >= p_low + eps; i = 1 forces P <= p_low + eps.
      P.add_row(row_name("IL", t, u), "idle_off", sp.p_low + eps, kInf, {{p, 1.0}, {i, sp.p_low + eps}});
      P.add_row(row_name("IH", t, u), "idle_on", -kInf, sp.p_max, {{p, 1.0}, {i, sp.p_max - sp.p_low - eps}});
      P.add_row(row_name("IZ", t, u), "idle_aux", -1.0, kInf, {{z, 1.0}, {i, -1.0}, {o, -1.0}});
    }
    balance.clear();
    for (int u = 0; u < L.n_units; ++u) balance.push_back({L.power(t, u), static_cast<double>(mult)});
    balance.push_back({L.bat_power(t), 1.0});
    P.add_row(row_name("PB", t), "balance", demand[t], demand[t], balance);

    const int b = L.bat_power(t), c = L.bat_current(t), a = L.bat_abs(t), q = L.soc(t);
    if (t == 0) {
      const double soc0 = horizon.soc_initial;
      P.add_row(row_name("BI", t), "bat_current", sur.b_bat * soc0, sur.b_bat * soc0, {{c, 1.0}, {b, -k_cur}});
      P.add_row(row_name("SC", t), "soc", soc0, soc0, {{q, 1.0}, {c, -k_soc}});
    } else {
      const int qp = L.soc(t - 1);
      P.add_row(row_name("BI", t), "bat_current", 0.0, 0.0, {{c, 1.0}, {b, -k_cur}, {qp, -sur.b_bat}});
      P.add_row(row_name("SC", t), "soc", 0.0, 0.0, {{q, 1.0}, {qp, -1.0}, {c, -k_soc}});
    }
    P.add_row(row_name("AP", t), "bat_abs_pos", 0.0, kInf, {{a, 1.0}, {c, -1.0}});
    P.add_row(row_name("AN", t), "bat_abs_neg", 0.0, kInf, {{a, 1.0}, {c, 1.0}});
  }
  P.add_row("TERMINAL", "soc_terminal", horizon.soc_final_min, horizon.soc_final_max, {{L.soc(L.n_steps - 1), 1.0}});
  return out;
}

ValidationReport validate(const MiqpProblem& problem) {
  ValidationReport rep;
  std::vector<char> used(static_cast<std::size_t>(problem.num_vars()), 0);
  for (int r = 0; r < problem.num_rows(); ++r) {
    if (problem.row_end(r) == problem.row_begin(r)) {
      rep.findings.push_back({"coverage", "row " + problem.row_name(r) + " references no variable"});
    }
    if (problem.row_tag(r).empty()) rep.findings.push_back({"labels", "row " + problem.row_name(r) + " has no label"});
    if (problem.row_lo(r) > problem.row_hi(r)) {
      rep.findings.push_back({"bounds", "row " + problem.row_name(r) + " has lo > hi"});
    }
    for (int k = problem.row_begin(r); k < problem.row_end(r); ++k) used[problem.cols()[k]] = 1;
  }
  for (int j = 0; j < problem.num_vars(); ++j) {
    if (problem.q(j) < 0.0) {
      rep.findings.push_back({"convexity", "variable " + problem.var_name(j) + " has a negative quadratic term"});
    }
    if (!used[j]) rep.findings.push_back({"coverage", "variable " + problem.var_name(j) + " appears in no row"});
    if (problem.var_lo(j) > problem.var_hi(j)) {
      rep.findings.push_back({"bounds", "variable " + problem.var_name(j) + " has lo > hi"});
    }
    if (problem.is_integer(j) && (problem.var_lo(j) < 0.0 || problem.var_hi(j) > 1.0)) {
      rep.findings.push_back({"bounds", "binary " + problem.var_name(j) + " has bounds outside [0, 1]"});
    }
  }
  return rep;
}

CostBreakdown objective_terms(const BuiltProblem& built, std::span<const double> x, int steps) {
  const auto& L = built.layout;
  CostBreakdown cb;
  const int n = steps < 0 ? L.n_steps : std::min(steps, L.n_steps);
  for (int t = 0; t < n; ++t) {
    for (int u = 0; u < L.n_units; ++u) {
      const auto& r = built.unit_rates[u];
      const double p = x[L.power(t, u)];
      cb.h2 += 0.5 * r.fuel_q * p * p + r.fuel_lin * p + r.fuel_on * x[L.on(t, u)];
      cb.fc_load_change += r.ramp * x[L.ramp(t, u)];
      cb.fc_on_off += r.on_off * x[L.sw(t, u)];
      cb.fc_idling += r.idle * x[L.idle_aux(t, u)];
      cb.fc_high_load += r.high * x[L.high(t, u)];
    }
    const double a = x[L.bat_abs(t)];
    cb.battery_degradation += 0.5 * built.battery_rates.bat_q * a * a + built.battery_rates.bat_lin * a;
  }
  return cb;
}

Schedule extract_schedule(const BuiltProblem& built, std::span<const double> x, double integrality_tol) {
  const auto& L = built.layout;
  const auto& P = built.problem;
  if (static_cast<int>(x.size()) != P.num_vars()) {
    throw ValidationError("solution length " + std::to_string(x.size()) + " does not match " +
                          std::to_string(P.num_vars()) + " variables");
  }
  for (int j = 0; j < P.num_vars(); ++j) {
    if (P.is_integer(j) && std::abs(x[j] - std::round(x[j])) > integrality_tol) {
      throw ValidationError("column " + P.var_name(j) + " is fractional (" + std::to_string(x[j]) + ")");
    }
  }
  Schedule s;
  s.dt = built.horizon.dt;
  s.n_stacks = L.n_stacks;
  s.soc_initial = built.horizon.soc_initial;
  for (int j = 0; j < L.n_stacks; ++j) {
    s.initial_power.push_back(built.horizon.prev_power(j));
    s.initial_on.push_back(built.horizon.prev_on(j));
  }
  for (int t = 0; t < L.n_steps; ++t) {
    StepRecord rec;
    rec.demand = built.demand_kw[t];
    for (int j = 0; j < L.n_stacks; ++j) {
      const int u = L.unit_of(j);
      const int on = static_cast<int>(std::lround(x[L.on(t, u)]));
      double p = x[L.power(t, u)];
      if (on == 0) {
        if (std::abs(p) > 1e-6) {
          throw ValidationError("column " + P.var_name(L.power(t, u)) + ": stack off but carries power");
        }
        p = 0.0;
      }
      rec.stack_power.push_back(p);
      rec.stack_on.push_back(on);
    }
    rec.bat_power = x[L.bat_power(t)];
    rec.bat_current = x[L.bat_current(t)];
    rec.soc = x[L.soc(t)];
    s.steps.push_back(std::move(rec));
  }
  // Gating rows re-checked on the rounded pattern.
  for (int r = 0; r < P.num_rows(); ++r) {
    const auto& tag = P.row_tag(r);
    if (tag != "gate_lo" && tag != "gate_hi") continue;
    double a = 0.0;
    for (int k = P.row_begin(r); k < P.row_end(r); ++k) {
      const int j = P.cols()[k];
      a += P.coefs()[k] * (P.is_integer(j) ? std::round(x[j]) : x[j]);
    }
    if (a < P.row_lo(r) - 1e-6 || a > P.row_hi(r) + 1e-6) {
      throw ValidationError("gating row " + P.row_name(r) + " violated by " +
                            std::to_string(std::max(P.row_lo(r) - a, a - P.row_hi(r))));
    }
  }
  return s;
}

void dump(const MiqpProblem& problem, std::ostream& out) {
  out << "# " << problem.num_vars() << " columns, " << problem.num_rows() << " rows, " << problem.num_integers()
      << " binaries\n";
  for (int r = 0; r < problem.num_rows(); ++r) {
    out << problem.row_name(r) << " [" << problem.row_tag(r) << "] " << problem.row_lo(r) << " <=";
    for (int k = problem.row_begin(r); k < problem.row_end(r); ++k) {
      const double v = problem.coefs()[k];
      out << (v < 0 ? " - " : " + ") << std::abs(v) << ' ' << problem.var_name(problem.cols()[k]);
    }
    out << " <= " << problem.row_hi(r) << '\n';
  }
}

}  // namespace hems
