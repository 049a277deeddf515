// Command-line front end: profile, fit, optimize, dp, simulate, compare.
//
// Exit codes: 0 ok, 1 unexpected error, 2 invalid input, 3 fit failure,
// 4 solver infeasible, 5 solver stopped by a limit without an incumbent.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iomanip>

#include <CLI11.hpp>
#include <json.hpp>

#include "hems/config.hpp"
#include "hems/dp.hpp"
#include "hems/error.hpp"
#include "hems/mpc.hpp"
#include "hems/mps.hpp"
#include "hems/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hems;

namespace {

constexpr int kExitInput = 2, kExitFit = 3, kExitInfeasible = 4, kExitLimit = 5;

struct Common {
  std::string config;
  std::string out;
  bool log = false;
};

RunConfig load(const Common& c) { return c.config.empty() ? RunConfig{} : load_config(c.config); }

fs::path out_dir(const Common& c, const RunConfig& cfg, const std::string& what) {
  fs::path dir;
  if (!c.out.empty()) {
    dir = c.out;
  } else {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::gmtime(&now));
    dir = cfg.out_dir / (what + "-" + stamp);
  }
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError(path.string() + ": malformed JSON");
  return j;
}

StackControl mode_of(const std::string& s) { return stack_control_from_string(s); }

SolverOptions solver_opts(const RunConfig& cfg, const Common& c) {
  SolverOptions o = cfg.solver;
  if (c.log) o.log = &std::cerr;
  return o;
}

void print_costs(const std::string& title, const CostBreakdown& cost) {
  std::cout << title << '\n';
  const auto j = breakdown_json(cost);
  for (const auto& row : category_rows()) {
    std::printf("  %-28s %12.6f\n", row.label, j.at(row.key).get<double>());
  }
}

int cmd_profile(const Common& c, const std::string& cycle) {
  auto cfg = load(c);
  if (!cycle.empty()) cfg.cycle_file = cycle;
  const auto prof = cfg.make_profile();
  const auto dir = out_dir(c, cfg, "profile");
  save_profile_csv(prof, dir / "profile.csv");
  double peak = -kInf, low = kInf, energy = 0.0;
  for (double d : prof.demand_kw) {
    peak = std::max(peak, d);
    low = std::min(low, d);
    energy += d * prof.dt / 3600.0;
  }
  write_json(dir / "manifest.json",
             manifest("profile", to_config_text(cfg),
                      {{"profile_hash", profile_hash(prof.demand_kw, prof.dt)},
                       {"steps", prof.size()},
                       {"peak_kw", peak},
                       {"min_kw", low},
                       {"net_energy_kwh", energy}}));
  std::printf("%zu steps, peak %.1f kW, min %.1f kW, net %.3f kWh -> %s\n", prof.size(), peak, low, energy,
              (dir / "profile.csv").string().c_str());
  return 0;
}

int cmd_fit(const Common& c, const std::string& fuel) {
  auto cfg = load(c);
  if (!fuel.empty()) cfg.fuel_curve_file = fuel;
  if (cfg.fuel_curve_file.empty()) throw FitError("no fuel curve data (fuelcell.fuel_curve_file or --fuel-curve)");
  std::vector<std::pair<double, double>> samples;
  try {
    samples = load_fuel_samples(cfg.fuel_curve_file);
  } catch (const ParseError& e) {
    throw FitError(std::string("fuel curve data: ") + e.what());
  }
  if (samples.empty()) throw FitError("fuel curve data is empty");
  const auto f = fit_fuel_curve(samples);
  double p_lo = kInf, p_hi = -kInf;
  for (const auto& s : samples) {
    p_lo = std::min(p_lo, s.first);
    p_hi = std::max(p_hi, s.first);
  }
  const auto& d = cfg.fit;
  const auto sur =
      fit_battery_surrogate(cfg.cell, d.soc_lo, d.soc_hi, d.p_lo, d.p_hi, d.grid, d.c_lo, d.c_hi, d.eol_samples);
  const auto dir = out_dir(c, cfg, "fit");
  std::ofstream out(dir / "fit.conf");
  out << std::setprecision(12);
  out << "# fuel curve, " << samples.size() << " samples over [" << p_lo << ", " << p_hi << "] kW, R2 = " << f.r_squared
      << '\n';
  out << "fuelcell.a_fc = " << f.a << "\nfuelcell.b_fc = " << f.b << "\nfuelcell.c_fc = " << f.c << '\n';
  out << "# battery current I = a_bat * P_cell + b_bat * SOC over SOC [" << d.soc_lo << ", " << d.soc_hi << "] %, P ["
      << d.p_lo << ", " << d.p_hi << "] W\n";
  out << "# a_bat = " << sur.a_bat << "\n# b_bat = " << sur.b_bat << "\n# current fit R2 = " << sur.r_squared_current
      << ", max abs error = " << sur.max_abs_error_current << " A\n";
  out << "# 1/Ah_EOL = a_d * C + b_d over C [" << d.c_lo << ", " << d.c_hi << "]\n";
  out << "# a_d = " << sur.a_d << "\n# b_d = " << sur.b_d << "\n# EOL fit R2 = " << sur.r_squared_eol << '\n';
  write_json(dir / "manifest.json", manifest("fit", to_config_text(cfg),
                                             {{"fuel_r2", f.r_squared},
                                              {"current_r2", sur.r_squared_current},
                                              {"eol_r2", sur.r_squared_eol}}));
  std::printf("a_fc %.6g b_fc %.6g c_fc %.6g (R2 %.6f)\na_bat %.6g b_bat %.6g (R2 %.4f)\na_d %.6g b_d %.6g (R2 %.4f)\n",
              f.a, f.b, f.c, f.r_squared, sur.a_bat, sur.b_bat, sur.r_squared_current, sur.a_d, sur.b_d,
              sur.r_squared_eol);
  return 0;
}

json solution_json(const MiqpSolution& s) {
  return {{"status", to_string(s.status)},     {"objective", s.objective},   {"best_bound", s.best_bound},
          {"gap", s.gap},                      {"nodes", s.nodes_explored},  {"qp_solves", s.qp_solves},
          {"node_failures", s.node_failures},  {"root_bound", s.root_bound}, {"wall_time_s", s.wall_time},
          {"incumbent_source", s.incumbent_source}};
}

int cmd_optimize(const Common& c, const std::string& mode_s, const std::string& mps) {
  const auto cfg = load(c);
  const auto mode = mode_of(mode_s);
  const auto model = cfg.make_model();
  const auto prof = cfg.make_profile();
  const auto dir = out_dir(c, cfg, "optimize-" + mode_s);
  if (!mps.empty()) {
    const int n = cfg.horizon.n_steps;
    if (static_cast<int>(prof.size()) < n) throw ValidationError("profile is shorter than the horizon");
    std::vector<double> raw(prof.demand_kw.begin(), prof.demand_kw.begin() + n);
    const auto served = cfg.mpc.curtail ? curtail_regen(raw, model, cfg.horizon, cfg.mpc.curtail_margin, nullptr) : raw;
    HorizonSpec h = cfg.horizon;
    h.dt = prof.dt;
    h.mode = mode;
    export_mps(build(served, h, model).problem, mps);
    std::cout << "wrote " << mps << '\n';
  }
  const auto res = optimize_once(prof, model, cfg.horizon, cfg.mpc, mode, solver_opts(cfg, c));
  save_trace_csv(res.trace, dir / "schedule.csv");
  json j = solution_json(res.window.solution);
  j["mode"] = mode_s;
  j["recovered"] = res.window.recovered;
  j["profile_hash"] = profile_hash(prof.demand_kw, prof.dt);
  j["cost"] = breakdown_json(res.cost);
  j["surrogate_cost"] = breakdown_json(res.surrogate);
  j["battery_surrogate_gap"] = res.cost.battery_degradation - res.surrogate.battery_degradation;
  j["curtailed_steps"] = res.curtailments.size();
  j["curtailments"] = curtailments_json(res.curtailments);
  write_json(dir / "solution.json", j);
  write_json(dir / "manifest.json", manifest("optimize", to_config_text(cfg), {{"mode", mode_s}}));
  std::printf("%s objective %.6f bound %.6f gap %.3g nodes %ld in %.2f s\n", to_string(res.window.solution.status).c_str(),
              res.window.solution.objective, res.window.solution.best_bound, res.window.solution.gap,
              res.window.solution.nodes_explored, res.window.solution.wall_time);
  print_costs("truth cost of the schedule:", res.cost);
  return 0;
}

int cmd_dp(const Common& c, const std::string& dump, bool skip_miqp) {
  const auto cfg = load(c);
  const auto model = cfg.make_model();
  const auto prof = cfg.make_profile();
  const int n = cfg.horizon.n_steps;
  if (static_cast<int>(prof.size()) < n) throw ValidationError("profile is shorter than the horizon");
  std::vector<double> raw(prof.demand_kw.begin(), prof.demand_kw.begin() + n);
  const auto served = cfg.mpc.curtail ? curtail_regen(raw, model, cfg.horizon, cfg.mpc.curtail_margin, nullptr) : raw;
  HorizonSpec h = cfg.horizon;
  h.dt = prof.dt;
  h.mode = StackControl::kCollective;
  DpBenchmark dp(served, model, h, cfg.dp);
  const auto res = dp.solve();
  const auto roll = dp.rollout();
  const auto dir = out_dir(c, cfg, "dp");
  save_trace_csv(roll.trace, dir / "rollout.csv");
  if (!dump.empty()) save_value_tables(dp.policy(), dump);
  json j = {{"dp_value", res.cost},
            {"dp_wall_time_s", res.wall_time},
            {"transitions", res.transitions},
            {"soc_points", dp.policy().n_soc()},
            {"power_points", dp.policy().n_power()},
            {"rollout_cost", breakdown_json(roll.cost)},
            {"profile_hash", profile_hash(prof.demand_kw, prof.dt)}};
  std::printf("DP value %.6f, rollout %.6f, %.2f s (%zu x %zu states)\n", res.cost, roll.cost.total(), res.wall_time,
              dp.policy().n_soc(), dp.policy().n_power());
  if (!skip_miqp) {
    const auto opt = optimize_once(prof, model, cfg.horizon, cfg.mpc, StackControl::kCollective, solver_opts(cfg, c));
    const double t = opt.window.solution.wall_time;
    j["miqp"] = solution_json(opt.window.solution);
    j["miqp_truth_cost"] = breakdown_json(opt.cost);
    j["speedup"] = t > 0.0 ? json(res.wall_time / t) : json(nullptr);
    std::printf("MIQP (collective) objective %.6f, truth %.6f, %.3f s, DP/MIQP time ratio %.1f\n",
                opt.window.solution.objective, opt.cost.total(), t, t > 0.0 ? res.wall_time / t : 0.0);
  }
  write_json(dir / "dp.json", j);
  write_json(dir / "manifest.json", manifest("dp", to_config_text(cfg), json::object()));
  print_costs("rollout cost:", roll.cost);
  return 0;
}

int cmd_simulate(const Common& c, const std::string& mode_s) {
  const auto cfg = load(c);
  const auto mode = mode_of(mode_s);
  const auto model = cfg.make_model();
  const auto prof = cfg.make_profile();
  const auto res = run_mpc(prof, model, cfg.horizon, cfg.mpc, mode, solver_opts(cfg, c));
  const auto dir = out_dir(c, cfg, "simulate-" + mode_s);
  save_trace_csv(res.trace, dir / "trace.csv");
  write_json(dir / "run.json", run_json(res, profile_hash(prof.demand_kw, prof.dt)));
  write_json(dir / "manifest.json", manifest("simulate", to_config_text(cfg), {{"mode", mode_s}}));
  std::printf("%zu blocks in %.1f s, final SOC %.3f %%\n", res.blocks.size(), res.wall_time,
              res.trace.steps.empty() ? res.trace.soc_initial : res.trace.steps.back().soc);
  print_costs("truth cost:", res.cost);
  std::cout << "output: " << dir.string() << '\n';
  return 0;
}

int cmd_compare(const Common& c, const std::string& a, const std::string& b) {
  auto locate = [](fs::path p) { return fs::is_directory(p) ? p / "run.json" : p; };
  const auto ja = read_json(locate(a));
  const auto jb = read_json(locate(b));
  const auto cmp = compare_runs(ja, jb);
  const auto cfg = load(c);
  const auto dir = out_dir(c, cfg, "compare");
  write_json(dir / "compare.json", cmp);
  const auto table = comparison_table(cmp);
  std::ofstream(dir / "compare.txt") << table;
  write_json(dir / "manifest.json", manifest("compare", to_config_text(cfg), {{"a", a}, {"b", b}}));
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Health-aware energy management for multi-stack fuel cell / battery hybrids"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Config file (dotted keys or JSON)");
    sub->add_option("--out", common.out, "Output directory (default: output.dir/<command>-<timestamp>)");
    sub->add_flag("--log", common.log, "Print the solver incumbent log to stderr");
  };

  std::string cycle, fuel, mode = "isc", mps, dump, run_a, run_b;
  bool no_miqp = false;
  auto* profile = app.add_subcommand("profile", "Drive cycle to electrical demand profile");
  add_common(profile);
  profile->add_option("--cycle", cycle, "Drive-cycle CSV (t_s,v_mps[,grade_rad])");
  auto* fit = app.add_subcommand("fit", "Fit fuel-curve and battery surrogate coefficients");
  add_common(fit);
  fit->add_option("--fuel-curve", fuel, "Fuel curve CSV (p_kw,mdot_kg_per_s)");
  auto* optimize = app.add_subcommand("optimize", "Single MIQP solve over the horizon");
  add_common(optimize);
  optimize->add_option("--mode", mode, "isc | csc")->check(CLI::IsMember({"isc", "csc"}));
  optimize->add_option("--export-mps", mps, "Also write the problem as MPS");
  auto* dp = app.add_subcommand("dp", "Dynamic-programming benchmark (collective control)");
  add_common(dp);
  dp->add_option("--dump-values", dump, "Binary dump of the value tables");
  dp->add_flag("--no-miqp", no_miqp, "Skip the MIQP timing comparison");
  auto* simulate = app.add_subcommand("simulate", "Block receding-horizon simulation");
  add_common(simulate);
  simulate->add_option("--mode", mode, "isc | csc")->check(CLI::IsMember({"isc", "csc"}));
  auto* compare = app.add_subcommand("compare", "Cost comparison of two simulate runs");
  add_common(compare);
  compare->add_option("run_a", run_a, "run.json or its directory")->required();
  compare->add_option("run_b", run_b, "run.json or its directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*profile) return cmd_profile(common, cycle);
    if (*fit) return cmd_fit(common, fuel);
    if (*optimize) return cmd_optimize(common, mode, mps);
    if (*dp) return cmd_dp(common, dump, no_miqp);
    if (*simulate) return cmd_simulate(common, mode);
    if (*compare) return cmd_compare(common, run_a, run_b);
  } catch (const FitError& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return kExitFit;
  } catch (const SolveFailure& e) {
    std::cerr << "solver: " << e.what() << '\n';
    return e.status() == MiqpStatus::kInfeasible ? kExitInfeasible : kExitLimit;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
