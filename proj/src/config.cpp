#include "hems/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "hems/error.hpp"

namespace hems {

using nlohmann::json;

namespace {

std::string path_str(const std::filesystem::path& p) { return p.empty() ? std::string() : p.generic_string(); }

std::filesystem::path resolve(const std::string& s, const std::filesystem::path& base) {
  if (s.empty()) return {};
  std::filesystem::path p(s);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string branching_name(Branching b) { return b == Branching::kMostFractional ? "most-fractional" : "pseudo-cost"; }
std::string selection_name(NodeSelection s) { return s == NodeSelection::kBestBound ? "best-bound" : "depth-first"; }

Branching branching_from(const std::string& s) {
  if (s == "most-fractional") return Branching::kMostFractional;
  if (s == "pseudo-cost") return Branching::kPseudoCost;
  throw ValidationError("unknown branching rule '" + s + "'");
}
NodeSelection selection_from(const std::string& s) {
  if (s == "best-bound") return NodeSelection::kBestBound;
  if (s == "depth-first") return NodeSelection::kDepthFirst;
  throw ValidationError("unknown node selection '" + s + "'");
}

// Every leaf of `patch` must already exist in `schema`.
void merge_checked(json& schema, const json& patch, const std::string& prefix) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!schema.contains(it.key())) throw ValidationError("unknown config key '" + key + "'");
    auto& slot = schema[it.key()];
    if (slot.is_object()) {
      if (!it->is_object()) throw ValidationError("config key '" + key + "' is a section");
      merge_checked(slot, *it, key);
    } else {
      if (it->is_object()) throw ValidationError("config key '" + key + "' is not a section");
      slot = *it;
    }
  }
}

template <typename T>
void get(const json& j, const char* key, T& out, const std::string& where) {
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config key '" + where + "." + key + "' has the wrong type");
  }
}

void set_dotted(json& root, const std::string& key, const json& value) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("malformed key '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    auto& next = (*node)[part];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ValidationError("key '" + key + "' conflicts with an earlier value");
    node = &next;
    start = dot + 1;
  }
}

void flatten(const json& j, const std::string& prefix, std::ostringstream& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else {
      out << key << " = " << it->dump() << '\n';
    }
  }
}

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  j["profile"] = {{"cycle_file", path_str(c.cycle_file)}, {"demand_scale", c.demand_scale}, {"steps", c.profile_steps}};
  const auto& v = c.vehicle;
  j["vehicle"] = {{"mass", v.mass},
                  {"gravity", v.gravity},
                  {"frontal_area", v.frontal_area},
                  {"rolling_coeff", v.rolling_coeff},
                  {"drag_coeff", v.drag_coeff},
                  {"air_density", v.air_density},
                  {"eff_transmission", v.eff_transmission},
                  {"eff_machine", v.eff_machine},
                  {"eff_regen", v.eff_regen}};
  j["battery"] = {{"capacity_ah", c.cell.capacity_ah},
                  {"i_min", c.cell.i_min},
                  {"i_max", c.cell.i_max},
                  {"temperature", c.cell.temperature},
                  {"ocv_file", path_str(c.ocv_file)},
                  {"r0_file", path_str(c.r0_file)},
                  {"cell_count", c.pack.cell_count},
                  {"energy_kwh", c.pack.energy_kwh},
                  {"price_per_kwh", c.pack.price_per_kwh}};
  j["battery"]["degradation"] = {
      {"a_c", c.cell.degradation.a_c}, {"b_c", c.cell.degradation.b_c}, {"z", c.cell.degradation.z}};
  j["battery"]["fit"] = {{"soc_lo", c.fit.soc_lo}, {"soc_hi", c.fit.soc_hi}, {"p_lo", c.fit.p_lo},
                         {"p_hi", c.fit.p_hi},     {"grid", c.fit.grid},     {"c_lo", c.fit.c_lo},
                         {"c_hi", c.fit.c_hi},     {"eol_samples", c.fit.eol_samples}};
  const auto& s = c.stack;
  j["fuelcell"] = {{"n_stacks", c.n_stacks},
                   {"cell_count", s.cell_count},
                   {"active_area", s.active_area},
                   {"p_max", s.p_max},
                   {"p_min", s.p_min},
                   {"p_low", s.p_low},
                   {"p_high", s.p_high},
                   {"a_fc", s.a_fc},
                   {"b_fc", s.b_fc},
                   {"c_fc", s.c_fc},
                   {"stack_cost", s.stack_cost},
                   {"v_drop_max", s.v_drop_max},
                   {"v_drop_max_event", s.v_drop_max_event},
                   {"fuel_curve_file", path_str(c.fuel_curve_file)}};
  j["degradation"] = {{"load_change", c.rates.load_change},
                      {"on_off", c.rates.on_off},
                      {"idling", c.rates.idling},
                      {"high_load", c.rates.high_load}};
  const auto& h = c.horizon;
  j["horizon"] = {{"dt", h.dt},
                  {"soc_initial", h.soc_initial},
                  {"soc_final_min", h.soc_final_min},
                  {"soc_final_max", h.soc_final_max},
                  {"soc_min", h.soc_min},
                  {"soc_max", h.soc_max},
                  {"h2_price", h.h2_price}};
  const auto& m = c.mpc;
  j["mpc"] = {{"horizon_s", m.horizon_s},   {"block_s", m.block_s},
              {"policy", to_string(m.policy)}, {"curtail", m.curtail},
              {"curtail_margin", m.curtail_margin}, {"group_hint", m.group_hint},
              {"group_time_limit", m.group_time_limit}};
  const auto& o = c.solver;
  j["solver"] = {{"abs_gap_tol", o.abs_gap_tol},
                 {"rel_gap_tol", o.rel_gap_tol},
                 {"time_limit", std::isfinite(o.time_limit) ? o.time_limit : 0.0},
                 {"node_limit", o.node_limit == std::numeric_limits<long>::max() ? 0L : o.node_limit},
                 {"integrality_tol", o.integrality_tol},
                 {"kkt_tol", o.kkt_tol},
                 {"branching", branching_name(o.branching)},
                 {"node_selection", selection_name(o.node_selection)},
                 {"threads", o.threads},
                 {"heuristics", o.heuristics},
                 {"dive_fix_fraction", o.dive_fix_fraction}};
  j["dp"] = {{"soc_step", c.dp.soc_step}, {"power_step", c.dp.power_step}, {"reachable_only", c.dp.reachable_only}};
  j["output"] = {{"dir", path_str(c.out_dir)}};
  return j;
}

RunConfig from_json(const json& patch, const std::filesystem::path& base) {
  if (!patch.is_object()) throw ValidationError("config root must be an object");
  json j = to_json(RunConfig{});
  merge_checked(j, patch, "");
  RunConfig c;
  std::string str;

  const auto& pr = j["profile"];
  get(pr, "cycle_file", str, "profile");
  c.cycle_file = resolve(str, base);
  get(pr, "demand_scale", c.demand_scale, "profile");
  get(pr, "steps", c.profile_steps, "profile");

  const auto& v = j["vehicle"];
  get(v, "mass", c.vehicle.mass, "vehicle");
  get(v, "gravity", c.vehicle.gravity, "vehicle");
  get(v, "frontal_area", c.vehicle.frontal_area, "vehicle");
  get(v, "rolling_coeff", c.vehicle.rolling_coeff, "vehicle");
  get(v, "drag_coeff", c.vehicle.drag_coeff, "vehicle");
  get(v, "air_density", c.vehicle.air_density, "vehicle");
  get(v, "eff_transmission", c.vehicle.eff_transmission, "vehicle");
  get(v, "eff_machine", c.vehicle.eff_machine, "vehicle");
  get(v, "eff_regen", c.vehicle.eff_regen, "vehicle");

  const auto& b = j["battery"];
  get(b, "capacity_ah", c.cell.capacity_ah, "battery");
  get(b, "i_min", c.cell.i_min, "battery");
  get(b, "i_max", c.cell.i_max, "battery");
  get(b, "temperature", c.cell.temperature, "battery");
  get(b, "ocv_file", str, "battery");
  c.ocv_file = resolve(str, base);
  get(b, "r0_file", str, "battery");
  c.r0_file = resolve(str, base);
  get(b, "cell_count", c.pack.cell_count, "battery");
  get(b, "energy_kwh", c.pack.energy_kwh, "battery");
  get(b, "price_per_kwh", c.pack.price_per_kwh, "battery");
  get(b["degradation"], "a_c", c.cell.degradation.a_c, "battery.degradation");
  get(b["degradation"], "b_c", c.cell.degradation.b_c, "battery.degradation");
  get(b["degradation"], "z", c.cell.degradation.z, "battery.degradation");
  const auto& f = b["fit"];
  get(f, "soc_lo", c.fit.soc_lo, "battery.fit");
  get(f, "soc_hi", c.fit.soc_hi, "battery.fit");
  get(f, "p_lo", c.fit.p_lo, "battery.fit");
  get(f, "p_hi", c.fit.p_hi, "battery.fit");
  get(f, "grid", c.fit.grid, "battery.fit");
  get(f, "c_lo", c.fit.c_lo, "battery.fit");
  get(f, "c_hi", c.fit.c_hi, "battery.fit");
  get(f, "eol_samples", c.fit.eol_samples, "battery.fit");

  const auto& fc = j["fuelcell"];
  get(fc, "n_stacks", c.n_stacks, "fuelcell");
  get(fc, "cell_count", c.stack.cell_count, "fuelcell");
  get(fc, "active_area", c.stack.active_area, "fuelcell");
  get(fc, "p_max", c.stack.p_max, "fuelcell");
  get(fc, "p_min", c.stack.p_min, "fuelcell");
  get(fc, "p_low", c.stack.p_low, "fuelcell");
  get(fc, "p_high", c.stack.p_high, "fuelcell");
  get(fc, "a_fc", c.stack.a_fc, "fuelcell");
  get(fc, "b_fc", c.stack.b_fc, "fuelcell");
  get(fc, "c_fc", c.stack.c_fc, "fuelcell");
  get(fc, "stack_cost", c.stack.stack_cost, "fuelcell");
  get(fc, "v_drop_max", c.stack.v_drop_max, "fuelcell");
  get(fc, "v_drop_max_event", c.stack.v_drop_max_event, "fuelcell");
  get(fc, "fuel_curve_file", str, "fuelcell");
  c.fuel_curve_file = resolve(str, base);

  const auto& d = j["degradation"];
  get(d, "load_change", c.rates.load_change, "degradation");
  get(d, "on_off", c.rates.on_off, "degradation");
  get(d, "idling", c.rates.idling, "degradation");
  get(d, "high_load", c.rates.high_load, "degradation");

  const auto& h = j["horizon"];
  get(h, "dt", c.horizon.dt, "horizon");
  get(h, "soc_initial", c.horizon.soc_initial, "horizon");
  get(h, "soc_final_min", c.horizon.soc_final_min, "horizon");
  get(h, "soc_final_max", c.horizon.soc_final_max, "horizon");
  get(h, "soc_min", c.horizon.soc_min, "horizon");
  get(h, "soc_max", c.horizon.soc_max, "horizon");
  get(h, "h2_price", c.horizon.h2_price, "horizon");
  c.horizon.n_stacks = c.n_stacks;

  const auto& m = j["mpc"];
  get(m, "horizon_s", c.mpc.horizon_s, "mpc");
  get(m, "block_s", c.mpc.block_s, "mpc");
  get(m, "policy", str, "mpc");
  c.mpc.policy = horizon_policy_from_string(str);
  get(m, "curtail", c.mpc.curtail, "mpc");
  get(m, "curtail_margin", c.mpc.curtail_margin, "mpc");
  get(m, "group_hint", c.mpc.group_hint, "mpc");
  get(m, "group_time_limit", c.mpc.group_time_limit, "mpc");
  c.horizon.n_steps = static_cast<int>(std::lround(c.mpc.horizon_s / c.horizon.dt));

  const auto& o = j["solver"];
  get(o, "abs_gap_tol", c.solver.abs_gap_tol, "solver");
  get(o, "rel_gap_tol", c.solver.rel_gap_tol, "solver");
  double tl = 0.0;
  get(o, "time_limit", tl, "solver");
  c.solver.time_limit = tl > 0.0 ? tl : std::numeric_limits<double>::infinity();
  long nl = 0;
  get(o, "node_limit", nl, "solver");
  c.solver.node_limit = nl > 0 ? nl : std::numeric_limits<long>::max();
  get(o, "integrality_tol", c.solver.integrality_tol, "solver");
  get(o, "kkt_tol", c.solver.kkt_tol, "solver");
  get(o, "branching", str, "solver");
  c.solver.branching = branching_from(str);
  get(o, "node_selection", str, "solver");
  c.solver.node_selection = selection_from(str);
  get(o, "threads", c.solver.threads, "solver");
  get(o, "heuristics", c.solver.heuristics, "solver");
  get(o, "dive_fix_fraction", c.solver.dive_fix_fraction, "solver");

  get(j["dp"], "soc_step", c.dp.soc_step, "dp");
  get(j["dp"], "power_step", c.dp.power_step, "dp");
  get(j["dp"], "reachable_only", c.dp.reachable_only, "dp");
  get(j["output"], "dir", str, "output");
  c.out_dir = resolve(str, base);

  if (!c.ocv_file.empty()) c.cell.ocv = load_curve_csv(c.ocv_file);
  if (!c.r0_file.empty()) c.cell.r0 = load_curve_csv(c.r0_file);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  vehicle.validate();
  cell.validate();
  pack.validate();
  stack.validate();
  rates.validate();
  horizon.validate();
  mpc.validate(horizon.dt);
  solver.validate();
  dp.validate();
  if (n_stacks < 1) throw ValidationError("fuelcell.n_stacks must be at least 1");
  if (!(demand_scale > 0.0)) throw ValidationError("profile.demand_scale must be positive");
  if (profile_steps < 0) throw ValidationError("profile.steps must be non-negative");
  if (!(fit.soc_lo < fit.soc_hi) || !(fit.p_lo < fit.p_hi) || !(fit.c_lo < fit.c_hi)) {
    throw ValidationError("battery.fit domain is empty");
  }
  if (horizon.soc_min < fit.soc_lo - 1e-9 || horizon.soc_max > fit.soc_hi + 1e-9) {
    throw ValidationError("horizon SOC bounds must lie inside the battery fit domain");
  }
  for (const auto* p : {&cycle_file, &ocv_file, &r0_file, &fuel_curve_file}) {
    if (!p->empty() && !std::filesystem::exists(*p)) throw ValidationError("file not found: " + p->string());
  }
}

SystemModel RunConfig::make_model() const {
  SystemModel model;
  model.cell = cell;
  model.pack = pack;
  model.rates = rates;
  FcStackParams sp = stack;
  if (!fuel_curve_file.empty()) {
    const auto fitc = fit_fuel_curve(load_fuel_samples(fuel_curve_file));
    sp.a_fc = fitc.a;
    sp.b_fc = fitc.b;
    sp.c_fc = fitc.c;
  }
  model.stacks = {sp};
  model.surrogate = fit_battery_surrogate(cell, fit.soc_lo, fit.soc_hi, fit.p_lo, fit.p_hi, fit.grid, fit.c_lo,
                                          fit.c_hi, fit.eol_samples);
  return model;
}

PowerProfile RunConfig::make_profile() const {
  if (cycle_file.empty()) throw ValidationError("profile.cycle_file is not set");
  auto prof = power_demand(load_drive_cycle(cycle_file), vehicle);
  if (profile_steps > 0) {
    if (static_cast<std::size_t>(profile_steps) > prof.size()) {
      throw ValidationError("profile.steps exceeds the cycle length");
    }
    prof.demand_kw.resize(static_cast<std::size_t>(profile_steps));
  }
  for (double& d : prof.demand_kw) d *= demand_scale;
  return prof;
}

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base) {
  json patch = json::object();
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", no);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", no);
    if (raw.empty()) throw ParseError("empty value for '" + key + "'", no);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded() || value.is_object() || value.is_array()) value = raw;  // bare word

    try {
      // Checked one key at a time so the error can carry the line number.
      json probe = to_json(RunConfig{});
      json one = json::object();
      set_dotted(one, key, value);
      merge_checked(probe, one, "");
      set_dotted(patch, key, value);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), no);
    }
  }
  return from_json(patch, base);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto base = path.parent_path();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError(path.string() + ": malformed JSON", 0);
    return from_json(j, base);
  }
  try {
    return parse_config_text(text, base);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream out;
  flatten(to_json(cfg), "", out);
  return out.str();
}

}  // namespace hems
