#include "hems/report.hpp"

#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "hems/error.hpp"

#ifndef HEMS_VERSION
#define HEMS_VERSION "0.0.0"
#endif

namespace hems {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string profile_hash(std::span<const double> demand, double dt) {
  std::string bytes;
  bytes.reserve((demand.size() + 1) * 8);
  auto put = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
  };
  put(dt);
  for (double d : demand) put(d);
  return hex64(fnv1a64(bytes));
}

std::span<const CategoryRow> category_rows() {
  static constexpr std::array<CategoryRow, 7> rows{{{"battery_degradation", "Battery degradation loss"},
                                                    {"h2", "H2 consumption cost"},
                                                    {"fc_idling", "FC idling loss"},
                                                    {"fc_high_load", "FC high load loss"},
                                                    {"fc_load_change", "FC load change loss"},
                                                    {"fc_on_off", "FC on/off switch loss"},
                                                    {"total", "Total cost (USD)"}}};
  return rows;
}

json breakdown_json(const CostBreakdown& c) {
  return {{"battery_degradation", c.battery_degradation}, {"h2", c.h2},
          {"fc_idling", c.fc_idling},                     {"fc_high_load", c.fc_high_load},
          {"fc_load_change", c.fc_load_change},           {"fc_on_off", c.fc_on_off},
          {"total", c.total()}};
}

CostBreakdown breakdown_from_json(const json& j) {
  CostBreakdown c;
  try {
    c.battery_degradation = j.at("battery_degradation").get<double>();
    c.h2 = j.at("h2").get<double>();
    c.fc_idling = j.at("fc_idling").get<double>();
    c.fc_high_load = j.at("fc_high_load").get<double>();
    c.fc_load_change = j.at("fc_load_change").get<double>();
    c.fc_on_off = j.at("fc_on_off").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("cost breakdown: ") + e.what());
  }
  return c;
}

json curtailments_json(std::span<const Curtailment> log) {
  json out = json::array();
  for (const auto& c : log) out.push_back({{"step", c.step}, {"requested_kw", c.requested_kw}, {"applied_kw", c.applied_kw}});
  return out;
}

json run_json(const MpcResult& r, const std::string& profile_digest) {
  json blocks = json::array();
  for (const auto& b : r.blocks) {
    blocks.push_back({{"start_step", b.start_step},
                      {"window_steps", b.window_steps},
                      {"applied_steps", b.applied_steps},
                      {"status", to_string(b.status)},
                      {"objective", b.objective},
                      {"best_bound", b.best_bound},
                      {"gap", b.gap},
                      {"wall_time_s", b.wall_time},
                      {"nodes", b.nodes},
                      {"incumbent_source", b.incumbent_source},
                      {"recovered", b.recovered},
                      {"soc_start", b.soc_start}});
  }
  const double final_soc = r.trace.steps.empty() ? r.trace.soc_initial : r.trace.steps.back().soc;
  return {{"mode", to_string(r.mode)},
          {"profile_hash", profile_digest},
          {"steps", r.trace.steps.size()},
          {"dt", r.trace.dt},
          {"n_stacks", r.trace.n_stacks},
          {"cost", breakdown_json(r.cost)},
          {"surrogate_cost", r.surrogate_cost},
          {"battery_surrogate_gap", r.cost.battery_degradation - r.surrogate_battery},
          {"final_soc", final_soc},
          {"curtailed_steps", r.trace.curtailments.size()},
          {"curtailments", curtailments_json(r.trace.curtailments)},
          {"wall_time_s", r.wall_time},
          {"blocks", blocks}};
}

json compare_runs(const json& a, const json& b) {
  const auto ha = a.value("profile_hash", std::string());
  const auto hb = b.value("profile_hash", std::string());
  if (ha != hb) throw ValidationError("runs used different profiles (" + ha + " vs " + hb + ")");
  const auto ca = breakdown_json(breakdown_from_json(a.at("cost")));
  const auto cb = breakdown_json(breakdown_from_json(b.at("cost")));
  json rows = json::array();
  for (const auto& row : category_rows()) {
    const double x = ca.at(row.key).get<double>(), y = cb.at(row.key).get<double>();
    json pct = nullptr;
    if (x != 0.0) pct = 100.0 * (y - x) / std::abs(x);
    else if (y == 0.0) pct = 0.0;
    rows.push_back({{"category", row.key}, {"label", row.label}, {"a", x}, {"b", y}, {"delta", y - x}, {"delta_pct", pct}});
  }
  return {{"a", a.value("mode", std::string("a"))},
          {"b", b.value("mode", std::string("b"))},
          {"profile_hash", ha},
          {"rows", rows}};
}

std::string comparison_table(const json& cmp) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %12s %12s %12s %10s\n", "Cost ($)", cmp.at("a").get<std::string>().c_str(),
                cmp.at("b").get<std::string>().c_str(), "delta", "delta %");
  out << line;
  for (const auto& r : cmp.at("rows")) {
    const auto& p = r.at("delta_pct");
    char pct[32];
    if (p.is_null()) std::snprintf(pct, sizeof pct, "%10s", "n/a");
    else std::snprintf(pct, sizeof pct, "%10.2f", p.get<double>());
    std::snprintf(line, sizeof line, "%-28s %12.4f %12.4f %12.4f %s\n", r.at("label").get<std::string>().c_str(),
                  r.at("a").get<double>(), r.at("b").get<double>(), r.at("delta").get<double>(), pct);
    out << line;
  }
  return out.str();
}

json manifest(const std::string& command, const std::string& config_text, const json& extra) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json m = {{"command", command},
            {"config_hash", hex64(fnv1a64(config_text))},
            {"seed", 0},
            {"version", HEMS_VERSION},
            {"compiler", __VERSION__},
            {"created_utc", stamp},
            {"config", config_text}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = *it;
  return m;
}

}  // namespace hems
