#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hems/dp.hpp"
#include "hems/formulation.hpp"
#include "hems/miqp.hpp"
#include "hems/mpc.hpp"
#include "hems/vehicle.hpp"

namespace hems {

struct SurrogateDomain {
  double soc_lo = 20.0, soc_hi = 90.0;  // %
  double p_lo = -12.0, p_hi = 12.0;     // W per cell
  int grid = 30;
  double c_lo = 0.5, c_hi = 10.0;
  int eol_samples = 20;
};

/// Everything a CLI run needs. Relative paths are resolved against the
/// directory of the config file.
struct RunConfig {
  std::filesystem::path cycle_file;
  double demand_scale = 1.0;
  int profile_steps = 0;  // 0 keeps the whole cycle
  VehicleParams vehicle;

  BatteryCellParams cell = BatteryCellParams::default_cell();
  std::filesystem::path ocv_file, r0_file;
  BatteryPackParams pack;
  SurrogateDomain fit;

  int n_stacks = 8;
  FcStackParams stack;
  std::filesystem::path fuel_curve_file;
  DegradationRates rates;

  HorizonSpec horizon;
  MpcConfig mpc;
  SolverOptions solver;
  DpGrids dp;
  std::filesystem::path out_dir = "runs";

  void validate() const;
  /// Curves loaded, fuel curve fitted when a file is given, battery surrogate fitted.
  SystemModel make_model() const;
  PowerProfile make_profile() const;
};

/// The full schema with every default, as nested JSON.
nlohmann::json to_json(const RunConfig& cfg);
RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// `a.b.c = value` lines; `#` starts a comment; values are JSON scalars or
/// bare words. Unknown keys are rejected with their line number.
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
/// Picks JSON or dotted text by the first non-blank character.
RunConfig load_config(const std::filesystem::path& path);

/// Dotted-key rendering of the full schema (stable order).
std::string to_config_text(const RunConfig& cfg);

}  // namespace hems
