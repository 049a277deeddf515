#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hems/cost.hpp"
#include "hems/mpc.hpp"

namespace hems {

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);
/// Hash of a demand sequence (bit patterns of the doubles plus dt).
std::string profile_hash(std::span<const double> demand, double dt);

nlohmann::json breakdown_json(const CostBreakdown& c);
CostBreakdown breakdown_from_json(const nlohmann::json& j);

/// One object per clipped regen step.
nlohmann::json curtailments_json(std::span<const Curtailment> log);

/// Machine-readable record of an MPC run.
nlohmann::json run_json(const MpcResult& r, const std::string& profile_digest);

/// Category rows in display order, with labels.
struct CategoryRow {
  const char* key;
  const char* label;
};
std::span<const CategoryRow> category_rows();

/// Per-category absolute and percent deltas of b against a. Throws
/// ValidationError when the two runs used different profiles.
nlohmann::json compare_runs(const nlohmann::json& run_a, const nlohmann::json& run_b);
/// Aligned text table of a comparison.
std::string comparison_table(const nlohmann::json& cmp);

/// Reproducibility record for a CLI run.
nlohmann::json manifest(const std::string& command, const std::string& config_text, const nlohmann::json& extra);

}  // namespace hems
