#pragma once

#include <filesystem>
#include <iosfwd>

#include "hems/problem.hpp"

namespace hems {

/// Fixed-format MPS with a QMATRIX section for the diagonal quadratic terms.
/// The objective constant is written as the RHS of the objective row with
/// flipped sign (objective = c'x + 0.5 x'Qx - rhs_obj), which is the usual
/// reader convention; the file header comment repeats this.
void write_mps(const MiqpProblem& problem, std::ostream& out, const std::string& name = "HEMS");
void export_mps(const MiqpProblem& problem, const std::filesystem::path& path, const std::string& name = "HEMS");

}  // namespace hems
