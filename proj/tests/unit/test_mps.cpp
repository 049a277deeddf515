#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/instances.hpp"
#include "doctest.h"
#include "hems/error.hpp"
#include "hems/formulation.hpp"
#include "hems/mps.hpp"

using namespace hems;

namespace {

// Minimal free-form MPS reader: whitespace tokens per line, sections by
// keyword, objective constant as minus the RHS of the objective row.
struct ReadBack {
  std::string obj_row;
  std::map<std::string, char> row_type;
  std::vector<std::string> row_order;
  std::vector<std::string> col_order;
  std::map<std::string, bool> integer;
  std::map<std::string, std::map<std::string, double>> coef;  // col -> row -> value
  std::map<std::string, double> rhs, range;
  std::map<std::string, double> lo, hi, quad;
  double constant = 0.0;
};

ReadBack read_mps(const std::string& text) {
  ReadBack rb;
  std::istringstream in(text);
  std::string line, section;
  bool in_int = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (line[0] != ' ') {
      section = tok[0];
      continue;
    }
    if (section == "ROWS") {
      if (tok[0] == "N") {
        rb.obj_row = tok[1];
      } else {
        rb.row_type[tok[1]] = tok[0][0];
        rb.row_order.push_back(tok[1]);
      }
    } else if (section == "COLUMNS") {
      if (tok.size() >= 3 && tok[1] == "'MARKER'") {
        in_int = tok[2] == "'INTORG'";
        continue;
      }
      const auto& col = tok[0];
      if (rb.col_order.empty() || rb.col_order.back() != col) {
        rb.col_order.push_back(col);
        rb.integer[col] = in_int;
        rb.lo[col] = 0.0;
        rb.hi[col] = kInf;
      }
      for (std::size_t k = 1; k + 1 < tok.size(); k += 2) rb.coef[col][tok[k]] = std::stod(tok[k + 1]);
    } else if (section == "RHS") {
      const double v = std::stod(tok[2]);
      if (tok[1] == rb.obj_row) rb.constant = -v;
      else rb.rhs[tok[1]] = v;
    } else if (section == "RANGES") {
      rb.range[tok[1]] = std::stod(tok[2]);
    } else if (section == "BOUNDS") {
      const auto& kind = tok[0];
      const auto& col = tok[2];
      if (kind == "BV") {
        rb.lo[col] = 0.0;
        rb.hi[col] = 1.0;
      } else if (kind == "FR") {
        rb.lo[col] = -kInf;
        rb.hi[col] = kInf;
      } else if (kind == "MI") {
        rb.lo[col] = -kInf;
      } else if (kind == "FX") {
        rb.lo[col] = rb.hi[col] = std::stod(tok[3]);
      } else if (kind == "LO") {
        rb.lo[col] = std::stod(tok[3]);
      } else if (kind == "UP") {
        rb.hi[col] = std::stod(tok[3]);
      }
    } else if (section == "QMATRIX") {
      REQUIRE(tok[0] == tok[1]);
      rb.quad[tok[0]] = std::stod(tok[2]);
    }
  }
  return rb;
}

// Row interval as the reader understands it.
std::pair<double, double> row_interval(const ReadBack& rb, const std::string& row) {
  const double b = rb.rhs.count(row) ? rb.rhs.at(row) : 0.0;
  const char t = rb.row_type.at(row);
  const bool ranged = rb.range.count(row) > 0;
  const double r = ranged ? rb.range.at(row) : 0.0;
  if (t == 'E') return {b, b};
  if (t == 'G') return {b, ranged ? b + std::abs(r) : kInf};
  return {ranged ? b - std::abs(r) : -kInf, b};
}

}  // namespace

TEST_CASE("tiny problem survives an independent reader") {
  MiqpProblem p;
  const int x = p.add_var("X", 0.0, 4.0, false, 2.0, -1.0);
  const int y = p.add_var("Y", 0.0, 1.0, true, 0.0, 3.0);
  const int z = p.add_var("Z", -kInf, kInf, false, 0.5, 0.0);
  const int w = p.add_var("W", -2.0, 5.0, false, 0.0, 0.25);
  p.add_row("R1", "a", 1.0, 1.0, {{x, 1.0}, {y, 1.0}});
  p.add_row("R2", "b", -kInf, 3.0, {{x, 2.0}, {z, -1.0}});
  p.add_row("R3", "c", -1.0, kInf, {{z, 1.0}, {w, 1.0}});
  p.add_row("R4", "d", -2.0, 6.0, {{x, 1.0}, {w, -3.0}, {y, 1.0}});
  p.add_constant(7.5);
  std::ostringstream out;
  write_mps(p, out, "TINY");
  const auto text = out.str();
  CHECK(text.find("constant = -RHS(OBJ)") != std::string::npos);
  const auto rb = read_mps(text);
  CHECK(rb.row_order.size() == 4);
  CHECK(rb.col_order.size() == 4);
  CHECK(rb.integer.at("Y"));
  CHECK(!rb.integer.at("X"));
  CHECK(rb.constant == 7.5);
  CHECK(rb.lo.at("Z") == -kInf);
  CHECK(rb.lo.at("W") == -2.0);
  CHECK(rb.hi.at("W") == 5.0);
  CHECK(rb.quad.at("X") == 2.0);
  const auto r4 = row_interval(rb, "R4");
  CHECK(r4.first == -2.0);
  CHECK(r4.second == 6.0);
}

TEST_CASE("built window round-trips through the reader") {
  std::mt19937_64 rng(99);
  const auto base = hems::testing::fitted_default_model();
  const auto in = hems::testing::random_instance(rng, base, 4, 2, StackControl::kIndividual);
  auto b = build(in.demand, in.horizon, in.model);
  b.problem.add_constant(1.25);
  std::ostringstream out;
  write_mps(b.problem, out);
  const auto rb = read_mps(out.str());
  const auto& P = b.problem;
  REQUIRE(static_cast<int>(rb.row_order.size()) == P.num_rows());
  REQUIRE(static_cast<int>(rb.col_order.size()) == P.num_vars());
  int ints = 0;
  for (const auto& [c, i] : rb.integer) ints += i ? 1 : 0;
  CHECK(ints == P.num_integers());
  std::map<std::string, int> col_index;
  for (int j = 0; j < P.num_vars(); ++j) col_index[P.var_name(j)] = j;
  for (int j = 0; j < P.num_vars(); ++j) {
    const auto& n = P.var_name(j);
    CHECK(rb.lo.at(n) == P.var_lo(j));
    CHECK(rb.hi.at(n) == P.var_hi(j));
  }
  for (int r = 0; r < P.num_rows(); ++r) {
    const auto [lo, hi] = row_interval(rb, P.row_name(r));
    if (std::isinf(P.row_lo(r))) CHECK(lo == P.row_lo(r));
    else CHECK(lo == doctest::Approx(P.row_lo(r)).epsilon(1e-14));
    if (std::isinf(P.row_hi(r))) CHECK(hi == P.row_hi(r));
    else CHECK(hi == doctest::Approx(P.row_hi(r)).epsilon(1e-14));
  }
  // Objective and activities agree at random points.
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> xv(static_cast<std::size_t>(P.num_vars()));
    for (auto& v : xv) v = u(rng);
    double obj = rb.constant;
    std::map<std::string, double> act;
    for (const auto& [col, rows] : rb.coef) {
      const double xj = xv[static_cast<std::size_t>(col_index.at(col))];
      for (const auto& [row, v] : rows) (row == rb.obj_row ? obj : act[row]) += v * xj;
    }
    for (const auto& [col, q] : rb.quad) obj += 0.5 * q * xv[col_index.at(col)] * xv[col_index.at(col)];
    CHECK(obj == doctest::Approx(P.objective(xv)).epsilon(1e-12));
    for (int r = 0; r < P.num_rows(); ++r) {
      CHECK(act[P.row_name(r)] == doctest::Approx(P.row_activity(r, xv)).epsilon(1e-12));
    }
  }
}

TEST_CASE("empty problem cannot be exported") {
  std::ostringstream out;
  CHECK_THROWS_AS(write_mps(MiqpProblem{}, out), ValidationError);
}
