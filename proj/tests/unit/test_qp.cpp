#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "hems/qp.hpp"

using namespace hems;

TEST_CASE("unconstrained diagonal QP is solved in closed form") {
  MiqpProblem p;
  const double q[] = {2.0, 0.5, 4.0};
  const double c[] = {-1.0, 3.0, 0.25};
  for (int j = 0; j < 3; ++j) p.add_var("x" + std::to_string(j), -kInf, kInf, false, q[j], c[j]);
  auto sol = solve_qp(p);
  REQUIRE(sol.status == QpStatus::kOptimal);
  for (int j = 0; j < 3; ++j) CHECK(sol.x[j] == doctest::Approx(-c[j] / q[j]).epsilon(1e-9));
}

TEST_CASE("equality-constrained QP matches the dense KKT solve") {
  // 5 variables, 2 equality rows; oracle: [[Q A'],[A 0]] [x; -y] = [-c; b].
  MiqpProblem p;
  const double q[] = {1.0, 2.0, 3.0, 0.5, 1.5};
  const double c[] = {0.3, -1.0, 0.0, 2.0, -0.5};
  for (int j = 0; j < 5; ++j) p.add_var("x" + std::to_string(j), -kInf, kInf, false, q[j], c[j]);
  p.add_row("r0", "eq", 1.0, 1.0, {{0, 1.0}, {1, 1.0}, {2, 1.0}});
  p.add_row("r1", "eq", -2.0, -2.0, {{1, 2.0}, {3, -1.0}, {4, 0.5}});
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(7, 7);
  Eigen::VectorXd rhs(7);
  for (int j = 0; j < 5; ++j) {
    k(j, j) = q[j];
    rhs(j) = -c[j];
  }
  const double a[2][5] = {{1, 1, 1, 0, 0}, {0, 2, 0, -1, 0.5}};
  for (int r = 0; r < 2; ++r) {
    for (int j = 0; j < 5; ++j) {
      k(5 + r, j) = a[r][j];
      k(j, 5 + r) = a[r][j];
    }
  }
  rhs(5) = 1.0;
  rhs(6) = -2.0;
  Eigen::VectorXd expect = k.fullPivLu().solve(rhs);
  auto sol = solve_qp(p);
  REQUIRE(sol.status == QpStatus::kOptimal);
  for (int j = 0; j < 5; ++j) CHECK(sol.x[j] == doctest::Approx(expect(j)).epsilon(1e-8));
  CHECK(sol.violation < 1e-8);
}

TEST_CASE("contradictory equalities are certified infeasible") {
  MiqpProblem p;
  p.add_var("x", -kInf, kInf, false, 1.0, 0.0);
  p.add_var("y", -kInf, kInf, false, 1.0, 0.0);
  p.add_row("a", "eq", 1.0, 1.0, {{0, 1.0}, {1, 1.0}});
  p.add_row("b", "eq", 3.0, 3.0, {{0, 1.0}, {1, 1.0}});
  auto sol = solve_qp(p);
  CHECK(sol.status == QpStatus::kInfeasible);
  CHECK(sol.phase1_value > 0.5);
}

TEST_CASE("bounded LP-like QP hits its bounds and reports a valid lower bound") {
  MiqpProblem p;
  p.add_var("x", 0.0, 1.0, false, 0.0, -1.0);
  p.add_var("y", 0.0, 2.0, false, 0.0, -1.0);
  p.add_row("cap", "le", -kInf, 2.5, {{0, 1.0}, {1, 1.0}});
  auto sol = solve_qp(p);
  REQUIRE(sol.status == QpStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(-2.5).epsilon(1e-8));
  CHECK(sol.lower_bound <= sol.objective);
  CHECK(sol.lower_bound == doctest::Approx(-2.5).epsilon(1e-7));
}

TEST_CASE("fixed bounds eliminate variables") {
  MiqpProblem p;
  p.add_var("x", 0.0, 1.0, true, 0.0, 1.0);
  p.add_var("y", 0.0, 10.0, false, 2.0, 0.0);
  p.add_row("link", "ge", 3.0, kInf, {{0, 5.0}, {1, 1.0}});
  std::vector<double> lo{1.0, 0.0}, hi{1.0, 10.0};
  QpSolver solver(p);
  auto sol = solver.solve(lo, hi);
  REQUIRE(sol.status == QpStatus::kOptimal);
  CHECK(sol.x[0] == 1.0);
  CHECK(sol.x[1] == doctest::Approx(0.0).epsilon(1e-6));
  lo[0] = hi[0] = 0.0;
  sol = solver.solve(lo, hi);
  REQUIRE(sol.status == QpStatus::kOptimal);
  CHECK(sol.x[1] == doctest::Approx(3.0).epsilon(1e-8));
}
