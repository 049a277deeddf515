#include <cmath>
#include <random>
#include <regex>
#include <sstream>

#include "../support/instances.hpp"
#include "doctest.h"
#include "hems/formulation.hpp"
#include "hems/miqp.hpp"
#include "hems/qp.hpp"

using namespace hems;

namespace {

const SystemModel& model() {
  static const SystemModel m = hems::testing::fitted_default_model();
  return m;
}

SolverOptions tight() {
  SolverOptions o;
  o.abs_gap_tol = 1e-9;
  o.rel_gap_tol = 1e-12;
  return o;
}

}  // namespace

TEST_CASE("three steps, one stack: matches the full enumeration") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 3; ++rep) {
    const auto in = hems::testing::random_instance(rng, model(), 3, 1, StackControl::kIndividual);
    const auto b = build(in.demand, in.horizon, in.model);
    const auto full = hems::testing::enumerate_binaries(b, false);
    const auto pruned = hems::testing::enumerate_binaries(b, true);
    CHECK(full.patterns == 4096);
    CHECK(pruned.patterns == 64);
    REQUIRE(std::isfinite(full.objective));
    CHECK(pruned.objective == doctest::Approx(full.objective).epsilon(1e-10));
    const auto sol = solve(b.problem, tight());
    REQUIRE(sol.status == MiqpStatus::kOptimal);
    CHECK(std::abs(sol.objective - full.objective) <= 1e-6);
  }
}

TEST_CASE("two stacks: matches the pruned enumeration in both search orders") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 3; ++rep) {
    const auto in = hems::testing::random_instance(rng, model(), 3, 2, StackControl::kIndividual);
    const auto b = build(in.demand, in.horizon, in.model);
    const auto oracle = hems::testing::enumerate_binaries(b, true);
    REQUIRE(std::isfinite(oracle.objective));
    for (auto sel : {NodeSelection::kBestBound, NodeSelection::kDepthFirst}) {
      for (auto br : {Branching::kMostFractional, Branching::kPseudoCost}) {
        auto o = tight();
        o.node_selection = sel;
        o.branching = br;
        const auto sol = solve(b.problem, o);
        REQUIRE(sol.status == MiqpStatus::kOptimal);
        CHECK(std::abs(sol.objective - oracle.objective) <= 1e-6);
      }
    }
    auto plain = tight();
    plain.heuristics = false;
    CHECK(std::abs(solve(b.problem, plain).objective - oracle.objective) <= 1e-6);
  }
}

TEST_CASE("all binaries fixed by bounds is a single QP") {
  std::mt19937_64 rng(13);
  const auto in = hems::testing::random_instance(rng, model(), 4, 2, StackControl::kIndividual);
  auto b = build(in.demand, in.horizon, in.model);
  const auto first = solve(b.problem, tight());
  REQUIRE(first.has_incumbent());
  for (int j = 0; j < b.problem.num_vars(); ++j) {
    if (b.problem.is_integer(j)) {
      const double v = std::round(first.values[j]);
      b.problem.set_var_bounds(j, v, v);
    }
  }
  const auto qp = solve_qp(b.problem);
  const auto sol = solve(b.problem, tight());
  REQUIRE(qp.status == QpStatus::kOptimal);
  REQUIRE(sol.status == MiqpStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(qp.objective).epsilon(1e-9));
  CHECK(sol.nodes_explored <= 1);
}

TEST_CASE("unreachable terminal window is infeasible") {
  HorizonSpec h;
  h.n_steps = 3;
  h.n_stacks = 1;
  h.soc_final_min = 80.0;
  h.soc_final_max = 90.0;
  const auto b = build(std::vector<double>(3, 0.0), h, model());
  CHECK(solve(b.problem).status == MiqpStatus::kInfeasible);
}

TEST_CASE("warm start shifting") {
  const int step = 3;
  std::vector<double> prev(600 * step);
  for (std::size_t k = 0; k < prev.size(); ++k) prev[k] = static_cast<double>(k);
  SUBCASE("no shift keeps everything") { CHECK(warm_start_from(prev, step, 0).values == prev); }
  SUBCASE("shifting by the full length leaves nothing") { CHECK(warm_start_from(prev, step, 600).empty()); }
  SUBCASE("60-step shift reuses the last 540 steps and pads") {
    const auto w = warm_start_from(prev, step, 60);
    REQUIRE(w.values.size() == prev.size());
    for (int t = 0; t < 540; ++t) {
      for (int k = 0; k < step; ++k) CHECK(w.values[t * step + k] == prev[(t + 60) * step + k]);
    }
    for (int t = 540; t < 600; ++t) {
      for (int k = 0; k < step; ++k) CHECK(w.values[t * step + k] == prev[599 * step + k]);
    }
  }
  SUBCASE("shrinking target") { CHECK(warm_start_from(prev, step, 60, 540).values.size() == 540u * step); }
}

TEST_CASE("search bookkeeping") {
  std::mt19937_64 rng(17);
  const auto in = hems::testing::random_instance(rng, model(), 6, 3, StackControl::kIndividual);
  const auto b = build(in.demand, in.horizon, in.model);
  std::ostringstream log;
  auto o = tight();
  o.heuristics = false;
  o.log = &log;
  const auto a = solve(b.problem, o);
  o.log = nullptr;
  const auto c = solve(b.problem, o);
  REQUIRE(a.has_incumbent());
  SUBCASE("deterministic") {
    CHECK(a.values == c.values);
    CHECK(a.nodes_explored == c.nodes_explored);
  }
  SUBCASE("bound never decreases and stays below the incumbent") {
    for (std::size_t k = 1; k < a.bound_history.size(); ++k) CHECK(a.bound_history[k] >= a.bound_history[k - 1]);
    CHECK(a.best_bound <= a.objective + 1e-9);
    for (std::size_t k = 1; k < a.incumbent_history.size(); ++k) {
      CHECK(a.incumbent_history[k] <= a.incumbent_history[k - 1]);
    }
  }
  SUBCASE("log lines") {
    std::istringstream in(log.str());
    std::string line;
    const std::regex num("[-+0-9.eEinfa]+");
    int lines = 0;
    while (std::getline(in, line)) {
      ++lines;
      std::istringstream fields(line);
      std::string f;
      int n = 0;
      while (std::getline(fields, f, ',')) {
        CHECK(std::regex_match(f, num));
        ++n;
      }
      CHECK(n == 5);
    }
    CHECK(lines >= 1);
  }
  SUBCASE("node limit stops the search") {
    auto lim = o;
    lim.node_limit = 1;
    const auto s = solve(b.problem, lim);
    CHECK((s.status == MiqpStatus::kNodeLimit || s.status == MiqpStatus::kOptimal));
    CHECK(s.nodes_explored <= 2);
  }
}

TEST_CASE("a hint seeds the incumbent") {
  std::mt19937_64 rng(19);
  const auto in = hems::testing::random_instance(rng, model(), 5, 2, StackControl::kIndividual);
  const auto b = build(in.demand, in.horizon, in.model);
  const auto ref = solve(b.problem, tight());
  REQUIRE(ref.has_incumbent());
  WarmStart hint{ref.values};
  auto o = tight();
  o.node_limit = 1;
  const auto s = solve(b.problem, o, &hint);
  REQUIRE(s.has_incumbent());
  CHECK(s.objective == doctest::Approx(ref.objective).epsilon(1e-9));
}

TEST_CASE("bound propagation") {
  MiqpProblem p;
  const int x = p.add_var("x", 0, 1, true);
  const int y = p.add_var("y", 0, 10, false);
  p.add_row("gate", "g", -kInf, 0.0, {{y, 1.0}, {x, -4.0}});  // y <= 4x
  BoundPropagator bp(p);
  bp.reset(p.var_lo(), p.var_hi());
  REQUIRE(bp.propagate_all());
  CHECK(bp.hi()[y] == doctest::Approx(4.0));
  const auto mark = bp.mark();
  REQUIRE(bp.fix(x, 0.0));
  CHECK(bp.hi()[y] == doctest::Approx(0.0));
  bp.undo(mark);
  CHECK(bp.hi()[y] == doctest::Approx(4.0));
  CHECK(bp.lo()[x] == 0.0);
  CHECK(bp.hi()[x] == 1.0);
}

TEST_CASE("option validation") {
  SolverOptions o;
  o.abs_gap_tol = -1.0;
  CHECK_THROWS(o.validate());
}
