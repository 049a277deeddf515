#include <string>

#include "doctest.h"
#include "hems/config.hpp"
#include "hems/error.hpp"

using namespace hems;

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.n_stacks == 8);
  CHECK(c.stack.p_max == 70.0);
  CHECK(c.stack.p_min == 14.0);
  CHECK(c.stack.p_low == 14.0);
  CHECK(c.stack.stack_cost == 67200.0);
  CHECK(c.stack.v_drop_max == 70000.0);
  CHECK(c.rates.load_change == 1.79);
  CHECK(c.rates.on_off == 13.79);
  CHECK(c.rates.idling == 8.66);
  CHECK(c.rates.high_load == 10.0);
  CHECK(c.horizon.dt == 1.0);
  CHECK(c.horizon.soc_initial == 50.0);
  CHECK(c.horizon.soc_final_min == 47.0);
  CHECK(c.horizon.soc_final_max == 53.0);
  CHECK(c.mpc.horizon_s == 600.0);
  CHECK(c.mpc.block_s == 60.0);
  CHECK(c.pack.cell_count == 7594);
  CHECK(c.dp.soc_step == 0.02);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("text and JSON forms agree") {
  const auto text = parse_config_text("fuelcell.n_stacks = 3\nmpc.policy = rolling  # comment\nsolver.rel_gap_tol = 1e-4\n");
  const auto js = from_json(nlohmann::json::parse(
      R"({"fuelcell":{"n_stacks":3},"mpc":{"policy":"rolling"},"solver":{"rel_gap_tol":1e-4}})"));
  CHECK(to_json(text) == to_json(js));
  CHECK(text.n_stacks == 3);
  CHECK(text.mpc.policy == HorizonPolicy::kRolling);
}

TEST_CASE("unknown keys name their line") {
  try {
    parse_config_text("# header\nmpc.block_s = 30\nmpc.blok_s = 30\n");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(from_json(nlohmann::json::parse(R"({"solver":{"gap":1}})")), Error);
}

TEST_CASE("malformed lines are parse errors") {
  CHECK_THROWS_AS(parse_config_text("mpc.block_s 30\n"), Error);
}

TEST_CASE("rendered text parses back to the same config") {
  RunConfig c;
  c.n_stacks = 5;
  c.mpc.block_s = 30.0;
  c.solver.rel_gap_tol = 2e-4;
  c.dp.reachable_only = true;
  const auto back = parse_config_text(to_config_text(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(to_json(from_json(to_json(c))) == to_json(c));
}

TEST_CASE("shipped configs load and validate") {
  for (const char* name : {"/default.conf", "/desk.conf"}) {
    const auto c = load_config(std::string(HEMS_CONFIG_DIR) + name);
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("invalid values are rejected") {
  CHECK_THROWS_AS(parse_config_text("mpc.block_s = 900\n").validate(), ValidationError);
  CHECK_THROWS_AS(parse_config_text("fuelcell.n_stacks = 0\n").validate(), ValidationError);
}
