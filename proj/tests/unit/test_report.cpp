#include <string>

#include "doctest.h"
#include "hems/error.hpp"
#include "hems/report.hpp"

using namespace hems;

namespace {

MpcResult fake_run(double scale) {
  MpcResult r;
  r.cost.h2 = 3.0 * scale;
  r.cost.battery_degradation = 0.5 * scale;
  r.cost.fc_load_change = 0.25;
  r.cost.fc_on_off = 0.0;
  r.trace.n_stacks = 1;
  return r;
}

}  // namespace

TEST_CASE("hashing") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  const std::vector<double> d{1.0, 2.0};
  CHECK(profile_hash(d, 1.0) == profile_hash(d, 1.0));
  CHECK(profile_hash(d, 1.0) != profile_hash(d, 2.0));
  CHECK(profile_hash(d, 1.0) != profile_hash(std::vector<double>{1.0, 2.0 + 1e-15}, 1.0));
}

TEST_CASE("breakdown survives JSON") {
  const auto c = fake_run(1.0).cost;
  const auto back = breakdown_from_json(breakdown_json(c));
  CHECK(back.total() == c.total());
  CHECK(back.h2 == c.h2);
}

TEST_CASE("identical runs compare to zero") {
  const auto a = run_json(fake_run(1.0), "abc");
  const auto cmp = compare_runs(a, a);
  REQUIRE(cmp.at("rows").size() == 7);
  for (const auto& r : cmp.at("rows")) {
    CHECK(r.at("delta").get<double>() == 0.0);
    CHECK(r.at("delta_pct").get<double>() == 0.0);
  }
  CHECK(cmp.at("rows").back().at("category") == "total");
  const auto table = comparison_table(cmp);
  CHECK(table.find("Total cost (USD)") != std::string::npos);
  CHECK(table.find("FC on/off switch loss") != std::string::npos);
}

TEST_CASE("deltas and percentages") {
  const auto cmp = compare_runs(run_json(fake_run(1.0), "p"), run_json(fake_run(2.0), "p"));
  const auto& h2 = cmp.at("rows")[1];
  CHECK(h2.at("category") == "h2");
  CHECK(h2.at("delta").get<double>() == doctest::Approx(3.0));
  CHECK(h2.at("delta_pct").get<double>() == doctest::Approx(100.0));
}

TEST_CASE("different profiles are not comparable") {
  CHECK_THROWS_AS(compare_runs(run_json(fake_run(1.0), "p"), run_json(fake_run(1.0), "q")), ValidationError);
}

TEST_CASE("category rows") {
  CHECK(category_rows().size() == 7);
  CHECK(std::string(category_rows()[0].key) == "battery_degradation");
}

TEST_CASE("every clipped step is recorded") {
  auto r = fake_run(1.0);
  r.trace.curtailments = {{3, -200.0, -150.0}, {7, -180.0, -150.0}};
  const auto j = run_json(r, "p");
  CHECK(j.at("curtailed_steps") == 2);
  REQUIRE(j.at("curtailments").size() == 2);
  CHECK(j.at("curtailments")[1].at("step") == 7);
  CHECK(j.at("curtailments")[0].at("requested_kw").get<double>() == -200.0);
}
