#include <cmath>
#include <cstring>

#include "doctest.h"
#include "fixtures.hpp"
#include "replan/baselines.hpp"
#include "replan/error.hpp"
#include "replan/rewards.hpp"

using namespace replan;
using fixtures::fixed;
using fixtures::rect;
using fixtures::vacant;

namespace {

// 10 m squares centred on (x, y); only centroids matter for distance-based metrics.
Plot at(const std::string& id, double x, double y, FuncType t) {
  return fixed(id, rect(x - 5, y - 5, 10, 10), t);
}

}  // namespace

TEST_CASE("service reward") {
  const Region all({at("r", 0, 0, FuncType::Residential), at("b", 100, 0, FuncType::Business),
                    at("o", 0, 100, FuncType::Office), at("c", 200, 0, FuncType::Recreation),
                    at("h", 0, 300, FuncType::Hospital), at("s", 400, 0, FuncType::School)});
  CHECK(service_reward(all) == 1.0);

  const Region none({at("r", 0, 0, FuncType::Residential), at("p", 100, 0, FuncType::Park)});
  CHECK(service_reward(none) == 0.0);

  // r1 reaches all five; r2 at x=1000 reaches only the three placed near it.
  const Region two({at("r1", 0, 0, FuncType::Residential), at("r2", 1000, 0, FuncType::Residential),
                    at("b", 100, 0, FuncType::Business), at("o", 0, 100, FuncType::Office),
                    at("c", 0, -100, FuncType::Recreation), at("h", -300, 0, FuncType::Hospital),
                    at("s", 0, 400, FuncType::School), at("b2", 1200, 0, FuncType::Business),
                    at("h2", 1000, 300, FuncType::Hospital), at("s2", 800, 0, FuncType::School)});
  CHECK(service_reward(two) == doctest::Approx(0.8));

  const Region no_home({at("b", 0, 0, FuncType::Business)});
  CHECK_THROWS_AS(service_reward(no_home), ValidationError);
}

TEST_CASE("service boundary distance is inclusive") {
  const Region r({at("r", 0, 0, FuncType::Residential), at("b", 300, 400, FuncType::Business)});
  CHECK(service_reward(r) == doctest::Approx(0.2));
}

TEST_CASE("ecology reward") {
  Demands d = fixtures::standard_demands();
  d.coverage_targets[FuncType::Park] = 0.15;
  d.coverage_targets[FuncType::OpenSpace] = 0.10;
  // Total 100000 m^2: park 15000 (0.15), open space 5000 (0.05), rest residential.
  const Region r({fixed("p", rect(0, 0, 150, 100), FuncType::Park),
                  fixed("o", rect(200, 0, 50, 100), FuncType::OpenSpace),
                  fixed("r", rect(300, 0, 800, 100), FuncType::Residential)});
  CHECK(ecology_reward(r, d) == doctest::Approx(0.75));

  const Region full({fixed("p", rect(0, 0, 100, 100), FuncType::Park),
                     fixed("o", rect(200, 0, 100, 100), FuncType::OpenSpace)});
  CHECK(ecology_reward(full, d) == 1.0);

  const Region bare({fixed("r", rect(0, 0, 100, 100), FuncType::Residential)});
  CHECK(ecology_reward(bare, d) == 0.0);

  d.coverage_targets[FuncType::Park] = 0.0;
  CHECK_THROWS_AS(ecology_reward(r, d), ValidationError);
}

TEST_CASE("economy reward") {
  Demands d = fixtures::standard_demands();
  d.coverage_targets[FuncType::Business] = 0.05;
  d.coverage_targets[FuncType::Office] = 0.05;
  d.coverage_targets[FuncType::Recreation] = 0.10;
  // Total 200000 m^2; business 5000 (0.025), office 10000 (0.05), recreation 20000 (0.10).
  const Region r({fixed("r", rect(0, 0, 400, 300), FuncType::Residential),
                  fixed("b", rect(400, 0, 50, 100), FuncType::Business),
                  fixed("o", rect(450, 0, 100, 100), FuncType::Office),
                  fixed("c", rect(0, 300, 200, 100), FuncType::Recreation),
                  fixed("p", rect(600, 0, 150, 300), FuncType::Park)});
  CHECK(r.total_area() == doctest::Approx(200000.0));
  CHECK(economy_reward(r, d) == doctest::Approx(2.5 / 3.0));

  // Same business plot far outside every living circle counts for nothing.
  const Region far({fixed("r", rect(0, 0, 100, 100), FuncType::Residential),
                    fixed("b", rect(3000, 0, 100, 100), FuncType::Business)});
  CHECK(economy_reward(far, d) == 0.0);

  const Region no_home({fixed("b", rect(0, 0, 100, 100), FuncType::Business)});
  CHECK(economy_reward(no_home, d) == 0.0);

  d.coverage_targets[FuncType::Office] = 0.0;
  CHECK_THROWS_AS(economy_reward(r, d), ValidationError);
}

TEST_CASE("equity reward") {
  const Region single({at("r", 0, 0, FuncType::Residential), at("s", 100, 0, FuncType::School),
                       at("h", 0, 700, FuncType::Hospital)});
  CHECK(equity_reward(single) == 1.0);

  // Homes at x=0 and x=1600. The school is equidistant (spread 0); the hospital at
  // x=400 is 400 m from one home and 1200 m from the other (spread 800).
  const Region both({at("r1", 0, 0, FuncType::Residential), at("r2", 1600, 0, FuncType::Residential),
                     at("s", 800, 300, FuncType::School), at("h", 400, 0, FuncType::Hospital)});
  CHECK(equity_reward(both) == doctest::Approx((1.0 + std::exp(-1.0)) / 2.0).epsilon(1e-12));

  const Region one_cat({at("r1", 0, 0, FuncType::Residential), at("r2", 1600, 0, FuncType::Residential),
                        at("h", 400, 0, FuncType::Hospital)});
  CHECK(equity_reward(one_cat) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("equity invariances") {
  const std::vector<Plot> plots{at("r1", 0, 0, FuncType::Residential), at("r2", 900, 100, FuncType::Residential),
                                at("r3", 200, 700, FuncType::Residential), at("s", 300, 300, FuncType::School),
                                at("h", 800, 800, FuncType::Hospital)};
  const double base = equity_reward(Region(plots));
  std::vector<Plot> perm{plots[2], plots[4], plots[0], plots[3], plots[1]};
  CHECK(equity_reward(Region(perm)) == doctest::Approx(base).epsilon(1e-15));
  auto dup = plots;
  dup.push_back(at("s2", 300, 300, FuncType::School));
  CHECK(equity_reward(Region(dup)) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("satisfaction aggregation") {
  auto rating = [](Stakeholder s, std::vector<SatLevel> levels) {
    StakeholderRating r{s, {}};
    for (auto l : levels) r.aspects.push_back({"a", l, ""});
    return r;
  };
  std::vector<StakeholderRating> all;
  for (auto s : kAllStakeholders) all.push_back(rating(s, {SatLevel::VeryGood, SatLevel::VeryGood}));
  CHECK(satisfaction_score(all) == 1.0);

  const std::vector<StakeholderRating> mixed{
      rating(Stakeholder::Resident, {SatLevel::Good}),
      rating(Stakeholder::Government, {SatLevel::Average}),
      rating(Stakeholder::Developer, {SatLevel::VeryGood})};
  CHECK(satisfaction_score(mixed) == doctest::Approx(0.75));

  CHECK(satisfaction_score(std::vector{rating(Stakeholder::Resident, {SatLevel::Poor})}) == 0.25);
  CHECK_THROWS_AS(satisfaction_score(std::vector{rating(Stakeholder::Resident, {})}), ValidationError);
  CHECK_THROWS_AS(satisfaction_score(std::vector<StakeholderRating>{}), ValidationError);
}

TEST_CASE("level words") {
  CHECK(parse_sat_level("very good") == SatLevel::VeryGood);
  CHECK(parse_sat_level("Very Good") == SatLevel::VeryGood);
  CHECK(parse_sat_level("good") == SatLevel::Good);
  CHECK(parse_sat_level("excellent") == SatLevel::VeryGood);
  CHECK(parse_sat_level("average") == SatLevel::Average);
  CHECK(parse_sat_level("poor") == SatLevel::Poor);
  CHECK_FALSE(parse_sat_level("meh").has_value());
  CHECK(level_value(SatLevel::Poor) < level_value(SatLevel::Average));
  CHECK(level_value(SatLevel::Average) < level_value(SatLevel::Good));
  CHECK(level_value(SatLevel::Good) < level_value(SatLevel::VeryGood));
}

TEST_CASE("score composition") {
  CHECK(objective_sum(1, 1, 1, 1) == 4.0);
  CHECK(objective_sum(0.4923, 0.9600, 0.9819, 0.4512) == doctest::Approx(2.8854).epsilon(1e-12));
  CHECK(objective_sum(0.4923, 0.9600, 0.9819, 0.4512) + 0.7401 ==
        doctest::Approx(3.6255).epsilon(1e-12));
  CHECK(objective_sum(0, 0, 0, 0) == 0.0);
}

TEST_CASE("scheme report is pure and serialises with a schema") {
  const Region r = decode(fixtures::four_plot_fixture(), {6, 1, 4, 5});
  const auto a = score_scheme(r, r.demands(), 0.5);
  const auto b = score_scheme(r, r.demands(), 0.5);
  CHECK(std::memcmp(&a.obj_score, &b.obj_score, sizeof(double)) == 0);
  CHECK(a.total == a.obj_score + 0.5);
  const auto j = to_json(a);
  CHECK(j["schema"] == 1);
  CHECK(j.begin().key() == "schema");
  CHECK(j["obj_score"].get<double>() == a.obj_score);
}

TEST_CASE("metric monotonicity") {
  const Region base = fixtures::four_plot_fixture();
  const Demands& d = base.demands();
  Region r = base;
  apply_action_inplace(r, 1, FuncType::Residential);
  apply_action_inplace(r, 2, FuncType::Office);
  const double eco0 = ecology_reward(r, d);
  const double econ0 = economy_reward(r, d);
  Region park = apply_action(r, 4, FuncType::Park);
  CHECK(ecology_reward(park, d) >= eco0);
  Region biz = apply_action(r, 4, FuncType::Business);
  CHECK(economy_reward(biz, d) >= econ0);
}
