#pragma once

#include <optional>
#include <string>
#include <vector>

#include "replan/advisor.hpp"
#include "replan/domain.hpp"
#include "replan/scenario_io.hpp"

namespace fixtures {

using namespace replan;

inline Polygon rect(double x, double y, double w, double h) {
  return Polygon({{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}});
}

inline Plot fixed(const std::string& id, Polygon poly, FuncType t,
                  std::optional<FacilitySubtype> sub = std::nullopt) {
  return make_plot(id, std::move(poly), PlotStatus::Fixed, t, sub);
}

inline Plot vacant(const std::string& id, Polygon poly) {
  return make_plot(id, std::move(poly), PlotStatus::Vacant);
}

inline Demands standard_demands() {
  Demands d;
  d.coverage_targets = {{FuncType::Business, 0.05},
                        {FuncType::Office, 0.05},
                        {FuncType::Recreation, 0.10},
                        {FuncType::Park, 0.15},
                        {FuncType::OpenSpace, 0.10}};
  d.facility_counts = {{FacilitySubtype::Kindergarten, 1},
                       {FacilitySubtype::PrimarySchool, 1},
                       {FacilitySubtype::SecondarySchool, 0},
                       {FacilitySubtype::Clinic, 1},
                       {FacilitySubtype::LargeHospital, 0}};
  return d;
}

// Two fixed residences and four vacant plots, two of them Large. 8^4 schemes.
inline Region four_plot_fixture() {
  std::vector<Plot> plots;
  plots.push_back(fixed("r1", rect(0, 0, 100, 100), FuncType::Residential));
  plots.push_back(vacant("v1", rect(110, 0, 100, 100)));
  plots.push_back(vacant("v2", rect(0, 110, 80, 80)));
  plots.push_back(fixed("r2", rect(700, 0, 100, 100), FuncType::Residential));
  plots.push_back(vacant("v3", rect(300, 300, 120, 120)));
  plots.push_back(vacant("v4", rect(900, 0, 70, 70)));
  return Region(std::move(plots), PlanningConfig{}, standard_demands());
}

inline ScenarioSpec twelve_plot_spec() {
  ScenarioSpec s;
  s.cols = 5;
  s.rows = 4;
  s.vacant_fraction = 0.6;
  s.residential_fraction = 0.5;
  s.style = "family neighbourhood with green parks";
  s.demographics = {"synthetic district", "young families with children", "office workers",
                    s.style};
  s.seed = 12;
  return s;
}

// 20-plot synthetic district with 12 vacant plots and mock-advisor demands.
inline Region twelve_plot_region(const PlanningConfig& config = {}) {
  const ScenarioSpec spec = twelve_plot_spec();
  Region region = region_from_json(nlohmann::json::parse(gen_scenario(spec).dump()), config);
  MockAdvisor mock;
  region.set_demands(mock.formulate_objectives(spec.demographics, summarize(region)));
  region.set_demographics(spec.demographics);
  return region;
}

}  // namespace fixtures
