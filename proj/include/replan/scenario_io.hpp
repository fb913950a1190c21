#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "replan/baselines.hpp"
#include "replan/domain.hpp"
#include "replan/policy.hpp"
#include "replan/trainer.hpp"

namespace replan {

// ---- Region files ---------------------------------------------------------
//
// A JSON feature collection in planar meters:
//   {"type": "FeatureCollection", "features": [
//     {"type": "Feature",
//      "geometry": {"type": "Polygon", "coordinates": [[[x, y], ..., [x0, y0]]]},
//      "properties": {"id": "p1", "status": "fixed", "type": "residential"}}]}
// status is fixed, vacant or planned; vacant features carry no type. School and
// hospital plots may add "subtype".

Region region_from_json(const nlohmann::json& doc, const PlanningConfig& config = {});
Region parse_region(const std::filesystem::path& path, const PlanningConfig& config = {});

nlohmann::ordered_json region_to_json(const Region& region);
void write_region(const Region& region, const std::filesystem::path& path);

// ---- Demands --------------------------------------------------------------

nlohmann::ordered_json demands_to_json(const Demands& demands);
Demands demands_from_json(const nlohmann::json& doc);
Demands load_demands(const std::filesystem::path& path);
void write_demands(const Demands& demands, const std::filesystem::path& path);

// ---- Run configuration ----------------------------------------------------

enum class AdvisorMode : std::uint8_t { Mock, Remote };

struct AdvisorSettings {
  AdvisorMode mode = AdvisorMode::Mock;
  std::string endpoint = "https://api.openai.com";
  std::string model = "gpt-3.5-turbo";
  std::filesystem::path prompt_dir = "prompts";
  std::filesystem::path cache = "advisor_cache.jsonl";
  int max_in_flight = 4;
};

// Sections: planning, demographics, advisor, training, search. Every field is optional.
struct RunConfig {
  PlanningConfig planning;
  Demographics demographics;
  AdvisorSettings advisor;
  TrainOptions training;
  EnhanceMode enhance_mode = EnhanceMode::Softmax;
  SearchConfig search;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// ---- Synthetic scenarios --------------------------------------------------

struct ScenarioSpec {
  int cols = 4;
  int rows = 4;
  double min_plot_area = 6000.0;  // m^2
  double max_plot_area = 40000.0;
  double vacant_fraction = 0.5;
  double residential_fraction = 0.5;  // among fixed plots
  std::string style;
  Demographics demographics;
  std::uint64_t seed = 0;

  void validate() const;
};

ScenarioSpec scenario_spec_from_json(const nlohmann::json& doc);

// Jittered grid of quadrilaterals. At least one fixed plot is residential.
nlohmann::ordered_json gen_scenario(const ScenarioSpec& spec);

// ---- Rendering ------------------------------------------------------------

// Fill colour per FuncType, indexed by FuncType.
const std::array<std::string_view, kNumFuncTypes>& palette();

std::string render_svg(const Region& region, bool legend = true);
void write_svg(const Region& region, const std::filesystem::path& path, bool legend = true);

// ---- helpers --------------------------------------------------------------

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace replan
