#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "replan/geometry.hpp"

namespace replan {

// Index order is stable: it fixes one-hot layouts, statistics vectors and network outputs.
enum class FuncType : std::uint8_t {
  Residential = 0,
  Business,
  Office,
  Recreation,
  School,
  Hospital,
  Park,
  OpenSpace,
};

inline constexpr std::size_t kNumFuncTypes = 8;
inline constexpr std::array<FuncType, kNumFuncTypes> kAllFuncTypes = {
    FuncType::Residential, FuncType::Business, FuncType::Office, FuncType::Recreation,
    FuncType::School,      FuncType::Hospital, FuncType::Park,   FuncType::OpenSpace,
};

constexpr std::size_t index_of(FuncType t) { return static_cast<std::size_t>(t); }
constexpr FuncType func_type_at(std::size_t i) { return static_cast<FuncType>(i); }

// Lowercase snake case as used in region files ("open_space").
std::string_view to_string(FuncType t);
// Capitalised form used in prompts ("OpenSpace").
std::string_view display_name(FuncType t);
std::optional<FuncType> parse_func_type(std::string_view name);
// Comma separated list of the file names, for error messages.
std::string valid_func_type_names();

enum class FacilitySubtype : std::uint8_t {
  Kindergarten = 0,
  PrimarySchool,
  SecondarySchool,
  Clinic,
  LargeHospital,
};

inline constexpr std::size_t kNumSubtypes = 5;
inline constexpr std::array<FacilitySubtype, kNumSubtypes> kAllSubtypes = {
    FacilitySubtype::Kindergarten, FacilitySubtype::PrimarySchool,
    FacilitySubtype::SecondarySchool, FacilitySubtype::Clinic, FacilitySubtype::LargeHospital,
};

std::string_view to_string(FacilitySubtype s);
std::optional<FacilitySubtype> parse_subtype(std::string_view name);
FuncType parent_type(FacilitySubtype s);

enum class SizeClass : std::uint8_t { Small, Large };

enum class PlotStatus : std::uint8_t { Fixed, Vacant, Planned };

std::string_view to_string(PlotStatus s);
std::optional<PlotStatus> parse_status(std::string_view name);

struct Plot {
  std::string id;
  Polygon geometry;
  PlotStatus status = PlotStatus::Vacant;
  std::optional<FuncType> func;
  std::optional<FacilitySubtype> subtype;
  PlotAttributes geo;

  bool occupied() const { return status != PlotStatus::Vacant; }
};

// Builds a plot with geo attributes computed from the geometry. Enforces the
// status/func/subtype consistency rules and throws ValidationError otherwise.
Plot make_plot(std::string id, Polygon geometry, PlotStatus status,
               std::optional<FuncType> func = std::nullopt,
               std::optional<FacilitySubtype> subtype = std::nullopt);

enum class CoverageLevel : std::uint8_t { Low, Medium, High };

double coverage_fraction(CoverageLevel level);  // 0.05 / 0.10 / 0.15
std::string_view to_string(CoverageLevel level);
std::optional<CoverageLevel> parse_coverage_level(std::string_view text);

// Planning objectives: target area coverage for the five coverage-driven types and
// facility quotas for school and hospital subtypes.
struct Demands {
  std::map<FuncType, double> coverage_targets;
  std::map<FacilitySubtype, int> facility_counts;

  double coverage(FuncType t) const;
  int quota(FacilitySubtype s) const;

  friend bool operator==(const Demands&, const Demands&) = default;
};

inline constexpr std::array<FuncType, 5> kCoverageTypes = {
    FuncType::Business, FuncType::Recreation, FuncType::Office, FuncType::Park,
    FuncType::OpenSpace};

struct PlanningConfig {
  double living_circle_radius = 500.0;  // d_c, meters
  double equity_alpha = -1.0 / 800.0;   // 1/m
  double enhancement_lambda = 2.0;
  double gamma = 0.98;
  double clip_eps = 0.2;
  double learning_rate = 1e-5;
  int episodes = 5000;
  double large_plot_threshold = 10000.0;  // m^2
  std::uint64_t seed = 0;

  // Throws ValidationError when a field is out of range.
  void validate() const;

  friend bool operator==(const PlanningConfig&, const PlanningConfig&) = default;
};

// Free-text portraits spliced into advisor prompts.
struct Demographics {
  std::string region_label;
  std::string residents;
  std::string workers;
  std::string style;

  friend bool operator==(const Demographics&, const Demographics&) = default;
};

// Per-type coverage fractions and plot counts. Used both for a living circle and
// for the whole region.
struct TypeStats {
  std::array<double, kNumFuncTypes> ratios{};
  std::array<int, kNumFuncTypes> counts{};
};

using LivingCircleStats = TypeStats;
using RegionStats = TypeStats;

struct Bounds {
  Point min;
  Point max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
};

class Region {
 public:
  Region() = default;
  // Plots keep their given order; vacant plots are planned in that order unless
  // set_vacant_order is called.
  Region(std::vector<Plot> plots, PlanningConfig config = {}, Demands demands = {},
         Demographics demographics = {});

  const std::vector<Plot>& plots() const { return plots_; }
  const Plot& plot(std::size_t i) const { return plots_.at(i); }
  std::size_t size() const { return plots_.size(); }

  const std::vector<std::size_t>& vacant_order() const { return vacant_order_; }
  // Must be a permutation of the currently vacant plot indices.
  void set_vacant_order(std::vector<std::size_t> order);

  // Next plot of vacant_order that is still vacant.
  std::optional<std::size_t> next_vacant() const;
  bool complete() const { return !next_vacant().has_value(); }

  double total_area() const { return total_area_; }
  const Bounds& bounds() const { return bounds_; }

  const PlanningConfig& config() const { return config_; }
  void set_config(const PlanningConfig& c);
  const Demands& demands() const { return demands_; }
  void set_demands(Demands d) { demands_ = std::move(d); }
  const Demographics& demographics() const { return demographics_; }
  void set_demographics(Demographics d) { demographics_ = std::move(d); }

  // Incrementally maintained region statistics over Fixed and Planned plots.
  RegionStats stats() const;
  // Built facilities per subtype, indexed by FacilitySubtype.
  const std::array<int, kNumSubtypes>& facility_tally() const { return facility_tally_; }

  // Marks a vacant plot as planned. Throws ValidationError if the plot is not vacant.
  void plan(std::size_t plot_idx, FuncType type, std::optional<FacilitySubtype> subtype);

 private:
  void account(const Plot& p);

  std::vector<Plot> plots_;
  std::vector<std::size_t> vacant_order_;
  PlanningConfig config_;
  Demands demands_;
  Demographics demographics_;
  double total_area_ = 0.0;
  Bounds bounds_;
  std::array<double, kNumFuncTypes> type_area_{};
  std::array<int, kNumFuncTypes> type_count_{};
  std::array<int, kNumSubtypes> facility_tally_{};
};

enum class OrderMode : std::uint8_t { File, AreaDesc, Shuffle };

// Parses "file", "area-desc" or "shuffle:<seed>".
struct PlanningOrder {
  OrderMode mode = OrderMode::File;
  std::uint64_t seed = 0;

  static PlanningOrder parse(std::string_view text);
};

void apply_planning_order(Region& region, const PlanningOrder& order);

SizeClass size_class(const Plot& plot, double threshold);

struct AllowedActions {
  std::array<bool, kNumFuncTypes> mask{};
  FacilitySubtype school = FacilitySubtype::Kindergarten;
  FacilitySubtype hospital = FacilitySubtype::Clinic;

  // Subtype that planning `t` on the plot would build, if any.
  std::optional<FacilitySubtype> resolve(FuncType t) const;
};

AllowedActions allowed_actions(const Region& region, std::size_t plot_idx);

// Deterministic transition: returns the successor state.
Region apply_action(const Region& region, std::size_t plot_idx, FuncType action);
// In-place variant used by rollouts.
void apply_action_inplace(Region& region, std::size_t plot_idx, FuncType action);

LivingCircleStats living_circle_stats(const Region& region, std::size_t plot_idx);

// Recomputed from scratch, independent of the cached statistics in Region.
RegionStats region_stats(const Region& region);

inline constexpr std::size_t kGeoFeatureDim = 13;
inline constexpr std::size_t kStatsFeatureDim = 2 * kNumFuncTypes;
inline constexpr std::size_t kStateFeatureDim = kGeoFeatureDim + 2 * kStatsFeatureDim;

// Region statistics block e: 8 ratios followed by 8 counts divided by the plot count.
std::vector<double> region_features(const Region& region);

// [g_i || c_i || e], 45 values.
std::vector<double> state_features(const Region& region, std::size_t plot_idx);

}  // namespace replan
