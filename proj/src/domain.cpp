#include "replan/domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "replan/error.hpp"
#include "replan/rng.hpp"

namespace replan {

namespace {

constexpr std::array<std::string_view, kNumFuncTypes> kFileNames = {
    "residential", "business", "office", "recreation", "school", "hospital", "park", "open_space"};
constexpr std::array<std::string_view, kNumFuncTypes> kDisplayNames = {
    "Residential", "Business", "Office", "Recreation", "School", "Hospital", "Park", "OpenSpace"};
constexpr std::array<std::string_view, kNumSubtypes> kSubtypeNames = {
    "kindergarten", "primary", "secondary", "clinic", "large_hospital"};

// Lowercase and drop spaces, underscores and hyphens: "Open space" == "open_space".
std::string fold(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(FuncType t) { return kFileNames[index_of(t)]; }
std::string_view display_name(FuncType t) { return kDisplayNames[index_of(t)]; }

std::optional<FuncType> parse_func_type(std::string_view name) {
  const std::string key = fold(name);
  for (std::size_t i = 0; i < kNumFuncTypes; ++i) {
    if (fold(kFileNames[i]) == key) return func_type_at(i);
  }
  return std::nullopt;
}

std::string valid_func_type_names() {
  std::string out;
  for (auto n : kFileNames) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

std::string_view to_string(FacilitySubtype s) { return kSubtypeNames[static_cast<std::size_t>(s)]; }

std::optional<FacilitySubtype> parse_subtype(std::string_view name) {
  const std::string key = fold(name);
  for (std::size_t i = 0; i < kNumSubtypes; ++i) {
    if (fold(kSubtypeNames[i]) == key) return kAllSubtypes[i];
  }
  if (key == "primaryschool") return FacilitySubtype::PrimarySchool;
  if (key == "secondaryschool") return FacilitySubtype::SecondarySchool;
  if (key == "largehospital" || key == "hospital") return FacilitySubtype::LargeHospital;
  return std::nullopt;
}

FuncType parent_type(FacilitySubtype s) {
  switch (s) {
    case FacilitySubtype::Kindergarten:
    case FacilitySubtype::PrimarySchool:
    case FacilitySubtype::SecondarySchool:
      return FuncType::School;
    case FacilitySubtype::Clinic:
    case FacilitySubtype::LargeHospital:
      return FuncType::Hospital;
  }
  return FuncType::School;
}

std::string_view to_string(PlotStatus s) {
  switch (s) {
    case PlotStatus::Fixed:
      return "fixed";
    case PlotStatus::Vacant:
      return "vacant";
    case PlotStatus::Planned:
      return "planned";
  }
  return "vacant";
}

std::optional<PlotStatus> parse_status(std::string_view name) {
  if (name == "fixed") return PlotStatus::Fixed;
  if (name == "vacant") return PlotStatus::Vacant;
  if (name == "planned") return PlotStatus::Planned;
  return std::nullopt;
}

Plot make_plot(std::string id, Polygon geometry, PlotStatus status, std::optional<FuncType> func,
               std::optional<FacilitySubtype> subtype) {
  if (status == PlotStatus::Vacant && (func || subtype)) {
    throw ValidationError("plot '" + id + "': vacant plots must not carry a type");
  }
  if (status != PlotStatus::Vacant && !func) {
    throw ValidationError("plot '" + id + "': " + std::string(to_string(status)) +
                          " plot is missing its type");
  }
  if (subtype && parent_type(*subtype) != *func) {
    throw ValidationError("plot '" + id + "': subtype '" + std::string(to_string(*subtype)) +
                          "' does not belong to type '" + std::string(to_string(*func)) + "'");
  }
  Plot p;
  p.id = std::move(id);
  p.geo = plot_attributes(geometry);
  p.geometry = std::move(geometry);
  p.status = status;
  p.func = func;
  p.subtype = subtype;
  return p;
}

double coverage_fraction(CoverageLevel level) {
  switch (level) {
    case CoverageLevel::Low:
      return 0.05;
    case CoverageLevel::Medium:
      return 0.10;
    case CoverageLevel::High:
      return 0.15;
  }
  return 0.10;
}

std::string_view to_string(CoverageLevel level) {
  switch (level) {
    case CoverageLevel::Low:
      return "low";
    case CoverageLevel::Medium:
      return "medium";
    case CoverageLevel::High:
      return "high";
  }
  return "medium";
}

std::optional<CoverageLevel> parse_coverage_level(std::string_view text) {
  const std::string key = fold(text);
  if (key.find("high") != std::string::npos) return CoverageLevel::High;
  if (key.find("medium") != std::string::npos) return CoverageLevel::Medium;
  if (key.find("low") != std::string::npos) return CoverageLevel::Low;
  return std::nullopt;
}

double Demands::coverage(FuncType t) const {
  auto it = coverage_targets.find(t);
  return it == coverage_targets.end() ? 0.0 : it->second;
}

int Demands::quota(FacilitySubtype s) const {
  auto it = facility_counts.find(s);
  return it == facility_counts.end() ? 0 : it->second;
}

void PlanningConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("planning config: " + m); };
  if (!(living_circle_radius > 0.0)) fail("living circle radius must be > 0");
  if (!(enhancement_lambda >= 1.0)) fail("lambda must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) fail("clip_eps must be in (0, 1)");
  if (!(learning_rate > 0.0)) fail("learning rate must be > 0");
  if (episodes < 0) fail("episodes must be >= 0");
  if (!(large_plot_threshold > 0.0)) fail("large plot threshold must be > 0");
  if (!std::isfinite(equity_alpha) || equity_alpha > 0.0) fail("equity alpha must be <= 0");
}

Region::Region(std::vector<Plot> plots, PlanningConfig config, Demands demands,
               Demographics demographics)
    : plots_(std::move(plots)),
      config_(config),
      demands_(std::move(demands)),
      demographics_(std::move(demographics)) {
  config_.validate();
  if (plots_.empty()) throw ValidationError("region has no plots");

  bounds_.min = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  bounds_.max = {-bounds_.min.x, -bounds_.min.y};
  for (std::size_t i = 0; i < plots_.size(); ++i) {
    Plot& p = plots_[i];
    for (std::size_t j = 0; j < i; ++j) {
      if (plots_[j].id == p.id) throw ValidationError("duplicate plot id '" + p.id + "'");
    }
    // Pre-existing facilities without an explicit subtype get the size-based default.
    if (p.occupied() && !p.subtype) {
      const bool large = size_class(p, config_.large_plot_threshold) == SizeClass::Large;
      if (p.func == FuncType::School) {
        p.subtype = large ? FacilitySubtype::PrimarySchool : FacilitySubtype::Kindergarten;
      } else if (p.func == FuncType::Hospital) {
        p.subtype = large ? FacilitySubtype::LargeHospital : FacilitySubtype::Clinic;
      }
    }
    total_area_ += p.geo.area;
    for (const auto& v : p.geometry.ring()) {
      bounds_.min.x = std::min(bounds_.min.x, v.x);
      bounds_.min.y = std::min(bounds_.min.y, v.y);
      bounds_.max.x = std::max(bounds_.max.x, v.x);
      bounds_.max.y = std::max(bounds_.max.y, v.y);
    }
    if (p.status == PlotStatus::Vacant) vacant_order_.push_back(i);
    account(p);
  }
}

void Region::account(const Plot& p) {
  if (!p.occupied()) return;
  type_area_[index_of(*p.func)] += p.geo.area;
  type_count_[index_of(*p.func)] += 1;
  if (p.subtype) facility_tally_[static_cast<std::size_t>(*p.subtype)] += 1;
}

void Region::set_vacant_order(std::vector<std::size_t> order) {
  std::vector<std::size_t> expected;
  for (std::size_t i = 0; i < plots_.size(); ++i) {
    if (plots_[i].status == PlotStatus::Vacant) expected.push_back(i);
  }
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != expected) {
    throw ValidationError("vacant order must list every vacant plot exactly once");
  }
  vacant_order_ = std::move(order);
}

std::optional<std::size_t> Region::next_vacant() const {
  for (std::size_t idx : vacant_order_) {
    if (plots_[idx].status == PlotStatus::Vacant) return idx;
  }
  return std::nullopt;
}

void Region::set_config(const PlanningConfig& c) {
  c.validate();
  config_ = c;
}

RegionStats Region::stats() const {
  RegionStats s;
  for (std::size_t t = 0; t < kNumFuncTypes; ++t) {
    s.ratios[t] = type_area_[t] / total_area_;
    s.counts[t] = type_count_[t];
  }
  return s;
}

void Region::plan(std::size_t plot_idx, FuncType type, std::optional<FacilitySubtype> subtype) {
  if (plot_idx >= plots_.size()) throw ValidationError("plot index out of range");
  Plot& p = plots_[plot_idx];
  if (p.status != PlotStatus::Vacant) {
    throw ValidationError("plot '" + p.id + "' is not vacant");
  }
  if (subtype && parent_type(*subtype) != type) {
    throw ValidationError("subtype does not match planned type");
  }
  p.status = PlotStatus::Planned;
  p.func = type;
  p.subtype = subtype;
  account(p);
}

PlanningOrder PlanningOrder::parse(std::string_view text) {
  if (text == "file") return {OrderMode::File, 0};
  if (text == "area-desc") return {OrderMode::AreaDesc, 0};
  constexpr std::string_view prefix = "shuffle:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string_view digits = text.substr(prefix.size());
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
      return {OrderMode::Shuffle, seed};
    }
  }
  throw ValidationError("unknown planning order '" + std::string(text) +
                        "' (expected file, area-desc or shuffle:<seed>)");
}

void apply_planning_order(Region& region, const PlanningOrder& order) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (region.plot(i).status == PlotStatus::Vacant) idx.push_back(i);
  }
  switch (order.mode) {
    case OrderMode::File:
      break;
    case OrderMode::AreaDesc:
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return region.plot(a).geo.area > region.plot(b).geo.area;
      });
      break;
    case OrderMode::Shuffle: {
      Rng rng(order.seed);
      for (std::size_t i = idx.size(); i > 1; --i) {
        std::swap(idx[i - 1], idx[rng.below(i)]);
      }
      break;
    }
  }
  region.set_vacant_order(std::move(idx));
}

SizeClass size_class(const Plot& plot, double threshold) {
  return plot.geo.area >= threshold ? SizeClass::Large : SizeClass::Small;
}

std::optional<FacilitySubtype> AllowedActions::resolve(FuncType t) const {
  if (t == FuncType::School) return school;
  if (t == FuncType::Hospital) return hospital;
  return std::nullopt;
}

AllowedActions allowed_actions(const Region& region, std::size_t plot_idx) {
  const Plot& p = region.plot(plot_idx);
  if (p.status != PlotStatus::Vacant) {
    throw ValidationError("allowed_actions: plot '" + p.id + "' is not vacant");
  }
  AllowedActions out;
  out.mask.fill(true);
  if (size_class(p, region.config().large_plot_threshold) == SizeClass::Small) {
    out.school = FacilitySubtype::Kindergarten;
    out.hospital = FacilitySubtype::Clinic;
  } else {
    const auto& tally = region.facility_tally();
    const auto deficit = [&](FacilitySubtype s) {
      return region.demands().quota(s) - tally[static_cast<std::size_t>(s)];
    };
    out.school = deficit(FacilitySubtype::SecondarySchool) > deficit(FacilitySubtype::PrimarySchool)
                     ? FacilitySubtype::SecondarySchool
                     : FacilitySubtype::PrimarySchool;
    out.hospital = FacilitySubtype::LargeHospital;
  }
  return out;
}

void apply_action_inplace(Region& region, std::size_t plot_idx, FuncType action) {
  const AllowedActions allowed = allowed_actions(region, plot_idx);
  if (!allowed.mask[index_of(action)]) {
    throw ValidationError("action '" + std::string(to_string(action)) + "' is not allowed here");
  }
  region.plan(plot_idx, action, allowed.resolve(action));
}

Region apply_action(const Region& region, std::size_t plot_idx, FuncType action) {
  Region next = region;
  apply_action_inplace(next, plot_idx, action);
  return next;
}

LivingCircleStats living_circle_stats(const Region& region, std::size_t plot_idx) {
  const Point center = region.plot(plot_idx).geo.centroid;
  const double radius = region.config().living_circle_radius;
  std::array<double, kNumFuncTypes> area{};
  LivingCircleStats out;
  double total = 0.0;
  for (const auto& p : region.plots()) {
    if (!p.occupied()) continue;
    if (distance(center, p.geo.centroid) > radius) continue;
    area[index_of(*p.func)] += p.geo.area;
    out.counts[index_of(*p.func)] += 1;
    total += p.geo.area;
  }
  if (total > 0.0) {
    for (std::size_t t = 0; t < kNumFuncTypes; ++t) out.ratios[t] = area[t] / total;
  }
  return out;
}

RegionStats region_stats(const Region& region) {
  std::array<double, kNumFuncTypes> area{};
  RegionStats out;
  double total = 0.0;
  for (const auto& p : region.plots()) {
    total += p.geo.area;
    if (!p.occupied()) continue;
    area[index_of(*p.func)] += p.geo.area;
    out.counts[index_of(*p.func)] += 1;
  }
  for (std::size_t t = 0; t < kNumFuncTypes; ++t) out.ratios[t] = area[t] / total;
  return out;
}

namespace {

void append_stats(std::vector<double>& out, const TypeStats& s, double count_scale) {
  for (double r : s.ratios) out.push_back(r);
  for (int c : s.counts) out.push_back(static_cast<double>(c) * count_scale);
}

}  // namespace

std::vector<double> region_features(const Region& region) {
  std::vector<double> out;
  out.reserve(kStatsFeatureDim);
  append_stats(out, region.stats(), 1.0 / static_cast<double>(region.size()));
  return out;
}

std::vector<double> state_features(const Region& region, std::size_t plot_idx) {
  const Plot& p = region.plot(plot_idx);
  const Bounds& b = region.bounds();
  const double w = b.width() > 0.0 ? b.width() : 1.0;
  const double h = b.height() > 0.0 ? b.height() : 1.0;
  const double diag = std::hypot(b.width(), b.height());
  const double count_scale = 1.0 / static_cast<double>(region.size());

  std::vector<double> out;
  out.reserve(kStateFeatureDim);
  for (std::size_t t = 0; t < kNumFuncTypes; ++t) {
    out.push_back(p.occupied() && index_of(*p.func) == t ? 1.0 : 0.0);
  }
  out.push_back((p.geo.centroid.x - b.min.x) / w);
  out.push_back((p.geo.centroid.y - b.min.y) / h);
  out.push_back(p.geo.area / region.total_area());
  out.push_back(diag > 0.0 ? p.geo.perimeter / diag : 0.0);
  out.push_back(p.geo.compactness);
  append_stats(out, living_circle_stats(region, plot_idx), count_scale);
  append_stats(out, region.stats(), count_scale);
  return out;
}

}  // namespace replan
