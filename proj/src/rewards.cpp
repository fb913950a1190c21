#include "replan/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "replan/error.hpp"

namespace replan {

namespace {

std::vector<Point> centroids_of(const Region& region, FuncType type) {
  std::vector<Point> out;
  for (const auto& p : region.plots()) {
    if (p.occupied() && p.func == type) out.push_back(p.geo.centroid);
  }
  return out;
}

double nearest(const Point& from, std::span<const Point> targets) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : targets) best = std::min(best, distance(from, t));
  return best;
}

std::vector<Point> residential_centroids(const Region& region, const char* metric) {
  auto homes = centroids_of(region, FuncType::Residential);
  if (homes.empty()) {
    throw ValidationError(std::string(metric) + " reward needs at least one residential plot");
  }
  return homes;
}

double capped_ratio(double coverage, double target, FuncType t) {
  if (!(target > 0.0)) {
    throw ValidationError("demand coverage target for '" + std::string(to_string(t)) +
                          "' must be > 0");
  }
  return std::min(coverage / target, 1.0);
}

}  // namespace

double service_reward(const Region& region) {
  const auto homes = residential_centroids(region, "service");
  const double radius = region.config().living_circle_radius;

  std::vector<std::vector<Point>> services;
  for (FuncType t : kServiceTypes) services.push_back(centroids_of(region, t));

  double sum = 0.0;
  for (const auto& home : homes) {
    int hits = 0;
    for (const auto& instances : services) {
      if (!instances.empty() && nearest(home, instances) <= radius) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(kServiceTypes.size());
  }
  return sum / static_cast<double>(homes.size());
}

double ecology_reward(const Region& region, const Demands& demands) {
  const RegionStats stats = region.stats();
  double sum = 0.0;
  for (FuncType t : kEcologyTypes) {
    sum += capped_ratio(stats.ratios[index_of(t)], demands.coverage(t), t);
  }
  return sum / static_cast<double>(kEcologyTypes.size());
}

double economy_reward(const Region& region, const Demands& demands) {
  for (FuncType t : kEconomyTypes) capped_ratio(0.0, demands.coverage(t), t);

  const auto homes = centroids_of(region, FuncType::Residential);
  if (homes.empty()) return 0.0;
  const double radius = region.config().living_circle_radius;

  std::array<double, kNumFuncTypes> effective{};
  for (const auto& p : region.plots()) {
    if (!p.occupied()) continue;
    const FuncType t = *p.func;
    if (std::find(kEconomyTypes.begin(), kEconomyTypes.end(), t) == kEconomyTypes.end()) continue;
    if (in_disk_union(p.geo.centroid, homes, radius)) effective[index_of(t)] += p.geo.area;
  }
  double sum = 0.0;
  for (FuncType t : kEconomyTypes) {
    sum += capped_ratio(effective[index_of(t)] / region.total_area(), demands.coverage(t), t);
  }
  return sum / static_cast<double>(kEconomyTypes.size());
}

double equity_reward(const Region& region) {
  const auto homes = residential_centroids(region, "equity");
  const double alpha = region.config().equity_alpha;
  double sum = 0.0;
  for (FuncType t : kEquityTypes) {
    const auto facilities = centroids_of(region, t);
    if (facilities.empty()) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& home : homes) {
      const double d = nearest(home, facilities);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    sum += std::exp(alpha * (hi - lo));
  }
  return sum / static_cast<double>(kEquityTypes.size());
}

double level_value(SatLevel level) {
  switch (level) {
    case SatLevel::Poor:
      return 0.25;
    case SatLevel::Average:
      return 0.5;
    case SatLevel::Good:
      return 0.75;
    case SatLevel::VeryGood:
      return 1.0;
  }
  return 0.25;
}

std::string_view to_string(SatLevel level) {
  switch (level) {
    case SatLevel::Poor:
      return "poor";
    case SatLevel::Average:
      return "average";
    case SatLevel::Good:
      return "good";
    case SatLevel::VeryGood:
      return "very good";
  }
  return "poor";
}

std::optional<SatLevel> parse_sat_level(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c == '_' || c == '-') c = ' ';
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  // Order matters: "very good" contains "good".
  if (s.find("very good") != std::string::npos || s.find("verygood") != std::string::npos ||
      s.find("excellent") != std::string::npos) {
    return SatLevel::VeryGood;
  }
  if (s.find("good") != std::string::npos) return SatLevel::Good;
  if (s.find("average") != std::string::npos) return SatLevel::Average;
  if (s.find("poor") != std::string::npos) return SatLevel::Poor;
  return std::nullopt;
}

SatLevel level_for_metric(double value) {
  if (value < 0.25) return SatLevel::Poor;
  if (value < 0.5) return SatLevel::Average;
  if (value < 0.75) return SatLevel::Good;
  return SatLevel::VeryGood;
}

std::string_view to_string(Stakeholder s) {
  switch (s) {
    case Stakeholder::Resident:
      return "resident";
    case Stakeholder::Government:
      return "government";
    case Stakeholder::Developer:
      return "developer";
  }
  return "resident";
}

double stakeholder_score(const StakeholderRating& rating) {
  if (rating.aspects.empty()) {
    throw ValidationError("stakeholder '" + std::string(to_string(rating.stakeholder)) +
                          "' has no rated aspects");
  }
  double sum = 0.0;
  for (const auto& a : rating.aspects) sum += level_value(a.level);
  return sum / static_cast<double>(rating.aspects.size());
}

double satisfaction_score(std::span<const StakeholderRating> ratings) {
  if (ratings.empty()) throw ValidationError("satisfaction needs at least one stakeholder");
  double sum = 0.0;
  for (const auto& r : ratings) sum += stakeholder_score(r);
  return sum / static_cast<double>(ratings.size());
}

SchemeReport score_scheme(const Region& region, const Demands& demands, double satisfaction) {
  SchemeReport r;
  r.service = service_reward(region);
  r.ecology = ecology_reward(region, demands);
  r.economy = economy_reward(region, demands);
  r.equity = equity_reward(region);
  r.obj_score = objective_sum(r.service, r.ecology, r.economy, r.equity);
  r.satisfaction = satisfaction;
  r.total = r.obj_score + satisfaction;
  return r;
}

SchemeReport score_scheme(const Region& region, const Demands& demands,
                          std::vector<StakeholderRating> ratings) {
  SchemeReport r = score_scheme(region, demands, satisfaction_score(ratings));
  r.stakeholders = std::move(ratings);
  return r;
}

nlohmann::ordered_json to_json(const SchemeReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  j["service"] = report.service;
  j["ecology"] = report.ecology;
  j["economy"] = report.economy;
  j["equity"] = report.equity;
  j["obj_score"] = report.obj_score;
  j["satisfaction"] = report.satisfaction;
  j["total"] = report.total;
  auto& arr = j["stakeholders"] = nlohmann::ordered_json::array();
  for (const auto& s : report.stakeholders) {
    nlohmann::ordered_json sj;
    sj["stakeholder"] = to_string(s.stakeholder);
    sj["score"] = stakeholder_score(s);
    auto& aspects = sj["aspects"] = nlohmann::ordered_json::array();
    for (const auto& a : s.aspects) {
      aspects.push_back({{"aspect", a.aspect}, {"level", to_string(a.level)}, {"reason", a.reason}});
    }
    arr.push_back(std::move(sj));
  }
  return j;
}

}  // namespace replan
