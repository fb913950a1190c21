#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "replan/domain.hpp"

namespace replan {

inline constexpr std::array<FuncType, 5> kServiceTypes = {
    FuncType::Business, FuncType::Office, FuncType::Recreation, FuncType::Hospital,
    FuncType::School};
inline constexpr std::array<FuncType, 2> kEcologyTypes = {FuncType::Park, FuncType::OpenSpace};
inline constexpr std::array<FuncType, 3> kEconomyTypes = {FuncType::Business, FuncType::Office,
                                                          FuncType::Recreation};
inline constexpr std::array<FuncType, 2> kEquityTypes = {FuncType::School, FuncType::Hospital};

// Share of (residential plot, service category) pairs whose nearest instance lies
// within the living-circle radius. Categories with no instance count as misses.
// Throws ValidationError when the region has no residential plot.
double service_reward(const Region& region);

// Mean over park and open space of min(coverage / target, 1).
double ecology_reward(const Region& region, const Demands& demands);

// Like ecology, but business/office/recreation area only counts when the plot's
// centroid is inside some residential living circle. Zero when nothing is residential.
double economy_reward(const Region& region, const Demands& demands);

// Mean over schools and hospitals of exp(alpha * (max - min)) of the per-residence
// nearest-facility distance. An absent category contributes 0.
double equity_reward(const Region& region);

enum class SatLevel : std::uint8_t { Poor, Average, Good, VeryGood };

double level_value(SatLevel level);  // 0.25 / 0.5 / 0.75 / 1.0
std::string_view to_string(SatLevel level);
std::optional<SatLevel> parse_sat_level(std::string_view text);
// Poor below 0.25, Average below 0.5, Good below 0.75, VeryGood otherwise.
SatLevel level_for_metric(double value);

enum class Stakeholder : std::uint8_t { Resident, Government, Developer };

inline constexpr std::array<Stakeholder, 3> kAllStakeholders = {
    Stakeholder::Resident, Stakeholder::Government, Stakeholder::Developer};

std::string_view to_string(Stakeholder s);

struct AspectRating {
  std::string aspect;
  SatLevel level = SatLevel::Poor;
  std::string reason;

  friend bool operator==(const AspectRating&, const AspectRating&) = default;
};

struct StakeholderRating {
  Stakeholder stakeholder = Stakeholder::Resident;
  std::vector<AspectRating> aspects;

  friend bool operator==(const StakeholderRating&, const StakeholderRating&) = default;
};

// Mean of mapped levels; throws ValidationError on an empty aspect list.
double stakeholder_score(const StakeholderRating& rating);

// Mean of the per-stakeholder scores; throws ValidationError when empty.
double satisfaction_score(std::span<const StakeholderRating> ratings);

struct SchemeReport {
  double service = 0.0;
  double ecology = 0.0;
  double economy = 0.0;
  double equity = 0.0;
  double obj_score = 0.0;
  double satisfaction = 0.0;
  double total = 0.0;
  std::vector<StakeholderRating> stakeholders;
};

SchemeReport score_scheme(const Region& region, const Demands& demands, double satisfaction);

SchemeReport score_scheme(const Region& region, const Demands& demands,
                          std::vector<StakeholderRating> ratings);

// Equal-weight sum of the four objective metrics.
inline double objective_sum(double service, double ecology, double economy, double equity) {
  return service + ecology + economy + equity;
}

inline constexpr int kReportSchema = 1;

nlohmann::ordered_json to_json(const SchemeReport& report);

}  // namespace replan
