#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "replan/domain.hpp"
#include "replan/rewards.hpp"

namespace replan {

// Region-level facts handed to objective formulation.
struct RegionSummary {
  double total_area = 0.0;  // m^2
  double width = 0.0;       // m, bounding box
  double height = 0.0;
  RegionStats stats;
};

RegionSummary summarize(const Region& region);

// Up to three recommended non-residential types. Empty means the advisor abstained.
struct RecSet {
  std::vector<FuncType> types;

  bool abstain() const { return types.empty(); }
  bool contains(FuncType t) const;

  friend bool operator==(const RecSet&, const RecSet&) = default;
};

inline constexpr std::size_t kMaxRecommendations = 3;

// The seven types an advisor may recommend, in the order the prompt lists them.
inline constexpr std::array<FuncType, 7> kRecommendableTypes = {
    FuncType::OpenSpace, FuncType::Office, FuncType::Business, FuncType::Recreation,
    FuncType::Hospital,  FuncType::School, FuncType::Park};

struct PlotContext {
  SizeClass size = SizeClass::Small;
  std::vector<FuncType> in_circle_types;  // distinct types present in the living circle
};

PlotContext plot_context(const Region& region, std::size_t plot_idx);

// Everything a stakeholder sees about a finished scheme.
struct SchemeSummary {
  RegionStats stats;
  std::array<int, kNumSubtypes> facility_tally{};
  Demands demands;
  double service = 0.0;
  double ecology = 0.0;
  double economy = 0.0;
  double equity = 0.0;
};

SchemeSummary summarize_scheme(const Region& region, const Demands& demands);

// The three advisory roles: objective formulation, action recommendation and
// stakeholder satisfaction scoring. Implementations must be safe to call from
// several rollout threads at once.
class Advisor {
 public:
  virtual ~Advisor() = default;

  virtual Demands formulate_objectives(const Demographics& demographics,
                                       const RegionSummary& region) = 0;

  virtual RecSet recommend_types(const PlotContext& plot, const RegionStats& stats,
                                 const Demands& demands,
                                 const std::array<int, kNumSubtypes>& facility_tally) = 0;

  virtual std::vector<StakeholderRating> score_satisfaction(const SchemeSummary& scheme) = 0;
};

// Offline, deterministic rule tables standing in for a language model.
class MockAdvisor : public Advisor {
 public:
  MockAdvisor() = default;

  Demands formulate_objectives(const Demographics& demographics,
                               const RegionSummary& region) override;
  RecSet recommend_types(const PlotContext& plot, const RegionStats& stats,
                         const Demands& demands,
                         const std::array<int, kNumSubtypes>& facility_tally) override;
  std::vector<StakeholderRating> score_satisfaction(const SchemeSummary& scheme) override;
};

// Never recommends anything; objectives and satisfaction come from the mock rules.
// Plugging this into training reproduces the unenhanced policy.
class AbstainAdvisor : public MockAdvisor {
 public:
  RecSet recommend_types(const PlotContext&, const RegionStats&, const Demands&,
                         const std::array<int, kNumSubtypes>&) override {
    return {};
  }
};

// Facility deficit (quota minus built) for the subtype a plot of this size would host.
int facility_deficit(FuncType t, SizeClass size, const Demands& demands,
                     const std::array<int, kNumSubtypes>& facility_tally);

// Parses a recommendation reply: "[Office, Park, School]" or "No". Unknown names
// and Residential are dropped; duplicates removed; at most three kept.
RecSet parse_recommendation(const std::string& text, std::vector<std::string>* dropped = nullptr);

}  // namespace replan
