#include "replan/advisor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "replan/error.hpp"

namespace replan {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

bool starts_with_any(const std::string& word, std::initializer_list<std::string_view> stems) {
  return std::any_of(stems.begin(), stems.end(), [&](std::string_view s) {
    return word.compare(0, s.size(), s) == 0;
  });
}

bool is_damper(const std::string& w) {
  return w == "low" || w == "limited" || w == "minimal" || w == "little" || w == "few" ||
         w == "less" || w == "no";
}

std::string fmt4(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

RegionSummary summarize(const Region& region) {
  RegionSummary s;
  s.total_area = region.total_area();
  s.width = region.bounds().width();
  s.height = region.bounds().height();
  s.stats = region.stats();
  return s;
}

bool RecSet::contains(FuncType t) const {
  return std::find(types.begin(), types.end(), t) != types.end();
}

PlotContext plot_context(const Region& region, std::size_t plot_idx) {
  PlotContext ctx;
  ctx.size = size_class(region.plot(plot_idx), region.config().large_plot_threshold);
  const LivingCircleStats circle = living_circle_stats(region, plot_idx);
  for (std::size_t t = 0; t < kNumFuncTypes; ++t) {
    if (circle.counts[t] > 0) ctx.in_circle_types.push_back(func_type_at(t));
  }
  return ctx;
}

SchemeSummary summarize_scheme(const Region& region, const Demands& demands) {
  SchemeSummary s;
  s.stats = region.stats();
  s.facility_tally = region.facility_tally();
  s.demands = demands;
  s.service = service_reward(region);
  s.ecology = ecology_reward(region, demands);
  s.economy = economy_reward(region, demands);
  s.equity = equity_reward(region);
  return s;
}

Demands MockAdvisor::formulate_objectives(const Demographics& demographics,
                                          const RegionSummary& region) {
  if (demographics.style.empty()) {
    throw ValidationError("objective formulation needs a non-empty planning style");
  }

  std::map<FuncType, CoverageLevel> level;
  for (FuncType t : kCoverageTypes) level[t] = CoverageLevel::Medium;

  // One of each facility subtype per 2 km^2, at least one.
  const int base = std::max(1, static_cast<int>(std::lround(region.total_area / 2.0e6)));
  std::map<FacilitySubtype, int> counts;
  for (FacilitySubtype s : kAllSubtypes) counts[s] = base;

  const auto words = words_of(demographics.style);
  bool schooling = false;
  bool care = false;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& w = words[i];
    const bool damped = i > 0 && is_damper(words[i - 1]);
    const CoverageLevel lv = damped ? CoverageLevel::Low : CoverageLevel::High;
    if (starts_with_any(w, {"green", "park"})) level[FuncType::Park] = lv;
    if (starts_with_any(w, {"open"}) && i + 1 < words.size() && words[i + 1] == "space") {
      level[FuncType::OpenSpace] = lv;
    }
    if (starts_with_any(w, {"commerc", "business", "shopping", "tourist", "tourism"})) {
      level[FuncType::Business] = lv;
    }
    if (starts_with_any(w, {"entertain", "tourist", "tourism", "leisure", "recreation"})) {
      level[FuncType::Recreation] = lv;
    }
    if (starts_with_any(w, {"enterprise", "office", "industr"})) level[FuncType::Office] = lv;
    if (starts_with_any(w, {"school", "educat", "children", "child"})) schooling = true;
    if (starts_with_any(w, {"elder", "medical", "health", "hospital"})) care = true;
  }
  if (schooling) {
    counts[FacilitySubtype::Kindergarten] += 1;
    counts[FacilitySubtype::PrimarySchool] += 1;
  }
  if (care) {
    counts[FacilitySubtype::Clinic] += 1;
    counts[FacilitySubtype::LargeHospital] += 1;
  }

  Demands d;
  for (const auto& [t, lv] : level) d.coverage_targets[t] = coverage_fraction(lv);
  d.facility_counts = counts;
  return d;
}

int facility_deficit(FuncType t, SizeClass size, const Demands& demands,
                     const std::array<int, kNumSubtypes>& tally) {
  const auto deficit = [&](FacilitySubtype s) {
    return demands.quota(s) - tally[static_cast<std::size_t>(s)];
  };
  if (t == FuncType::School) {
    if (size == SizeClass::Small) return deficit(FacilitySubtype::Kindergarten);
    return std::max(deficit(FacilitySubtype::PrimarySchool),
                    deficit(FacilitySubtype::SecondarySchool));
  }
  if (t == FuncType::Hospital) {
    return deficit(size == SizeClass::Small ? FacilitySubtype::Clinic
                                            : FacilitySubtype::LargeHospital);
  }
  return 0;
}

RecSet MockAdvisor::recommend_types(const PlotContext& plot, const RegionStats& stats,
                                    const Demands& demands,
                                    const std::array<int, kNumSubtypes>& tally) {
  struct Candidate {
    FuncType type;
    bool facility;
    double deficit;
  };
  std::vector<Candidate> ranked;
  for (FuncType t : {FuncType::School, FuncType::Hospital}) {
    const int d = facility_deficit(t, plot.size, demands, tally);
    if (d > 0) ranked.push_back({t, true, static_cast<double>(d)});
  }
  for (FuncType t : kCoverageTypes) {
    const double target = demands.coverage(t);
    if (!(target > 0.0)) continue;
    const double d = (target - stats.ratios[index_of(t)]) / target;
    if (d > 0.0) ranked.push_back({t, false, d});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.facility != b.facility) return a.facility;
    if (a.deficit != b.deficit) return a.deficit > b.deficit;
    return index_of(a.type) < index_of(b.type);
  });
  RecSet out;
  for (const auto& c : ranked) {
    if (out.types.size() == kMaxRecommendations) break;
    out.types.push_back(c.type);
  }
  return out;
}

std::vector<StakeholderRating> MockAdvisor::score_satisfaction(const SchemeSummary& scheme) {
  const auto rate = [](std::string aspect, double metric, std::string_view label) {
    return AspectRating{std::move(aspect), level_for_metric(metric),
                        std::string(label) + " " + fmt4(metric)};
  };
  std::vector<StakeholderRating> out;
  out.push_back({Stakeholder::Resident,
                 {rate("services", scheme.service, "service reward"),
                  rate("green space", scheme.ecology, "ecology reward")}});
  out.push_back({Stakeholder::Government,
                 {rate("sustainability", 0.5 * (scheme.ecology + scheme.equity),
                       "mean of ecology and equity rewards")}});
  out.push_back({Stakeholder::Developer,
                 {rate("commercial value", scheme.economy, "economy reward")}});
  return out;
}

RecSet parse_recommendation(const std::string& text, std::vector<std::string>* dropped) {
  const std::string lower = lowercase(text);
  const auto open = text.find('[');
  const auto close = text.find(']', open == std::string::npos ? 0 : open);
  if (open == std::string::npos || close == std::string::npos) {
    const auto words = words_of(lower);
    if (!words.empty() && words.front() == "no") return {};
    throw AdvisorError("recommendation reply is neither a list nor \"No\"", text);
  }
  RecSet out;
  std::string item;
  std::stringstream ss(text.substr(open + 1, close - open - 1));
  while (std::getline(ss, item, ',')) {
    std::string name;
    for (char c : item) {
      if (c != '"' && c != '\'' && c != '\\') name.push_back(c);
    }
    const auto first = name.find_first_not_of(" \t\r\n");
    const auto last = name.find_last_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    name = name.substr(first, last - first + 1);
    const auto t = parse_func_type(name);
    const bool recommendable = t && std::find(kRecommendableTypes.begin(),
                                              kRecommendableTypes.end(),
                                              *t) != kRecommendableTypes.end();
    if (!recommendable) {
      if (dropped) dropped->push_back(name);
      continue;
    }
    if (out.contains(*t)) continue;
    if (out.types.size() < kMaxRecommendations) out.types.push_back(*t);
  }
  return out;
}

}  // namespace replan
