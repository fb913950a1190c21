#include "replan/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "replan/error.hpp"

namespace replan {

void SearchConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("search config: " + m); };
  if (population < 2) fail("population must be >= 2");
  if (generations < 0) fail("generations must be >= 0");
  if (crossover_rate < 0.0 || crossover_rate > 1.0) fail("crossover rate must be in [0, 1]");
  if (mutation_rate < 0.0 || mutation_rate > 1.0) fail("mutation rate must be in [0, 1]");
  if (tournament_size < 1) fail("tournament size must be >= 1");
  if (elitism < 0 || elitism > population) fail("elitism must be in [0, population]");
  if (!(initial_temperature > 0.0)) fail("initial temperature must be > 0");
  if (!(floor_temperature > 0.0)) fail("floor temperature must be > 0");
  if (!(cooling > 0.0 && cooling < 1.0)) fail("cooling must be in (0, 1)");
  if (proposals_per_temperature < 1) fail("proposals per temperature must be >= 1");
}

Region decode(const Region& region, const Chromosome& chrom) {
  const auto& order = region.vacant_order();
  if (chrom.size() != order.size()) {
    throw ValidationError("chromosome length " + std::to_string(chrom.size()) +
                          " does not match " + std::to_string(order.size()) + " vacant plots");
  }
  Region out = region;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (chrom[i] >= kNumFuncTypes) throw ValidationError("chromosome gene out of range");
    apply_action_inplace(out, order[i], func_type_at(chrom[i]));
  }
  return out;
}

SchemeReport report_with_mock_satisfaction(const Region& completed) {
  MockAdvisor mock;
  const auto ratings = mock.score_satisfaction(summarize_scheme(completed, completed.demands()));
  return score_scheme(completed, completed.demands(), ratings);
}

double evaluate_chromosome(const Region& region, const Chromosome& chrom, bool with_satisfaction) {
  const Region done = decode(region, chrom);
  if (with_satisfaction) return report_with_mock_satisfaction(done).total;
  return score_scheme(done, done.demands(), 0.0).obj_score;
}

namespace {

Chromosome random_chromosome(std::size_t n, Rng& rng) {
  Chromosome c(n);
  for (auto& g : c) g = static_cast<std::uint8_t>(rng.below(kNumFuncTypes));
  return c;
}

BaselineResult finish(const Region& region, Chromosome best, std::vector<double> history,
                      std::size_t evaluations) {
  BaselineResult r;
  r.region = decode(region, best);
  r.report = report_with_mock_satisfaction(r.region);
  r.best = std::move(best);
  r.best_history = std::move(history);
  r.evaluations = evaluations;
  return r;
}

// Memoised fitness; GA and SA revisit the same schemes constantly on small regions.
class FitnessCache {
 public:
  FitnessCache(const Region& region, bool with_sat) : region_(region), with_sat_(with_sat) {}

  double operator()(const Chromosome& c) {
    auto it = memo_.find(c);
    if (it != memo_.end()) return it->second;
    ++evaluations_;
    const double f = evaluate_chromosome(region_, c, with_sat_);
    memo_.emplace(c, f);
    return f;
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  const Region& region_;
  bool with_sat_;
  std::map<Chromosome, double> memo_;
  std::size_t evaluations_ = 0;
};

class Deadline {
 public:
  explicit Deadline(std::optional<double> seconds)
      : seconds_(seconds), start_(std::chrono::steady_clock::now()) {}

  bool passed() const {
    if (!seconds_) return false;
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    return elapsed.count() >= *seconds_;
  }

 private:
  std::optional<double> seconds_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

BaselineResult random_scheme(const Region& region, Rng& rng) {
  Chromosome c = random_chromosome(region.vacant_order().size(), rng);
  return finish(region, std::move(c), {}, 1);
}

BaselineResult ga_optimize(const Region& region, const SearchConfig& cfg, Rng& rng,
                           std::optional<std::vector<Chromosome>> initial) {
  cfg.validate();
  const std::size_t genes = region.vacant_order().size();
  const auto pop_size = static_cast<std::size_t>(cfg.population);
  FitnessCache fitness(region, cfg.with_satisfaction);
  const Deadline deadline(cfg.budget_seconds);

  std::vector<Chromosome> pop;
  if (initial) {
    pop = std::move(*initial);
    if (pop.size() != pop_size) throw ValidationError("initial population has the wrong size");
  } else {
    for (std::size_t i = 0; i < pop_size; ++i) pop.push_back(random_chromosome(genes, rng));
  }

  struct Scored {
    double fitness;
    Chromosome genes;
  };
  auto rank = [&](std::vector<Chromosome>& p) {
    std::vector<Scored> s;
    s.reserve(p.size());
    for (auto& c : p) s.push_back({fitness(c), std::move(c)});
    std::sort(s.begin(), s.end(), [](const Scored& a, const Scored& b) {
      if (a.fitness != b.fitness) return a.fitness > b.fitness;
      return a.genes < b.genes;
    });
    return s;
  };

  std::vector<Scored> ranked = rank(pop);
  Chromosome best = ranked.front().genes;
  double best_fit = ranked.front().fitness;
  std::vector<double> history{best_fit};

  for (int gen = 0; gen < cfg.generations && !deadline.passed(); ++gen) {
    // Population is sorted, so the lowest drawn index wins the tournament.
    auto select = [&]() -> const Chromosome& {
      std::size_t winner = rng.below(pop_size);
      for (int k = 1; k < cfg.tournament_size; ++k) winner = std::min(winner, rng.below(pop_size));
      return ranked[winner].genes;
    };
    std::vector<Chromosome> next;
    next.reserve(pop_size);
    for (int e = 0; e < cfg.elitism; ++e) next.push_back(ranked[static_cast<std::size_t>(e)].genes);
    while (next.size() < pop_size) {
      Chromosome a = select();
      Chromosome b = select();
      if (genes > 1 && rng.uniform() < cfg.crossover_rate) {
        const std::size_t cut = 1 + rng.below(genes - 1);
        for (std::size_t i = cut; i < genes; ++i) std::swap(a[i], b[i]);
      }
      for (Chromosome* child : {&a, &b}) {
        for (auto& g : *child) {
          if (rng.uniform() < cfg.mutation_rate) g = static_cast<std::uint8_t>(rng.below(kNumFuncTypes));
        }
      }
      next.push_back(std::move(a));
      if (next.size() < pop_size) next.push_back(std::move(b));
    }
    ranked = rank(next);
    if (ranked.front().fitness > best_fit) {
      best_fit = ranked.front().fitness;
      best = ranked.front().genes;
    }
    history.push_back(best_fit);
  }
  return finish(region, std::move(best), std::move(history), fitness.evaluations());
}

bool sa_accept(double delta, double temperature, double u) {
  if (delta >= 0.0) return true;
  return u < std::exp(delta / temperature);
}

BaselineResult sa_optimize(const Region& region, const SearchConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t genes = region.vacant_order().size();
  FitnessCache fitness(region, cfg.with_satisfaction);
  const Deadline deadline(cfg.budget_seconds);

  Chromosome current = random_chromosome(genes, rng);
  double current_fit = fitness(current);
  Chromosome best = current;
  double best_fit = current_fit;
  std::vector<double> history{best_fit};

  for (double temp = cfg.initial_temperature; temp >= cfg.floor_temperature && !deadline.passed();
       temp *= cfg.cooling) {
    for (int k = 0; k < cfg.proposals_per_temperature && genes > 0; ++k) {
      Chromosome cand = current;
      const std::size_t pos = rng.below(genes);
      const auto shift = static_cast<std::uint8_t>(1 + rng.below(kNumFuncTypes - 1));
      cand[pos] = static_cast<std::uint8_t>((cand[pos] + shift) % kNumFuncTypes);
      const double cand_fit = fitness(cand);
      if (sa_accept(cand_fit - current_fit, temp, rng.uniform())) {
        current = std::move(cand);
        current_fit = cand_fit;
        if (current_fit > best_fit) {
          best_fit = current_fit;
          best = current;
        }
      }
    }
    history.push_back(best_fit);
  }
  return finish(region, std::move(best), std::move(history), fitness.evaluations());
}

BaselineResult llm_only_plan(const Region& region, Advisor& advisor, Rng& rng) {
  Region work = region;
  Chromosome chosen;
  std::size_t failures = 0;
  while (auto idx = work.next_vacant()) {
    RecSet rec;
    try {
      rec = advisor.recommend_types(plot_context(work, *idx), work.stats(), work.demands(),
                                    work.facility_tally());
    } catch (const AdvisorError& e) {
      ++failures;
      warn(std::string("advisor failed, using a random type: ") + e.what());
    }
    const FuncType t = rec.abstain() ? func_type_at(rng.below(kNumFuncTypes)) : rec.types.front();
    chosen.push_back(static_cast<std::uint8_t>(index_of(t)));
    apply_action_inplace(work, *idx, t);
  }
  BaselineResult r;
  r.report = report_with_mock_satisfaction(work);
  r.region = std::move(work);
  r.best = std::move(chosen);
  r.advisor_failures = failures;
  r.evaluations = 1;
  return r;
}

}  // namespace replan
