#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "replan/advisor.hpp"
#include "replan/domain.hpp"
#include "replan/rewards.hpp"
#include "replan/rng.hpp"

namespace replan {

// One FuncType index per vacant plot, in the region's vacant order.
using Chromosome = std::vector<std::uint8_t>;

struct SearchConfig {
  // Genetic algorithm
  int population = 50;
  int generations = 200;
  double crossover_rate = 0.8;
  double mutation_rate = 0.05;
  int tournament_size = 3;
  int elitism = 1;
  // Simulated annealing
  double initial_temperature = 1.0;
  double cooling = 0.995;
  int proposals_per_temperature = 10;
  double floor_temperature = 1e-3;
  // Shared
  std::optional<double> budget_seconds;
  bool with_satisfaction = true;  // fitness adds mock stakeholder satisfaction

  void validate() const;
};

struct BaselineResult {
  Region region;  // completed scheme
  SchemeReport report;
  Chromosome best;
  std::vector<double> best_history;  // best-ever fitness per generation / temperature
  std::size_t advisor_failures = 0;
  std::size_t evaluations = 0;
};

// Applies the chromosome's types to the vacant plots in order.
Region decode(const Region& region, const Chromosome& chrom);

// obj_score, plus mock satisfaction when requested. Pure.
double evaluate_chromosome(const Region& region, const Chromosome& chrom, bool with_satisfaction);

// Final report of a completed region with mock stakeholder ratings.
SchemeReport report_with_mock_satisfaction(const Region& completed);

BaselineResult random_scheme(const Region& region, Rng& rng);

// Tournament selection, one-point crossover, per-gene mutation, elitism. Each
// generation's population is ranked by (fitness desc, genes asc) before selection, so
// the run does not depend on the order of `initial`.
BaselineResult ga_optimize(const Region& region, const SearchConfig& cfg, Rng& rng,
                           std::optional<std::vector<Chromosome>> initial = std::nullopt);

// Single-gene neighbours, Metropolis acceptance, geometric cooling.
BaselineResult sa_optimize(const Region& region, const SearchConfig& cfg, Rng& rng);

// Metropolis rule: always accept delta >= 0, otherwise with probability exp(delta / T).
bool sa_accept(double delta, double temperature, double u);

// Plans each plot with the first recommended type; abstentions and advisor
// failures fall back to a uniform random type.
BaselineResult llm_only_plan(const Region& region, Advisor& advisor, Rng& rng);

}  // namespace replan
