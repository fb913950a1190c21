#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "replan/advisor.hpp"
#include "replan/policy.hpp"
#include "replan/rewards.hpp"

namespace replan {

struct Transition {
  std::vector<double> features;         // 45-dim actor input
  std::vector<double> region_features;  // 16-dim critic input, before the action
  std::size_t plot_idx = 0;
  std::size_t action = 0;
  double behavior_prob = 1.0;  // pi_old(a|s) of the distribution actually sampled
  RecSet rec;
  double reward = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> steps;
  SchemeReport report;
  std::size_t advisor_failures = 0;
};

enum class ActionSelection : std::uint8_t { Sample, Greedy };

// Advisors used during a rollout. `satisfaction` defaults to `recommender`.
struct AdvisorSet {
  Advisor* recommender = nullptr;
  Advisor* satisfaction = nullptr;

  Advisor& rater() const { return satisfaction ? *satisfaction : *recommender; }
};

// Plans every vacant plot of a copy of `tmpl` in order. The terminal step carries
// the scheme's total score; every other reward is zero.
Trajectory rollout_episode(const Region& tmpl, const PolicyBundle& bundle, const AdvisorSet& advisors,
                           Rng& rng, ActionSelection selection = ActionSelection::Sample,
                           Region* final_region = nullptr);

// R_t = sum_k gamma^(k-t) r_k.
std::vector<double> compute_returns(const Trajectory& traj, double gamma);

// Monte-Carlo advantages R_t - v(e_t), optionally standardised over the span.
std::vector<double> advantages(std::span<const double> returns, std::span<const Transition> steps,
                               const PolicyBundle& bundle);
void normalize_in_place(std::vector<double>& xs);

struct TrainOptions {
  int batch_episodes = 8;
  int inner_epochs = 4;
  bool normalize_advantages = false;
  int checkpoint_every = 1000;  // episodes; 0 writes only the final checkpoint
  int eval_episodes = 5;
  int workers = 1;
  bool log_wall_time = false;  // wall time makes the log non-reproducible
  std::filesystem::path out_dir;  // empty: nothing is written
};

struct UpdateReport {
  double actor_loss = 0.0;   // first inner epoch
  double critic_loss = 0.0;  // first inner epoch
  double first_clip_fraction = 0.0;
  double last_clip_fraction = 0.0;
  std::vector<double> first_ratios;  // importance ratios of the first inner epoch
  std::size_t skipped = 0;
  std::size_t aborted_steps = 0;
};

UpdateReport ppo_update(PolicyBundle& bundle, std::span<const Trajectory> batch,
                        const TrainOptions& options);

struct EpisodeLog {
  int episode = 0;
  SchemeReport report;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double clip_fraction = 0.0;
  std::optional<double> wall_ms;
};

nlohmann::ordered_json to_json(const EpisodeLog& entry);

struct TrainResult {
  PolicyBundle bundle;
  std::vector<EpisodeLog> log;
  SchemeReport evaluation;  // mean over greedy evaluation episodes
  std::filesystem::path last_checkpoint;
};

// Runs config.episodes episodes of PPO starting from `bundle`.
TrainResult train(PolicyBundle bundle, const Region& tmpl, const AdvisorSet& advisors,
                  const TrainOptions& options);

// Mean report of `episodes` greedy rollouts.
SchemeReport evaluate_greedy(const PolicyBundle& bundle, const Region& tmpl,
                             const AdvisorSet& advisors, int episodes);

// First episode at which the trailing mean of total reward (window `window`) reaches
// `fraction` of the mean over the last `window` episodes.
int episodes_to_reach(std::span<const EpisodeLog> log, double fraction, int window);

}  // namespace replan
