#include "replan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "replan/error.hpp"

namespace replan {

Trajectory rollout_episode(const Region& tmpl, const PolicyBundle& bundle,
                           const AdvisorSet& advisors, Rng& rng, ActionSelection selection,
                           Region* final_region) {
  Region region = tmpl;
  Trajectory traj;
  const double lambda = bundle.config.enhancement_lambda;
  while (auto idx = region.next_vacant()) {
    Transition tr;
    tr.plot_idx = *idx;
    tr.features = state_features(region, *idx);
    tr.region_features = region_features(region);
    const Probs base = actor_forward(bundle, tr.features);
    if (bundle.enhance && advisors.recommender) {
      try {
        tr.rec = advisors.recommender->recommend_types(plot_context(region, *idx), region.stats(),
                                                       region.demands(), region.facility_tally());
      } catch (const AdvisorError& e) {
        ++traj.advisor_failures;
        warn(std::string("advisor failed, planning without recommendation: ") + e.what());
        tr.rec = {};
      }
    }
    const ActionDist dist = enhance(base, tr.rec, lambda, bundle.mode);
    const FuncType action =
        selection == ActionSelection::Sample ? sample_action(dist, rng) : greedy_action(dist);
    tr.action = index_of(action);
    tr.behavior_prob = dist.probs[tr.action];
    apply_action_inplace(region, *idx, action);
    traj.steps.push_back(std::move(tr));
  }

  const Demands& demands = region.demands();
  const auto ratings = advisors.rater().score_satisfaction(summarize_scheme(region, demands));
  traj.report = score_scheme(region, demands, ratings);
  if (!traj.steps.empty()) {
    traj.steps.back().reward = traj.report.total;
    traj.steps.back().done = true;
  }
  if (final_region) *final_region = std::move(region);
  return traj;
}

std::vector<double> compute_returns(const Trajectory& traj, double gamma) {
  std::vector<double> out(traj.steps.size(), 0.0);
  double running = 0.0;
  for (std::size_t t = traj.steps.size(); t-- > 0;) {
    running = traj.steps[t].reward + gamma * running;
    out[t] = running;
  }
  return out;
}

std::vector<double> advantages(std::span<const double> returns, std::span<const Transition> steps,
                               const PolicyBundle& bundle) {
  std::vector<double> out(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) {
    out[t] = returns[t] - critic_forward(bundle, steps[t].region_features);
  }
  return out;
}

void normalize_in_place(std::vector<double>& xs) {
  if (xs.size() < 2) return;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  const double sd = std::sqrt(var);
  for (double& x : xs) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

UpdateReport ppo_update(PolicyBundle& bundle, std::span<const Trajectory> batch,
                        const TrainOptions& options) {
  std::vector<ActorSample> actor_batch;
  std::vector<CriticSample> critic_batch;
  std::vector<double> adv_all;
  for (const auto& traj : batch) {
    const auto returns = compute_returns(traj, bundle.config.gamma);
    const auto adv = advantages(returns, traj.steps, bundle);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const Transition& tr = traj.steps[t];
      actor_batch.push_back({tr.features, tr.rec, tr.action, tr.behavior_prob, adv[t]});
      critic_batch.push_back({tr.region_features, returns[t]});
      adv_all.push_back(adv[t]);
    }
  }
  if (actor_batch.empty()) throw ValidationError("ppo_update needs a non-empty batch");
  if (options.normalize_advantages) {
    normalize_in_place(adv_all);
    for (std::size_t i = 0; i < actor_batch.size(); ++i) actor_batch[i].advantage = adv_all[i];
  }

  UpdateReport rep;
  for (int epoch = 0; epoch < std::max(1, options.inner_epochs); ++epoch) {
    if (epoch == 0) {
      const ActorLoss first = actor_loss(bundle.actor, actor_batch, bundle.config.clip_eps,
                                         bundle.enhance, bundle.config.enhancement_lambda,
                                         bundle.mode);
      rep.first_ratios = first.ratios;
    }
    const StepReport step = backward_and_step(bundle, actor_batch, critic_batch);
    if (epoch == 0) {
      rep.actor_loss = step.actor_loss;
      rep.critic_loss = step.critic_loss;
      rep.first_clip_fraction = step.clip_fraction;
    }
    rep.last_clip_fraction = step.clip_fraction;
    rep.skipped += step.skipped;
    if (step.aborted) {
      ++rep.aborted_steps;
      warn("non-finite gradient, update step skipped");
    }
  }
  return rep;
}

nlohmann::ordered_json to_json(const EpisodeLog& e) {
  nlohmann::ordered_json j;
  j["episode"] = e.episode;
  j["service"] = e.report.service;
  j["ecology"] = e.report.ecology;
  j["economy"] = e.report.economy;
  j["equity"] = e.report.equity;
  j["obj_score"] = e.report.obj_score;
  j["satisfaction"] = e.report.satisfaction;
  j["total"] = e.report.total;
  j["actor_loss"] = e.actor_loss;
  j["critic_loss"] = e.critic_loss;
  j["clip_fraction"] = e.clip_fraction;
  if (e.wall_ms) j["wall_ms"] = *e.wall_ms;
  return j;
}

namespace {

std::vector<Trajectory> collect(const PolicyBundle& bundle, const Region& tmpl,
                                const AdvisorSet& advisors, int first_episode, int count,
                                int workers) {
  std::vector<Trajectory> out(static_cast<std::size_t>(count));
  auto run = [&](int i) {
    // Per-episode streams keep results independent of the worker count.
    Rng rng(mix_seed(bundle.config.seed, 1000 + static_cast<std::uint64_t>(first_episode + i)));
    out[static_cast<std::size_t>(i)] = rollout_episode(tmpl, bundle, advisors, rng);
  };
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) run(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) run(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

SchemeReport evaluate_greedy(const PolicyBundle& bundle, const Region& tmpl,
                             const AdvisorSet& advisors, int episodes) {
  SchemeReport mean;
  const int n = std::max(1, episodes);
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(bundle.config.seed, 900000 + static_cast<std::uint64_t>(i)));
    const Trajectory t = rollout_episode(tmpl, bundle, advisors, rng, ActionSelection::Greedy);
    mean.service += t.report.service / n;
    mean.ecology += t.report.ecology / n;
    mean.economy += t.report.economy / n;
    mean.equity += t.report.equity / n;
    mean.obj_score += t.report.obj_score / n;
    mean.satisfaction += t.report.satisfaction / n;
    mean.total += t.report.total / n;
  }
  return mean;
}

TrainResult train(PolicyBundle bundle, const Region& tmpl, const AdvisorSet& advisors,
                  const TrainOptions& options) {
  bundle.config.validate();
  if (!advisors.recommender) throw ValidationError("training needs an advisor");
  if (tmpl.complete()) throw ValidationError("training region has no vacant plot");

  TrainResult result;
  const int episodes = bundle.config.episodes;
  const int batch = std::max(1, options.batch_episodes);

  std::ofstream log_out;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log_out.open(options.out_dir / "train_log.jsonl", std::ios::trunc);
    if (!log_out) throw IoError("cannot write " + (options.out_dir / "train_log.jsonl").string());
  }

  auto checkpoint = [&](int episode) {
    const auto path = options.out_dir / ("ckpt_" + std::to_string(episode) + ".bin");
    try {
      save_checkpoint(bundle, path);
    } catch (const IoError& e) {
      const std::string last =
          result.last_checkpoint.empty() ? "none" : result.last_checkpoint.string();
      throw IoError(std::string(e.what()) + " (last good checkpoint: " + last + ")");
    }
    result.last_checkpoint = path;
  };

  int done = 0;
  int next_checkpoint = options.checkpoint_every > 0 ? options.checkpoint_every : episodes + 1;
  while (done < episodes) {
    const int count = std::min(batch, episodes - done);
    const auto start = std::chrono::steady_clock::now();
    const auto trajectories = collect(bundle, tmpl, advisors, done, count, options.workers);
    const UpdateReport upd = ppo_update(bundle, trajectories, options);
    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    for (int i = 0; i < count; ++i) {
      EpisodeLog e;
      e.episode = done + i;
      e.report = trajectories[static_cast<std::size_t>(i)].report;
      e.actor_loss = upd.actor_loss;
      e.critic_loss = upd.critic_loss;
      e.clip_fraction = upd.last_clip_fraction;
      if (options.log_wall_time) e.wall_ms = elapsed / count;
      if (log_out.is_open()) log_out << to_json(e).dump() << '\n';
      result.log.push_back(std::move(e));
    }
    done += count;
    if (!options.out_dir.empty() && done >= next_checkpoint && done < episodes) {
      checkpoint(done);
      while (next_checkpoint <= done) next_checkpoint += options.checkpoint_every;
    }
  }
  if (!options.out_dir.empty()) {
    log_out.flush();
    checkpoint(episodes);
  }
  result.evaluation = evaluate_greedy(bundle, tmpl, advisors, options.eval_episodes);
  result.bundle = std::move(bundle);
  return result;
}

int episodes_to_reach(std::span<const EpisodeLog> log, double fraction, int window) {
  const int n = static_cast<int>(log.size());
  if (n == 0) return 0;
  const int w = std::clamp(window, 1, n);
  double final_mean = 0.0;
  for (int i = n - w; i < n; ++i) final_mean += log[static_cast<std::size_t>(i)].report.total;
  final_mean /= w;
  const double target = fraction * final_mean;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += log[static_cast<std::size_t>(i)].report.total;
    if (i >= w) sum -= log[static_cast<std::size_t>(i - w)].report.total;
    const int len = std::min(i + 1, w);
    if (i + 1 >= w && sum / len >= target) return i + 1;
  }
  return n;
}

}  // namespace replan
