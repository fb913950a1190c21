#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "gradcheck.hpp"
#include "replan/error.hpp"
#include "replan/policy.hpp"

using namespace replan;

namespace {

// Upper 0.001 quantile of chi-square with 7 degrees of freedom.
constexpr double kChi2Df7P001 = 24.3219;

Probs uniform() {
  Probs p;
  p.fill(1.0 / kNumFuncTypes);
  return p;
}

double sum(const Probs& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

Probs random_probs(Rng& rng) {
  std::vector<double> logits(kNumFuncTypes);
  for (double& l : logits) l = 4.0 * rng.uniform() - 2.0;
  return softmax(logits);
}

RecSet rec_of(std::initializer_list<FuncType> ts) { return RecSet{std::vector<FuncType>(ts)}; }

}  // namespace

TEST_CASE("actor starts uniform and critic starts at zero") {
  const PolicyBundle b = make_policy(PlanningConfig{});
  std::vector<double> x(kStateFeatureDim, 0.3);
  for (double p : actor_forward(b, x)) CHECK(p == doctest::Approx(0.125).epsilon(1e-15));
  std::vector<double> e(kStatsFeatureDim, 0.7);
  CHECK(critic_forward(b, e) == 0.0);
}

TEST_CASE("actor probabilities sum to one for random weights") {
  Rng rng(5);
  PolicyBundle b = make_policy(PlanningConfig{});
  for (int trial = 0; trial < 50; ++trial) {
    gradcheck::randomize(b.actor, rng, 0.5);
    const auto x = gradcheck::random_input(kStateFeatureDim, rng);
    const Probs p = actor_forward(b, x);
    CHECK(sum(p) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : p) CHECK(v >= 0.0);
  }
}

TEST_CASE("forward passes are deterministic and reject bad input") {
  PlanningConfig cfg;
  cfg.seed = 77;
  PolicyBundle a = make_policy(cfg);
  PolicyBundle b = make_policy(cfg);
  CHECK(a == b);
  Rng rng(1);
  gradcheck::randomize(a.actor, rng, 0.3);
  const auto x = gradcheck::random_input(kStateFeatureDim, rng);
  CHECK(actor_forward(a, x) == actor_forward(a, x));

  std::vector<double> bad(kStateFeatureDim, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(actor_forward(a, bad), ValidationError);
  CHECK_THROWS_AS(actor_forward(a, std::vector<double>(10, 0.0)), ValidationError);
  std::vector<double> e(kStatsFeatureDim, 0.0);
  e[0] = INFINITY;
  CHECK_THROWS_AS(critic_forward(a, e), ValidationError);
}

TEST_CASE("critic output is finite for random inputs") {
  Rng rng(9);
  PolicyBundle b = make_policy(PlanningConfig{});
  gradcheck::randomize(b.critic, rng, 0.5);
  for (int i = 0; i < 100; ++i) {
    auto e = gradcheck::random_input(kStatsFeatureDim, rng);
    for (double& v : e) v = 1e3 * (v - 0.5);
    CHECK(std::isfinite(critic_forward(b, e)));
  }
}

TEST_CASE("enhancement of a uniform distribution") {
  const ActionDist d = enhance(uniform(), rec_of({FuncType::Park}), 2.0);
  const double hi = std::exp(0.25) / (std::exp(0.25) + 7.0 * std::exp(0.125));
  const double lo = std::exp(0.125) / (std::exp(0.25) + 7.0 * std::exp(0.125));
  CHECK(d.enhanced);
  CHECK(d.probs[index_of(FuncType::Park)] == doctest::Approx(0.13932).epsilon(1e-5));
  CHECK(d.probs[index_of(FuncType::Park)] == doctest::Approx(hi).epsilon(1e-14));
  CHECK(d.probs[0] == doctest::Approx(0.12295).epsilon(1e-4));
  CHECK(d.probs[0] == doctest::Approx(lo).epsilon(1e-14));

  const ActionDist r = enhance(uniform(), rec_of({FuncType::Park}), 2.0, EnhanceMode::Renormalize);
  CHECK(r.probs[index_of(FuncType::Park)] == doctest::Approx(2.0 / 9.0));
  CHECK(r.probs[0] == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("abstaining leaves the distribution alone") {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Probs p = random_probs(rng);
    const ActionDist d = enhance(p, RecSet{}, 2.0);
    CHECK_FALSE(d.enhanced);
    CHECK(d.probs == p);
  }
}

TEST_CASE("lambda one is a softmax of the probabilities, not the identity") {
  const ActionDist u = enhance(uniform(), rec_of({FuncType::School}), 1.0);
  for (double p : u.probs) CHECK(p == doctest::Approx(0.125).epsilon(1e-15));

  Probs skew{};
  skew[0] = 0.9;
  for (std::size_t i = 1; i < kNumFuncTypes; ++i) skew[i] = 0.1 / 7.0;
  const ActionDist s = enhance(skew, rec_of({FuncType::School}), 1.0);
  const Probs expected = softmax(std::vector<double>(skew.begin(), skew.end()));
  for (std::size_t i = 0; i < kNumFuncTypes; ++i) CHECK(s.probs[i] == doctest::Approx(expected[i]));
  CHECK(s.probs[0] < 0.9);
}

TEST_CASE("enhancement keeps order outside the set and raises mass inside it") {
  Rng rng(11);
  for (EnhanceMode mode : {EnhanceMode::Softmax, EnhanceMode::Renormalize}) {
    for (int trial = 0; trial < 200; ++trial) {
      const Probs p = random_probs(rng);
      RecSet rec;
      const std::size_t k = 1 + rng.below(3);
      while (rec.types.size() < k) {
        const FuncType t = func_type_at(rng.below(kNumFuncTypes));
        if (!rec.contains(t)) rec.types.push_back(t);
      }
      const double lambda = 1.0 + 3.0 * rng.uniform() + 1e-3;
      const Probs q = enhance(p, rec, lambda, mode).probs;
      const Probs base = enhance(p, rec, 1.0, mode).probs;
      CHECK(sum(q) == doctest::Approx(1.0).epsilon(1e-12));
      double mass_q = 0.0;
      double mass_base = 0.0;
      for (std::size_t i = 0; i < kNumFuncTypes; ++i) {
        if (rec.contains(func_type_at(i))) {
          mass_q += q[i];
          mass_base += base[i];
          continue;
        }
        for (std::size_t j = 0; j < kNumFuncTypes; ++j) {
          if (rec.contains(func_type_at(j))) continue;
          if (p[i] > p[j]) CHECK(q[i] > q[j]);
        }
      }
      if (rec.types.size() < kNumFuncTypes) CHECK(mass_q > mass_base);
    }
  }
}

TEST_CASE("sampling a degenerate distribution") {
  ActionDist d;
  d.probs[0] = 1.0;
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) CHECK(sample_action(d, rng) == FuncType::Residential);
  d.probs[0] = 0.0;
  d.probs[7] = 1.0;
  for (int i = 0; i < 1000; ++i) CHECK(sample_action(d, rng) == FuncType::OpenSpace);
}

TEST_CASE("uniform sampling frequencies") {
  ActionDist d;
  d.probs = uniform();
  Rng rng(123);
  std::array<int, kNumFuncTypes> counts{};
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) ++counts[index_of(sample_action(d, rng))];
  for (int c : counts) CHECK(std::abs(c / double(n) - 0.125) <= 0.002);
}

TEST_CASE("sampling passes a goodness-of-fit test") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    ActionDist d;
    d.probs = random_probs(rng);
    std::array<int, kNumFuncTypes> counts{};
    const int n = 100'000;
    for (int i = 0; i < n; ++i) ++counts[index_of(sample_action(d, rng))];
    double chi2 = 0.0;
    for (std::size_t i = 0; i < kNumFuncTypes; ++i) {
      const double e = n * d.probs[i];
      chi2 += (counts[i] - e) * (counts[i] - e) / e;
    }
    CHECK(chi2 < kChi2Df7P001);
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  ActionDist d;
  d.probs = {0.1, 0.2, 0.2, 0.1, 0.2, 0.1, 0.05, 0.05};
  CHECK(greedy_action(d) == FuncType::Business);
  d.probs = uniform();
  CHECK(greedy_action(d) == FuncType::Residential);
  d.probs[6] = 0.2;
  CHECK(greedy_action(d) == FuncType::Park);
}

TEST_CASE("actor gradient matches finite differences") {
  Rng rng(2024);
  SUBCASE("literal softmax enhancement") {
    const auto r = gradcheck::actor_draw(rng, EnhanceMode::Softmax, 1);
    CHECK(r.max_rel < 1e-4);
  }
  SUBCASE("renormalised enhancement") {
    const auto r = gradcheck::actor_draw(rng, EnhanceMode::Renormalize, 1);
    CHECK(r.max_rel < 1e-4);
  }
}

TEST_CASE("critic gradient matches finite differences") {
  Rng rng(7);
  const auto r = gradcheck::critic_draw(rng, 1);
  CHECK(r.checked == make_policy(PlanningConfig{}).critic.parameter_count());
  CHECK(r.max_rel < 1e-4);
}

TEST_CASE("zero advantages give a zero actor gradient") {
  Rng rng(4);
  Mlp actor(kActorLayers, rng);
  gradcheck::randomize(actor, rng, 0.2);
  std::vector<ActorSample> batch(4);
  for (auto& s : batch) {
    s.features = gradcheck::random_input(kStateFeatureDim, rng);
    s.rec = rec_of({FuncType::Park});
    s.action = rng.below(kNumFuncTypes);
    s.behavior_prob = 0.1;
    s.advantage = 0.0;
  }
  const ActorLoss l = actor_loss(actor, batch, 0.2, true, 2.0, EnhanceMode::Softmax);
  for (double g : l.grad) CHECK(g == 0.0);
}

TEST_CASE("clipped surrogate values") {
  // Zero-initialised actor: pi(a) = 0.125 for every action without enhancement.
  Rng rng(1);
  Mlp actor(kActorLayers, rng);
  ActorSample s;
  s.features.assign(kStateFeatureDim, 0.0);
  s.action = 2;

  SUBCASE("ratio above the band with positive advantage is clipped") {
    s.behavior_prob = 0.125 / 1.5;
    s.advantage = 1.0;
    const ActorLoss l = actor_loss(actor, std::span(&s, 1), 0.2, false, 2.0, EnhanceMode::Softmax);
    CHECK(l.ratios[0] == doctest::Approx(1.5));
    CHECK(l.loss == doctest::Approx(-1.2));
    CHECK(l.clipped == 1);
    for (double g : l.grad) CHECK(g == 0.0);
  }
  SUBCASE("ratio below the band with negative advantage is clipped") {
    s.behavior_prob = 0.125 / 0.5;
    s.advantage = -1.0;
    const ActorLoss l = actor_loss(actor, std::span(&s, 1), 0.2, false, 2.0, EnhanceMode::Softmax);
    CHECK(l.loss == doctest::Approx(0.8));
    CHECK(l.clipped == 1);
  }
  SUBCASE("ratio inside the band is not clipped") {
    s.behavior_prob = 0.125;
    s.advantage = 2.0;
    const ActorLoss l = actor_loss(actor, std::span(&s, 1), 0.2, false, 2.0, EnhanceMode::Softmax);
    CHECK(l.ratios[0] == doctest::Approx(1.0));
    CHECK(l.loss == doctest::Approx(-2.0));
    CHECK(l.clipped == 0);
  }
}

TEST_CASE("checkpoint round trip") {
  PlanningConfig cfg;
  cfg.seed = 31;
  cfg.learning_rate = 3e-4;
  PolicyBundle b = make_policy(cfg, true, EnhanceMode::Renormalize);
  Rng rng(31);
  gradcheck::randomize(b.actor, rng, 0.3);
  b.actor_opt.step = 17;
  b.actor_opt.m[5] = 0.25;
  const auto path = std::filesystem::temp_directory_path() / "replan_test_ckpt.bin";
  save_checkpoint(b, path);
  const PolicyBundle back = load_checkpoint(path);
  CHECK(back == b);
  CHECK(config_hash(back.config) == config_hash(cfg));
  std::filesystem::remove(path);
  CHECK_THROWS(load_checkpoint(path));
}

TEST_CASE("identical updates give identical parameters") {
  auto run = [] {
    PlanningConfig cfg;
    cfg.seed = 5;
    cfg.learning_rate = 1e-3;
    PolicyBundle b = make_policy(cfg);
    Rng rng(12);
    for (int step = 0; step < 5; ++step) {
      std::vector<ActorSample> ab(6);
      std::vector<CriticSample> cb(6);
      for (std::size_t i = 0; i < ab.size(); ++i) {
        ab[i].features = gradcheck::random_input(kStateFeatureDim, rng);
        ab[i].action = rng.below(kNumFuncTypes);
        ab[i].behavior_prob = 0.125;
        ab[i].advantage = rng.uniform() - 0.5;
        cb[i] = {gradcheck::random_input(kStatsFeatureDim, rng), rng.uniform()};
      }
      const StepReport rep = backward_and_step(b, ab, cb);
      CHECK_FALSE(rep.aborted);
    }
    return b;
  };
  const PolicyBundle a = run();
  const PolicyBundle b = run();
  CHECK(a == b);
  CHECK_FALSE(a == make_policy(a.config));
}

TEST_CASE("a non-finite gradient aborts the step") {
  PolicyBundle b = make_policy(PlanningConfig{});
  const PolicyBundle before = b;
  std::vector<ActorSample> ab(1);
  ab[0].features.assign(kStateFeatureDim, 0.0);
  ab[0].behavior_prob = 0.125;
  ab[0].advantage = 1.0;
  std::vector<CriticSample> cb{{std::vector<double>(kStatsFeatureDim, 0.0), INFINITY}};
  const StepReport rep = backward_and_step(b, ab, cb);
  CHECK(rep.aborted);
  CHECK(b.actor == before.actor);
  CHECK(b.critic == before.critic);
}
