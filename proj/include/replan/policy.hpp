#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "replan/advisor.hpp"
#include "replan/domain.hpp"
#include "replan/rng.hpp"

namespace replan {

// Fully connected network: tanh on hidden layers, identity on the output layer.
// Parameters live in one flat vector, layer by layer: weights (out x in, row major)
// followed by biases.
class Mlp {
 public:
  Mlp() = default;
  // Xavier-uniform hidden weights, zero biases, zero output layer.
  Mlp(std::vector<std::size_t> sizes, Rng& rng);

  // Activations of every layer, input first, kept for backward().
  struct Tape {
    std::vector<std::vector<double>> activations;
  };

  std::vector<double> forward(std::span<const double> input) const;
  std::vector<double> forward(std::span<const double> input, Tape& tape) const;

  // Adds dL/dparams to `grad` given dL/doutput for the pass recorded in `tape`.
  void backward(const Tape& tape, std::span<const double> grad_output, std::span<double> grad) const;

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::size_t layer_offset(std::size_t layer) const { return offsets_[layer]; }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit Adam(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}

  void apply(std::span<double> params, std::span<const double> grad, double lr);

  friend bool operator==(const Adam&, const Adam&) = default;
};

// How recommended probabilities are re-normalised after scaling by lambda.
enum class EnhanceMode : std::uint8_t {
  Softmax,      // softmax over the scaled probabilities
  Renormalize,  // divide the scaled probabilities by their sum
};

inline const std::vector<std::size_t> kActorLayers = {kStateFeatureDim, 128, 64, 32,
                                                      kNumFuncTypes};
inline const std::vector<std::size_t> kCriticLayers = {kStatsFeatureDim, 128, 64, 32, 1};

struct PolicyBundle {
  Mlp actor;
  Mlp critic;
  Adam actor_opt;
  Adam critic_opt;
  PlanningConfig config;
  bool enhance = true;  // false: advisor recommendations are ignored
  EnhanceMode mode = EnhanceMode::Softmax;

  friend bool operator==(const PolicyBundle&, const PolicyBundle&) = default;
};

// Fresh networks seeded from config.seed.
PolicyBundle make_policy(const PlanningConfig& config, bool enhance = true,
                         EnhanceMode mode = EnhanceMode::Softmax);

using Probs = std::array<double, kNumFuncTypes>;

struct ActionDist {
  Probs probs{};
  bool enhanced = false;
  RecSet rec;
};

Probs softmax(std::span<const double> logits);

// Base action probabilities. Throws ValidationError on a wrong-sized or non-finite input.
Probs actor_forward(const PolicyBundle& bundle, std::span<const double> features);
double critic_forward(const PolicyBundle& bundle, std::span<const double> region_features);

// Scales recommended entries by lambda and re-normalises. An abstaining RecSet
// returns the input unchanged.
ActionDist enhance(const Probs& probs, const RecSet& rec, double lambda,
                   EnhanceMode mode = EnhanceMode::Softmax);

// Categorical draw for training.
FuncType sample_action(const ActionDist& dist, Rng& rng);
// Argmax for evaluation; ties go to the lowest index.
FuncType greedy_action(const ActionDist& dist);

// One PPO sample as seen by the actor loss.
struct ActorSample {
  std::vector<double> features;
  RecSet rec;
  std::size_t action = 0;
  double behavior_prob = 1.0;
  double advantage = 0.0;
};

struct CriticSample {
  std::vector<double> region_features;
  double target = 0.0;
};

struct ActorLoss {
  double loss = 0.0;  // negated mean clipped surrogate
  std::size_t clipped = 0;
  std::size_t skipped = 0;  // non-finite ratios
  std::vector<double> grad;
  std::vector<double> ratios;
};

// Clipped surrogate over the enhanced policy pi'(a|s). `lambda` and `mode` describe
// the enhancement used at rollout time; enhance=false ignores the RecSets.
ActorLoss actor_loss(const Mlp& actor, std::span<const ActorSample> batch, double clip_eps,
                     bool enhance, double lambda, EnhanceMode mode);

// Mean squared error between critic output and targets; fills `grad` when non-null.
double critic_loss(const Mlp& critic, std::span<const CriticSample> batch,
                   std::vector<double>* grad);

struct StepReport {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
  double clip_fraction = 0.0;
  std::size_t skipped = 0;
  bool aborted = false;  // non-finite gradient; parameters untouched
};

// Analytic gradients of both losses followed by one Adam step each.
StepReport backward_and_step(PolicyBundle& bundle, std::span<const ActorSample> actor_batch,
                             std::span<const CriticSample> critic_batch);

// Binary checkpoint: layer sizes, parameters, optimizer state and config.
void save_checkpoint(const PolicyBundle& bundle, const std::filesystem::path& path);
PolicyBundle load_checkpoint(const std::filesystem::path& path);

std::uint64_t config_hash(const PlanningConfig& config);

}  // namespace replan
