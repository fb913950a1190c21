#include "replan/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "replan/error.hpp"

namespace replan {

Mlp::Mlp(std::vector<std::size_t> sizes, Rng& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ValidationError("an MLP needs at least an input and output layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    double* w = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < in * out; ++i) w[i] = (2.0 * rng.uniform() - 1.0) * limit;
  }
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Tape tape;
  return forward(input, tape);
}

std::vector<double> Mlp::forward(std::span<const double> input, Tape& tape) const {
  if (input.size() != input_size()) {
    throw ValidationError("MLP input has " + std::to_string(input.size()) + " values, expected " +
                          std::to_string(input_size()));
  }
  const std::size_t layers = sizes_.size() - 1;
  tape.activations.resize(sizes_.size());
  tape.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + in * out;
    const auto& x = tape.activations[l];
    auto& y = tape.activations[l + 1];
    y.resize(out);
    const bool hidden = l + 1 < layers;
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = hidden ? std::tanh(acc) : acc;
    }
  }
  return tape.activations.back();
}

void Mlp::backward(const Tape& tape, std::span<const double> grad_output,
                   std::span<double> grad) const {
  const std::size_t layers = sizes_.size() - 1;
  std::vector<double> delta(grad_output.begin(), grad_output.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + in * out;
    const auto& x = tape.activations[l];
    // delta holds dL/d(pre-activation) of layer l+1.
    if (l + 1 < layers) {
      const auto& y = tape.activations[l + 1];
      for (std::size_t o = 0; o < out; ++o) delta[o] *= 1.0 - y[o] * y[o];
    }
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      const double* row = w + o * in;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += d * x[i];
        prev[i] += d * row[i];
      }
    }
    delta = std::move(prev);
  }
}

void Adam::apply(std::span<double> params, std::span<const double> grad, double lr) {
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  ++step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + epsilon);
  }
}

PolicyBundle make_policy(const PlanningConfig& config, bool enhance, EnhanceMode mode) {
  config.validate();
  PolicyBundle b;
  Rng actor_rng(mix_seed(config.seed, 101));
  Rng critic_rng(mix_seed(config.seed, 202));
  b.actor = Mlp(kActorLayers, actor_rng);
  b.critic = Mlp(kCriticLayers, critic_rng);
  b.actor_opt = Adam(b.actor.parameter_count());
  b.critic_opt = Adam(b.critic.parameter_count());
  b.config = config;
  b.enhance = enhance;
  b.mode = mode;
  return b;
}

Probs softmax(std::span<const double> logits) {
  Probs p{};
  double hi = -std::numeric_limits<double>::infinity();
  for (double z : logits) hi = std::max(hi, z);
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumFuncTypes; ++k) {
    p[k] = std::exp(logits[k] - hi);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + " contains a non-finite value");
  }
}

std::array<double, kNumFuncTypes> scale_mask(const RecSet& rec, double lambda) {
  std::array<double, kNumFuncTypes> m;
  m.fill(1.0);
  for (FuncType t : rec.types) m[index_of(t)] = lambda;
  return m;
}

}  // namespace

Probs actor_forward(const PolicyBundle& bundle, std::span<const double> features) {
  if (features.size() != kStateFeatureDim) {
    throw ValidationError("actor expects " + std::to_string(kStateFeatureDim) + " features");
  }
  require_finite(features, "actor input");
  const auto logits = bundle.actor.forward(features);
  return softmax(logits);
}

double critic_forward(const PolicyBundle& bundle, std::span<const double> region_features) {
  if (region_features.size() != kStatsFeatureDim) {
    throw ValidationError("critic expects " + std::to_string(kStatsFeatureDim) + " features");
  }
  require_finite(region_features, "critic input");
  return bundle.critic.forward(region_features)[0];
}

ActionDist enhance(const Probs& probs, const RecSet& rec, double lambda, EnhanceMode mode) {
  ActionDist out;
  out.rec = rec;
  if (rec.abstain()) {
    out.probs = probs;
    return out;
  }
  const auto m = scale_mask(rec, lambda);
  std::array<double, kNumFuncTypes> scaled;
  for (std::size_t k = 0; k < kNumFuncTypes; ++k) scaled[k] = m[k] * probs[k];
  if (mode == EnhanceMode::Softmax) {
    out.probs = softmax(scaled);
  } else {
    double sum = 0.0;
    for (double s : scaled) sum += s;
    for (std::size_t k = 0; k < kNumFuncTypes; ++k) out.probs[k] = scaled[k] / sum;
  }
  out.enhanced = true;
  return out;
}

FuncType sample_action(const ActionDist& dist, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < kNumFuncTypes; ++k) {
    if (dist.probs[k] <= 0.0) continue;
    last_positive = k;
    acc += dist.probs[k];
    if (u < acc) return func_type_at(k);
  }
  // Rounding left u above the cumulative sum.
  return func_type_at(last_positive);
}

FuncType greedy_action(const ActionDist& dist) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumFuncTypes; ++k) {
    if (dist.probs[k] > dist.probs[best]) best = k;
  }
  return func_type_at(best);
}

ActorLoss actor_loss(const Mlp& actor, std::span<const ActorSample> batch, double clip_eps,
                     bool enhance_on, double lambda, EnhanceMode mode) {
  ActorLoss out;
  out.grad.assign(actor.parameter_count(), 0.0);
  out.ratios.reserve(batch.size());
  Mlp::Tape tape;
  std::size_t used = 0;
  double surrogate_sum = 0.0;
  for (const auto& s : batch) {
    const auto logits = actor.forward(s.features, tape);
    const Probs p = softmax(logits);
    const std::size_t a = s.action;
    const bool scaled = enhance_on && !s.rec.abstain();

    // v[k] = d log pi'(a) / d p[k]
    std::array<double, kNumFuncTypes> v{};
    double pi_a = 0.0;
    if (!scaled) {
      pi_a = p[a];
      v[a] = 1.0 / p[a];
    } else {
      const auto m = scale_mask(s.rec, lambda);
      if (mode == EnhanceMode::Softmax) {
        const ActionDist d = enhance(p, s.rec, lambda, mode);
        pi_a = d.probs[a];
        for (std::size_t k = 0; k < kNumFuncTypes; ++k) {
          v[k] = ((k == a ? 1.0 : 0.0) - d.probs[k]) * m[k];
        }
      } else {
        double sum = 0.0;
        for (std::size_t k = 0; k < kNumFuncTypes; ++k) sum += m[k] * p[k];
        pi_a = m[a] * p[a] / sum;
        for (std::size_t k = 0; k < kNumFuncTypes; ++k) {
          v[k] = (k == a ? 1.0 / p[a] : 0.0) - m[k] / sum;
        }
      }
    }

    const double ratio = pi_a / s.behavior_prob;
    out.ratios.push_back(ratio);
    if (!std::isfinite(ratio) || !(s.behavior_prob > 0.0)) {
      ++out.skipped;
      continue;
    }
    ++used;
    if (ratio < 1.0 - clip_eps || ratio > 1.0 + clip_eps) ++out.clipped;
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double unclipped_term = ratio * s.advantage;
    const double clipped_term = clipped * s.advantage;
    surrogate_sum += std::min(unclipped_term, clipped_term);
    if (unclipped_term > clipped_term) continue;  // clipped branch is constant in theta

    // d log pi'(a) / d logits, then scale by -A * ratio (d ratio = ratio * d log pi').
    double vp = 0.0;
    for (std::size_t k = 0; k < kNumFuncTypes; ++k) vp += v[k] * p[k];
    std::array<double, kNumFuncTypes> dz{};
    if (!scaled) {
      for (std::size_t j = 0; j < kNumFuncTypes; ++j) dz[j] = (j == a ? 1.0 : 0.0) - p[j];
    } else {
      for (std::size_t j = 0; j < kNumFuncTypes; ++j) dz[j] = p[j] * (v[j] - vp);
    }
    const double scale = -s.advantage * ratio;
    for (double& g : dz) g *= scale;
    actor.backward(tape, dz, out.grad);
  }
  if (used > 0) {
    const double inv = 1.0 / static_cast<double>(used);
    out.loss = -surrogate_sum * inv;
    for (double& g : out.grad) g *= inv;
  }
  return out;
}

double critic_loss(const Mlp& critic, std::span<const CriticSample> batch,
                   std::vector<double>* grad) {
  if (grad) grad->assign(critic.parameter_count(), 0.0);
  if (batch.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  Mlp::Tape tape;
  double loss = 0.0;
  for (const auto& s : batch) {
    const double value = critic.forward(s.region_features, tape)[0];
    const double err = value - s.target;
    loss += err * err * inv;
    if (grad) {
      const double d = 2.0 * err * inv;
      critic.backward(tape, std::span<const double>(&d, 1), *grad);
    }
  }
  return loss;
}

namespace {

double norm2(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

}  // namespace

StepReport backward_and_step(PolicyBundle& bundle, std::span<const ActorSample> actor_batch,
                             std::span<const CriticSample> critic_batch) {
  StepReport rep;
  const auto& cfg = bundle.config;
  ActorLoss al = actor_loss(bundle.actor, actor_batch, cfg.clip_eps, bundle.enhance,
                            cfg.enhancement_lambda, bundle.mode);
  std::vector<double> cgrad;
  rep.critic_loss = critic_loss(bundle.critic, critic_batch, &cgrad);
  rep.actor_loss = al.loss;
  rep.skipped = al.skipped;
  const std::size_t used = actor_batch.size() - al.skipped;
  rep.clip_fraction = used > 0 ? static_cast<double>(al.clipped) / static_cast<double>(used) : 0.0;
  rep.actor_grad_norm = norm2(al.grad);
  rep.critic_grad_norm = norm2(cgrad);
  if (!std::isfinite(rep.actor_grad_norm) || !std::isfinite(rep.critic_grad_norm)) {
    rep.aborted = true;
    return rep;
  }
  if (!actor_batch.empty()) bundle.actor_opt.apply(bundle.actor.params(), al.grad, cfg.learning_rate);
  if (!critic_batch.empty()) {
    bundle.critic_opt.apply(bundle.critic.params(), cgrad, cfg.learning_rate);
  }
  return rep;
}

namespace {

constexpr char kMagic[8] = {'R', 'P', 'L', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <typename T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_doubles(std::span<const double> xs) {
    put<std::uint64_t>(xs.size());
    out_.write(reinterpret_cast<const char*>(xs.data()),
               static_cast<std::streamsize>(xs.size() * sizeof(double)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw IoError("truncated checkpoint " + source_);
    return v;
  }
  std::vector<double> get_doubles(std::size_t max_count) {
    const auto n = get<std::uint64_t>();
    if (n > max_count) throw IoError("corrupt checkpoint " + source_ + ": array too large");
    std::vector<double> xs(n);
    in_.read(reinterpret_cast<char*>(xs.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in_) throw IoError("truncated checkpoint " + source_);
    return xs;
  }

 private:
  std::istream& in_;
  std::string source_;
};

void write_config(Writer& w, const PlanningConfig& c) {
  w.put(c.living_circle_radius);
  w.put(c.equity_alpha);
  w.put(c.enhancement_lambda);
  w.put(c.gamma);
  w.put(c.clip_eps);
  w.put(c.learning_rate);
  w.put<std::int64_t>(c.episodes);
  w.put(c.large_plot_threshold);
  w.put(c.seed);
}

PlanningConfig read_config(Reader& r) {
  PlanningConfig c;
  c.living_circle_radius = r.get<double>();
  c.equity_alpha = r.get<double>();
  c.enhancement_lambda = r.get<double>();
  c.gamma = r.get<double>();
  c.clip_eps = r.get<double>();
  c.learning_rate = r.get<double>();
  c.episodes = static_cast<int>(r.get<std::int64_t>());
  c.large_plot_threshold = r.get<double>();
  c.seed = r.get<std::uint64_t>();
  return c;
}

void write_network(Writer& w, const Mlp& net, const Adam& opt) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.sizes().size()));
  for (std::size_t s : net.sizes()) w.put<std::uint64_t>(s);
  w.put_doubles(net.params());
  w.put(opt.step);
  w.put_doubles(opt.m);
  w.put_doubles(opt.v);
}

void read_network(Reader& r, Mlp& net, Adam& opt, const std::vector<std::size_t>& expected) {
  const auto count = r.get<std::uint32_t>();
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i < count && i < 64; ++i) {
    sizes.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
  }
  if (sizes != expected) throw IoError("checkpoint layer sizes do not match this build");
  Rng unused(0);
  net = Mlp(sizes, unused);
  auto params = r.get_doubles(net.parameter_count());
  if (params.size() != net.parameter_count()) throw IoError("checkpoint parameter count mismatch");
  std::copy(params.begin(), params.end(), net.params().begin());
  opt = Adam(net.parameter_count());
  opt.step = r.get<std::uint64_t>();
  opt.m = r.get_doubles(net.parameter_count());
  opt.v = r.get_doubles(net.parameter_count());
  if (opt.m.size() != net.parameter_count() || opt.v.size() != net.parameter_count()) {
    throw IoError("checkpoint optimizer state size mismatch");
  }
}

}  // namespace

std::uint64_t config_hash(const PlanningConfig& config) {
  std::ostringstream buf;
  Writer w(buf);
  write_config(w, config);
  const std::string bytes = buf.str();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void save_checkpoint(const PolicyBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.put(kCheckpointVersion);
  w.put(config_hash(bundle.config));
  write_config(w, bundle.config);
  w.put<std::uint8_t>(bundle.enhance ? 1 : 0);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(bundle.mode));
  write_network(w, bundle.actor, bundle.actor_opt);
  write_network(w, bundle.critic, bundle.critic_opt);
  out.flush();
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

PolicyBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string() + " is not a checkpoint");
  }
  Reader r(in, path.string());
  if (r.get<std::uint32_t>() != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version in " + path.string());
  }
  const auto hash = r.get<std::uint64_t>();
  PolicyBundle b;
  b.config = read_config(r);
  if (config_hash(b.config) != hash) throw IoError("checkpoint config hash mismatch");
  b.enhance = r.get<std::uint8_t>() != 0;
  const auto mode = r.get<std::uint8_t>();
  if (mode > static_cast<std::uint8_t>(EnhanceMode::Renormalize)) {
    throw IoError("unknown enhancement mode in checkpoint");
  }
  b.mode = static_cast<EnhanceMode>(mode);
  read_network(r, b.actor, b.actor_opt, kActorLayers);
  read_network(r, b.critic, b.critic_opt, kCriticLayers);
  return b;
}

}  // namespace replan
