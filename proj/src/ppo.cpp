#include "mapnav/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "mapnav/errors.hpp"
#include "mapnav/parallel.hpp"
#include "mapnav/world.hpp"

namespace mapnav {

void PpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("ppo.clip_eps must be in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must be in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("ppo.lambda must be in (0, 1]");
  if (epochs_per_update < 1) throw ConfigError("ppo.epochs_per_update must be >= 1");
  if (minibatch_size < 1) throw ConfigError("ppo.minibatch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("ppo.learning_rate must be > 0");
  if (!(value_coef >= 0.0)) throw ConfigError("ppo.value_coef must be >= 0");
  if (!(entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef must be >= 0");
  if (!(max_grad_norm >= 0.0)) throw ConfigError("ppo.max_grad_norm must be >= 0");
  if (stage0_iters < 0 || stage1_iters < 0 || stage2_iters < 0)
    throw ConfigError("ppo stage iteration counts must be >= 0");
  if (agents_per_env < 1) throw ConfigError("ppo.agents_per_env must be >= 1");
  if (envs_per_iter < 1) throw ConfigError("ppo.envs_per_iter must be >= 1");
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const bool> terminals, double gamma, double lambda, double last_value) {
  const std::size_t n = rewards.size();
  if (values.size() != n || terminals.size() != n) throw InputError("compute_gae: misaligned sequences");
  GaeResult out{std::vector<double>(n), std::vector<double>(n)};
  double next_value = last_value;
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double live = terminals[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + values[i];
    next_value = values[i];
  }
  return out;
}

// ---------------------------------------------------------------- RunningStat

std::vector<double> RunningStat::variance() const {
  std::vector<double> var(mean_.size(), 0.0);
  if (count_ > 0.0)
    for (std::size_t i = 0; i < var.size(); ++i) var[i] = std::max(0.0, m2_[i] / count_);
  return var;
}

void RunningStat::update(std::span<const double> x) {
  if (x.size() != mean_.size()) throw InputError("RunningStat: dimension mismatch");
  count_ += 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean_[i];
    mean_[i] += d / count_;
    m2_[i] += d * (x[i] - mean_[i]);
  }
}

void RunningStat::merge(const RunningStat& o) {
  if (o.count_ == 0.0) return;
  if (o.dims() != dims()) throw InputError("RunningStat: dimension mismatch");
  const double n = count_ + o.count_;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double d = o.mean_[i] - mean_[i];
    mean_[i] += d * o.count_ / n;
    m2_[i] += o.m2_[i] + d * d * count_ * o.count_ / n;
  }
  count_ = n;
}

void RunningStat::normalize(std::span<const double> x, std::span<double> out) const {
  if (x.size() != mean_.size() || out.size() != x.size()) throw InputError("RunningStat: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = x[i];
    if (count_ > 0.0) {
      const double sd = std::sqrt(std::max(0.0, m2_[i] / count_));
      z = (x[i] - mean_[i]) / std::max(sd, 1e-8);
    }
    out[i] = std::clamp(z, -kNormClip, kNormClip);
  }
}

void RunningStat::restore(double count, std::vector<double> mean, std::vector<double> m2) {
  if (mean.size() != m2.size() || !(count >= 0.0)) throw InputError("RunningStat: inconsistent state");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

void ObsNormalizer::update(const Observation& obs) {
  scan.update(obs.scan);
  goal.update(obs.goal);
  velocity.update(obs.velocity);
}

void ObsNormalizer::merge(const ObsNormalizer& other) {
  scan.merge(other.scan);
  goal.merge(other.goal);
  velocity.merge(other.velocity);
}

PreparedObs prepare_observation(const Observation& obs, const ObsNormalizer& norm) {
  PreparedObs p;
  p.scan.resize(obs.scan.size());
  norm.scan.normalize(obs.scan, p.scan);
  norm.goal.normalize(obs.goal, p.goal);
  norm.velocity.normalize(obs.velocity, p.velocity);
  p.local_map = obs.local_map;
  p.global_map = obs.global_map;
  return p;
}

NetInput make_net_input(const PreparedObs& obs, const NetConfig& net, std::vector<double>& map_buffer) {
  const std::size_t plane = static_cast<std::size_t>(net.map_cells.rows) * net.map_cells.cols;
  map_buffer.resize(net.map_size());
  densify_into(obs.local_map, std::span<double>(map_buffer.data(), plane));
  if (net.map_input == MapInput::LocalAndGlobal)
    densify_into(obs.global_map, std::span<double>(map_buffer.data() + plane, plane));
  return {obs.scan, obs.goal, obs.velocity, map_buffer};
}

// ---------------------------------------------------------------- buffer

void RolloutBuffer::append(RolloutBuffer&& other) {
  transitions.insert(transitions.end(), std::make_move_iterator(other.transitions.begin()),
                     std::make_move_iterator(other.transitions.end()));
  other.transitions.clear();
}

void RolloutBuffer::compute_advantages(double gamma, double lambda) {
  const std::size_t n = transitions.size();
  std::vector<double> r(n), v(n);
  // std::vector<bool> has no contiguous storage.
  std::unique_ptr<bool[]> d(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = transitions[i].reward;
    v[i] = transitions[i].value;
    d[i] = transitions[i].terminal;
  }
  const GaeResult g = compute_gae(r, v, std::span<const bool>(d.get(), n), gamma, lambda);
  for (std::size_t i = 0; i < n; ++i) {
    transitions[i].advantage = g.advantages[i];
    transitions[i].ret = g.returns[i];
  }
}

void RolloutBuffer::normalize_advantages() {
  if (transitions.empty()) return;
  double mean = 0.0;
  for (const Transition& t : transitions) mean += t.advantage;
  mean /= static_cast<double>(transitions.size());
  double var = 0.0;
  for (const Transition& t : transitions) var += (t.advantage - mean) * (t.advantage - mean);
  var /= static_cast<double>(transitions.size());
  const double scale = 1.0 / (std::sqrt(var) + 1e-8);
  for (Transition& t : transitions) t.advantage = (t.advantage - mean) * scale;
}

// ---------------------------------------------------------------- Adam

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (grads.size() != params.size()) throw InputError("Adam: gradient size mismatch");
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

// ---------------------------------------------------------------- loss

namespace {

constexpr std::size_t kGradChunks = 4;

struct ChunkResult {
  PpoLoss sums;
  std::vector<double> grads;
};

}  // namespace

PpoLoss ppo_loss(const PolicyNetwork& net, const RolloutBuffer& buffer, std::span<const std::size_t> indices,
                 const PpoConfig& config, std::span<double> grads, int threads) {
  if (indices.empty()) throw InputError("ppo_loss: empty minibatch");
  const bool want_grad = !grads.empty();
  if (want_grad && grads.size() != net.parameter_count()) throw InputError("ppo_loss: gradient size mismatch");

  const double inv_n = 1.0 / static_cast<double>(indices.size());
  const double eps = config.clip_eps;
  const std::size_t chunks = std::min(kGradChunks, indices.size());
  const std::size_t per = (indices.size() + chunks - 1) / chunks;
  std::vector<ChunkResult> results(chunks);

  parallel_for(chunks, threads, [&](std::size_t c) {
    ChunkResult& res = results[c];
    if (want_grad) res.grads.assign(net.parameter_count(), 0.0);
    ForwardCache cache;
    std::vector<double> map_buf;
    for (std::size_t k = c * per; k < std::min(indices.size(), (c + 1) * per); ++k) {
      const Transition& tr = buffer.transitions.at(indices[k]);
      const NetOutput out = net.forward(make_net_input(tr.obs, net.config(), map_buf), cache, buffer.map_ablated);

      const double logp = action_log_prob(tr.pre_action, out.mean, out.log_std);
      const double log_ratio = logp - tr.log_prob;
      const double ratio = std::exp(log_ratio);
      const double a = tr.advantage;
      const double unclipped = ratio * a;
      const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * a;
      const double surrogate = std::min(unclipped, clipped);
      const double verr = out.value - tr.ret;
      const double entropy = gaussian_entropy(out.log_std);

      res.sums.policy += -surrogate * inv_n;
      res.sums.value += verr * verr * inv_n;
      res.sums.entropy += entropy * inv_n;
      res.sums.clip_frac += (std::abs(ratio - 1.0) > eps ? 1.0 : 0.0) * inv_n;
      res.sums.approx_kl += -log_ratio * inv_n;

      if (!want_grad) continue;
      OutputGrad g;
      // The min picks the unclipped branch exactly when it is the smaller one.
      const double d_logp = unclipped <= clipped ? -unclipped * inv_n : 0.0;
      const LogProbGrad lg = log_prob_grad(tr.pre_action, out.mean, out.log_std);
      for (int i = 0; i < 2; ++i) {
        g.mean[i] = d_logp * lg.mean[i];
        g.log_std[i] = d_logp * lg.log_std[i] - config.entropy_coef * inv_n;
      }
      g.value = config.value_coef * 2.0 * verr * inv_n;
      net.backward(cache, g, res.grads);
    }
  });

  PpoLoss loss;
  if (want_grad) std::fill(grads.begin(), grads.end(), 0.0);
  for (const ChunkResult& r : results) {
    loss.policy += r.sums.policy;
    loss.value += r.sums.value;
    loss.entropy += r.sums.entropy;
    loss.clip_frac += r.sums.clip_frac;
    loss.approx_kl += r.sums.approx_kl;
    if (want_grad)
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += r.grads[i];
  }
  loss.total = loss.policy + config.value_coef * loss.value - config.entropy_coef * loss.entropy;
  return loss;
}

UpdateStats ppo_update(PolicyNetwork& net, RolloutBuffer& buffer, const PpoConfig& config, Adam& adam, Rng& rng,
                       int threads) {
  if (buffer.empty()) throw InputError("ppo_update: empty rollout buffer");
  config.validate();
  buffer.compute_advantages(config.gamma, config.lambda);
  buffer.normalize_advantages();

  const std::vector<double> params_backup = net.params();
  const Adam adam_backup = adam;
  adam.lr = config.learning_rate;

  UpdateStats stats;
  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grads(net.parameter_count(), 0.0);
  const std::size_t mb = static_cast<std::size_t>(config.minibatch_size);

  for (int epoch = 0; epoch < config.epochs_per_update && !stats.aborted; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t len = std::min(mb, order.size() - start);
      const PpoLoss loss =
          ppo_loss(net, buffer, std::span<const std::size_t>(order.data() + start, len), config, grads, threads);

      double sq = 0.0;
      for (double g : grads) sq += g * g;
      if (!std::isfinite(loss.total) || !std::isfinite(sq)) {
        stats.aborted = true;
        break;
      }
      if (config.max_grad_norm > 0.0 && std::sqrt(sq) > config.max_grad_norm) {
        const double s = config.max_grad_norm / std::sqrt(sq);
        for (double& g : grads) g *= s;
      }
      adam.step(net.params(), grads);

      stats.loss_pi += loss.policy;
      stats.loss_v += loss.value;
      stats.entropy += loss.entropy;
      stats.clip_frac += loss.clip_frac;
      stats.approx_kl += loss.approx_kl;
      ++stats.minibatches;
    }
  }

  if (stats.aborted) {
    net.params() = params_backup;
    adam = adam_backup;
    stats = UpdateStats{};
    stats.aborted = true;
  } else if (stats.minibatches > 0) {
    const double k = 1.0 / stats.minibatches;
    stats.loss_pi *= k;
    stats.loss_v *= k;
    stats.entropy *= k;
    stats.clip_frac *= k;
    stats.approx_kl *= k;
  }
  buffer.clear();
  return stats;
}

}  // namespace mapnav
