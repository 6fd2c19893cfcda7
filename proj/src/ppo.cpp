#include "sortpress/ppo.hpp"

#include <algorithm>
#include <numeric>

namespace sortpress {

int Categorical::sample(Rng& rng) const {
  const double u = rng.uniform();
  double cumulative = 0.0;
  int last_valid = -1;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    last_valid = static_cast<int>(k);
    cumulative += probs[k];
    if (u < cumulative) return last_valid;
  }
  return last_valid;  // u landed in the rounding gap above the cumulative sum
}

int Categorical::argmax() const {
  Eigen::Index best = 0;
  log_probs.maxCoeff(&best);
  return static_cast<int>(best);
}

double Categorical::entropy() const {
  double h = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (probs[k] > 0.0) h -= probs[k] * log_probs[k];
  }
  return h;
}

Categorical masked_distribution(const Eigen::VectorXd& logits, const ActionMask* mask) {
  if (mask != nullptr && mask->size() != logits.size()) {
    throw std::invalid_argument("mask size " + std::to_string(mask->size()) + " != logits size " +
                                std::to_string(logits.size()));
  }
  if (mask != nullptr && !mask->any()) throw std::invalid_argument("action mask admits no action");
  const auto valid = [&](Eigen::Index k) { return mask == nullptr || (*mask)[k]; };
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (valid(k)) top = std::max(top, logits[k]);
  }
  double norm = 0.0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (valid(k)) norm += std::exp(logits[k] - top);
  }
  const double log_norm = top + std::log(norm);
  Categorical d;
  d.probs = Eigen::VectorXd::Zero(logits.size());
  d.log_probs = Eigen::VectorXd::Constant(logits.size(), -std::numeric_limits<double>::infinity());
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (!valid(k)) continue;
    d.log_probs[k] = logits[k] - log_norm;
    d.probs[k] = std::exp(d.log_probs[k]);
  }
  return d;
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda) {
  const Eigen::Index n = buffer.size();
  buffer.advantages.resize(n);
  double next_advantage = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const auto i = static_cast<std::size_t>(t);
    const double bootstrap = buffer.terminated[i] ? 0.0 : buffer.next_values[t];
    const double delta = buffer.rewards[t] + gamma * bootstrap - buffer.values[t];
    const double carry = buffer.episode_end[i] ? 0.0 : next_advantage;
    buffer.advantages[t] = delta + gamma * lambda * carry;
    next_advantage = buffer.advantages[t];
  }
  buffer.returns = buffer.advantages + buffer.values;
}

void Adam::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

double clip_grad_norm(Eigen::Ref<Eigen::VectorXd> grad, double max_norm) {
  const double norm = grad.norm();
  const double coef = max_norm / (norm + 1e-6);
  if (coef < 1.0) grad *= coef;
  return norm;
}

UpdateStats ppo_update(ActorCritic<double>& net, Adam& optimizer, const RolloutBuffer& buffer,
                       const TrainConfig& config, Rng& rng) {
  const Eigen::Index n = buffer.size();
  const double mean = buffer.advantages.mean();
  const double var = (buffer.advantages.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  const Eigen::VectorXd advantages = (buffer.advantages.array() - mean) / (std::sqrt(var) + 1e-8);

  const LossCoefficients coef{config.clip_range, config.ent_coef, config.vf_coef};
  const bool masked = buffer.masks.size() > 0;
  const Eigen::Index n_policy = net.policy.parameter_count();
  Eigen::VectorXd params(net.parameter_count());
  Eigen::VectorXd grad(net.parameter_count());

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  UpdateStats stats;
  int batches = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<Eigen::Index>(order));
    for (Eigen::Index start = 0; start < n; start += config.minibatch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(config.minibatch_size, n - start);
      PpoBatch<double> batch;
      batch.observations.resize(buffer.observations.rows(), size);
      batch.actions.resize(static_cast<std::size_t>(size));
      batch.old_log_probs.resize(size);
      batch.advantages.resize(size);
      batch.returns.resize(size);
      if (masked) batch.masks.resize(buffer.masks.rows(), size);
      for (Eigen::Index j = 0; j < size; ++j) {
        const Eigen::Index t = order[static_cast<std::size_t>(start + j)];
        batch.observations.col(j) = buffer.observations.col(t);
        batch.actions[static_cast<std::size_t>(j)] = buffer.actions[static_cast<std::size_t>(t)];
        batch.old_log_probs[j] = buffer.log_probs[t];
        batch.advantages[j] = advantages[t];
        batch.returns[j] = buffer.returns[t];
        if (masked) batch.masks.col(j) = buffer.masks.col(t);
      }

      ActorCriticGradient<double> g;
      const LossTerms terms = ppo_loss(net, batch, coef, &g);
      if (!std::isfinite(terms.total) || !g.policy.allFinite() || !g.value.allFinite()) {
        throw TrainingError("non-finite PPO loss at epoch " + std::to_string(epoch) + ", minibatch " +
                            std::to_string(start / config.minibatch_size) + ": policy=" + std::to_string(terms.policy) +
                            " value=" + std::to_string(terms.value) + " entropy=" + std::to_string(terms.entropy));
      }
      grad << g.policy, g.value;
      clip_grad_norm(grad, config.max_grad_norm);
      params << net.policy.parameters(), net.value.parameters();
      optimizer.step(params, grad);
      net.policy.parameters() = params.head(n_policy);
      net.value.parameters() = params.tail(params.size() - n_policy);

      stats.policy_loss += terms.policy;
      stats.value_loss += terms.value;
      stats.entropy += terms.entropy;
      stats.approx_kl += terms.approx_kl;
      stats.clip_fraction += terms.clip_fraction;
      ++batches;
    }
  }
  if (!net.policy.parameters().allFinite() || !net.value.parameters().allFinite()) {
    throw TrainingError("network parameters became non-finite during the update");
  }
  const double inv = 1.0 / std::max(batches, 1);
  stats.policy_loss *= inv;
  stats.value_loss *= inv;
  stats.entropy *= inv;
  stats.approx_kl *= inv;
  stats.clip_fraction *= inv;
  return stats;
}

}  // namespace sortpress
