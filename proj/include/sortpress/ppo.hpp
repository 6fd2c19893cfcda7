#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sortpress/config.hpp"
#include "sortpress/mlp.hpp"
#include "sortpress/rng.hpp"
#include "sortpress/types.hpp"

namespace sortpress {

/// Raised when a loss or network output stops being finite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Categorical distribution over logits with masked-out actions at probability 0.
struct Categorical {
  Eigen::VectorXd probs;
  Eigen::VectorXd log_probs;  // -inf for masked-out actions

  int sample(Rng& rng) const;
  int argmax() const;
  double entropy() const;
};

/// Softmax over mask-true logits; mask-false logits are treated as -inf.
/// A null mask means every action is valid. Throws std::invalid_argument on an all-false mask.
Categorical masked_distribution(const Eigen::VectorXd& logits, const ActionMask* mask);

/// On-policy samples of one rollout. Column t of `observations` is the state at step t.
struct RolloutBuffer {
  Eigen::MatrixXd observations;
  std::vector<int> actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;
  // V(s_{t+1}) used for bootstrapping; at a truncation this is the value of the final state.
  Eigen::VectorXd next_values;
  std::vector<bool> terminated;   // no bootstrap through a true terminal
  std::vector<bool> episode_end;  // GAE recursion stops here
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> masks;  // n_actions x horizon, empty when unmasked
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  Eigen::Index size() const { return rewards.size(); }
};

/// delta_t = r_t + gamma * V(s_{t+1}) * (1 - terminated_t) - V(s_t);
/// A_t = delta_t + gamma * lambda * (1 - episode_end_t) * A_{t+1}; returns = A + V.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

struct LossCoefficients {
  double clip_range = 0.2;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
};

template <typename Scalar>
struct PpoBatch {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix observations;  // obs_len x batch
  std::vector<int> actions;
  Vector old_log_probs;
  Vector advantages;
  Vector returns;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> masks;  // empty when unmasked
};

struct LossTerms {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;  // mean entropy (the loss term is its negation)
  double total = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

template <typename Scalar>
struct ActorCriticGradient {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> policy;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> value;
};

/// Clipped-surrogate loss
///   L = -mean(min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)) - c_e * mean(H) + c_v * mean((R - V)^2)
/// with rho = exp(logp_new - logp_old). Fills `grad` with dL/dparams when non-null.
template <typename Scalar>
LossTerms ppo_loss(const ActorCritic<Scalar>& net, const PpoBatch<Scalar>& batch, const LossCoefficients& coef,
                   ActorCriticGradient<Scalar>* grad) {
  using Matrix = typename PpoBatch<Scalar>::Matrix;
  using std::exp;
  using std::log;
  const Eigen::Index n = batch.observations.cols();
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  const Scalar eps = static_cast<Scalar>(coef.clip_range);
  const bool masked = batch.masks.size() > 0;

  typename Mlp<Scalar>::Tape pi_tape;
  typename Mlp<Scalar>::Tape vf_tape;
  const Matrix logits = net.policy.forward(batch.observations, pi_tape);
  const Matrix values = net.value.forward(batch.observations, vf_tape);
  Matrix dlogits = Matrix::Zero(logits.rows(), n);
  Matrix dvalues(1, n);

  LossTerms terms;
  Scalar policy_loss(0), entropy_sum(0), value_loss(0), kl(0);
  Eigen::Index clipped = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto valid = [&](Eigen::Index k) { return !masked || batch.masks(k, j); };
    Scalar top = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
      if (valid(k)) top = std::max(top, logits(k, j));
    }
    Scalar norm(0);
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
      if (valid(k)) norm += exp(logits(k, j) - top);
    }
    const Scalar log_norm = top + log(norm);
    Matrix logp = Matrix::Zero(logits.rows(), 1);
    Matrix p = Matrix::Zero(logits.rows(), 1);
    Scalar entropy(0);
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
      if (!valid(k)) continue;
      logp(k) = logits(k, j) - log_norm;
      p(k) = exp(logp(k));
      entropy -= p(k) * logp(k);
    }
    const int a = batch.actions[static_cast<std::size_t>(j)];
    const Scalar log_ratio = logp(a) - batch.old_log_probs(j);
    const Scalar ratio = exp(log_ratio);
    const Scalar adv = batch.advantages(j);
    const Scalar surr1 = ratio * adv;
    const Scalar surr2 = std::clamp(ratio, Scalar(1) - eps, Scalar(1) + eps) * adv;
    const bool unclipped_branch = surr1 <= surr2;
    policy_loss -= std::min(surr1, surr2);
    entropy_sum += entropy;
    kl += (ratio - Scalar(1)) - log_ratio;
    if (std::abs(ratio - Scalar(1)) > eps) ++clipped;

    const Scalar dlogp_a = unclipped_branch ? -surr1 * inv_n : Scalar(0);
    const Scalar ent_scale = -static_cast<Scalar>(coef.ent_coef) * inv_n;  // d(-c_e * mean H)/dH_j
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
      if (!valid(k)) continue;
      const Scalar onehot = (k == a) ? Scalar(1) : Scalar(0);
      const Scalar dentropy = -p(k) * (logp(k) + entropy);
      dlogits(k, j) = dlogp_a * (onehot - p(k)) + ent_scale * dentropy;
    }

    const Scalar diff = values(0, j) - batch.returns(j);
    value_loss += diff * diff;
    dvalues(0, j) = static_cast<Scalar>(coef.vf_coef) * Scalar(2) * diff * inv_n;
  }

  terms.policy = static_cast<double>(policy_loss * inv_n);
  terms.entropy = static_cast<double>(entropy_sum * inv_n);
  terms.value = static_cast<double>(value_loss * inv_n);
  terms.total = terms.policy - coef.ent_coef * terms.entropy + coef.vf_coef * terms.value;
  terms.approx_kl = static_cast<double>(kl * inv_n);
  terms.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  if (grad != nullptr) {
    grad->policy = net.policy.backward(pi_tape, dlogits);
    grad->value = net.value.backward(vf_tape, dvalues);
  }
  return terms;
}

/// Adam with bias correction over one flat parameter vector.
class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-5)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon),
        m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  std::int64_t t_ = 0;
};

/// Scales `grad` so its L2 norm is at most max_norm. Returns the norm before clipping.
double clip_grad_norm(Eigen::Ref<Eigen::VectorXd> grad, double max_norm);

struct UpdateStats {
  int update = 0;
  std::int64_t timesteps = 0;
  double mean_episode_reward = std::numeric_limits<double>::quiet_NaN();
  int episodes = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  std::int64_t ignored_actions = 0;
};

/// Runs `epochs` passes of shuffled minibatch updates over a completed buffer.
/// Advantages are normalized once over the whole buffer. Throws TrainingError on a non-finite loss.
UpdateStats ppo_update(ActorCritic<double>& net, Adam& optimizer, const RolloutBuffer& buffer,
                       const TrainConfig& config, Rng& rng);

}  // namespace sortpress
