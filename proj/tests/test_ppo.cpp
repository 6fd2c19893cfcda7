#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "sortpress/ppo.hpp"

using namespace sortpress;

namespace {

RolloutBuffer constant_buffer(int n, double reward) {
  RolloutBuffer b;
  b.rewards = Eigen::VectorXd::Constant(n, reward);
  b.values = Eigen::VectorXd::Zero(n);
  b.next_values = Eigen::VectorXd::Zero(n);
  b.terminated.assign(static_cast<std::size_t>(n), false);
  b.episode_end.assign(static_cast<std::size_t>(n), false);
  return b;
}

}  // namespace

TEST_CASE("GAE examples") {
  SUBCASE("constant reward telescopes") {
    RolloutBuffer b = constant_buffer(3, 1.0);
    compute_gae(b, 1.0, 1.0);
    CHECK(b.advantages[0] == doctest::Approx(3.0));
    CHECK(b.advantages[1] == doctest::Approx(2.0));
    CHECK(b.advantages[2] == doctest::Approx(1.0));
  }
  SUBCASE("zero signal") {
    RolloutBuffer b = constant_buffer(5, 0.0);
    compute_gae(b, 0.99, 0.95);
    CHECK(b.advantages.isZero());
    CHECK(b.returns.isZero());
  }
  SUBCASE("gamma 0 is one-step") {
    RolloutBuffer b = constant_buffer(4, 2.0);
    b.values << 0.5, 1.0, -1.0, 0.0;
    b.next_values << 1.0, -1.0, 0.0, 7.0;
    compute_gae(b, 0.0, 0.95);
    for (int t = 0; t < 4; ++t) CHECK(b.advantages[t] == doctest::Approx(2.0 - b.values[t]));
  }
  SUBCASE("episode end stops the recursion but truncation bootstraps") {
    RolloutBuffer b = constant_buffer(3, 1.0);
    b.next_values << 0.0, 10.0, 0.0;
    b.episode_end[1] = true;
    compute_gae(b, 1.0, 1.0);
    CHECK(b.advantages[1] == doctest::Approx(11.0));
    CHECK(b.advantages[0] == doctest::Approx(12.0));
    CHECK(b.advantages[2] == doctest::Approx(1.0));
    b.terminated[1] = true;
    compute_gae(b, 1.0, 1.0);
    CHECK(b.advantages[1] == doctest::Approx(1.0));
  }
  SUBCASE("matches the explicit discounted sum") {
    Rng rng(3);
    const int n = 20;
    RolloutBuffer b = constant_buffer(n, 0.0);
    for (int t = 0; t < n; ++t) {
      b.rewards[t] = rng.normal(0.0, 1.0);
      b.values[t] = rng.normal(0.0, 1.0);
    }
    for (int t = 0; t + 1 < n; ++t) b.next_values[t] = b.values[t + 1];
    b.next_values[n - 1] = 0.3;
    const double gamma = 0.9, lambda = 0.8;
    compute_gae(b, gamma, lambda);
    for (int t = 0; t < n; ++t) {
      double expected = 0.0, scale = 1.0;
      for (int k = t; k < n; ++k) {
        expected += scale * (b.rewards[k] + gamma * b.next_values[k] - b.values[k]);
        scale *= gamma * lambda;
      }
      CHECK(b.advantages[t] == doctest::Approx(expected).epsilon(1e-12));
      CHECK(b.returns[t] == doctest::Approx(expected + b.values[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("masked_distribution") {
  const Eigen::VectorXd logits = Eigen::VectorXd::Zero(22);
  ActionMask mask = ActionMask::Constant(22, false);
  mask[0] = mask[11] = true;
  const Categorical d = masked_distribution(logits, &mask);
  for (int k = 0; k < 22; ++k) CHECK(d.probs[k] == ((k == 0 || k == 11) ? 0.5 : 0.0));
  CHECK(std::isinf(d.log_probs[5]));

  Rng rng(8);
  for (int i = 0; i < 10'000; ++i) {
    const int a = d.sample(rng);
    CHECK((a == 0 || a == 11));
  }

  Eigen::VectorXd l(3);
  l << 1.0, 2.0, 3.0;
  const ActionMask all = ActionMask::Constant(3, true);
  const Categorical masked = masked_distribution(l, &all);
  const Categorical plain = masked_distribution(l, nullptr);
  const Eigen::VectorXd softmax = l.array().exp() / l.array().exp().sum();
  CHECK((masked.probs - softmax).norm() < 1e-15);
  CHECK((plain.probs - masked.probs).norm() == 0.0);
  CHECK(plain.entropy() == doctest::Approx(-(softmax.array() * softmax.array().log()).sum()));

  const ActionMask none = ActionMask::Constant(3, false);
  CHECK_THROWS_AS(masked_distribution(l, &none), std::invalid_argument);
}

TEST_CASE("ppo_loss gradient matches central finite differences") {
  Rng rng(11);
  const ActorCritic<double> net = testing::toy_network(6, 4, rng);
  for (const bool masked : {false, true}) {
    for (const double ent : {0.0, 0.05}) {
      const PpoBatch<double> batch = testing::toy_batch(net, 5, masked, rng);
      const LossCoefficients coef{0.2, ent, 0.5};
      const testing::GradCheckResult r = testing::gradient_check(net, batch, coef);
      CAPTURE(masked);
      CAPTURE(ent);
      CHECK(r.max_relative_error < 1e-4);
      CHECK(r.parameters == net.parameter_count());
    }
  }
}

TEST_CASE("ratio identity and zero advantages") {
  Rng rng(12);
  const ActorCritic<double> net = testing::toy_network(4, 3, rng);
  PpoBatch<double> batch = testing::toy_batch(net, 10, false, rng);
  const Eigen::MatrixXd logits = net.policy.forward(batch.observations);
  for (int j = 0; j < 10; ++j) {
    batch.old_log_probs[j] = masked_distribution(logits.col(j), nullptr).log_probs(batch.actions[static_cast<std::size_t>(j)]);
  }
  const LossTerms t = ppo_loss<double>(net, batch, LossCoefficients{}, nullptr);
  CHECK(-t.policy == doctest::Approx(batch.advantages.mean()).epsilon(1e-12));
  CHECK(t.approx_kl == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(t.clip_fraction == 0.0);

  batch.advantages.setZero();
  ActorCriticGradient<double> g;
  ppo_loss(net, batch, LossCoefficients{0.2, 0.0, 0.5}, &g);
  CHECK(g.policy.isZero());
  CHECK_FALSE(g.value.isZero());
}

TEST_CASE("Adam and gradient clipping") {
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  CHECK(clip_grad_norm(g, 0.5) == doctest::Approx(5.0));
  CHECK(g.norm() == doctest::Approx(0.5));
  Eigen::VectorXd small(2);
  small << 0.1, 0.1;
  clip_grad_norm(small, 0.5);
  CHECK(small[0] == 0.1);

  // first Adam step moves each coordinate by lr * g / (|g| + eps)
  Adam adam(2, 0.1);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd grad(2);
  grad << 2.0, -0.5;
  adam.step(params, grad);
  CHECK(params[0] == doctest::Approx(-0.1 * 2.0 / (2.0 + 1e-5)));
  CHECK(params[1] == doctest::Approx(0.1 * 0.5 / (0.5 + 1e-5)));

  // minimizes a quadratic
  Adam opt(1, 0.05);
  Eigen::VectorXd x(1);
  x << 3.0;
  for (int i = 0; i < 2000; ++i) opt.step(x, 2.0 * x);
  CHECK(std::abs(x[0]) < 1e-2);
}

TEST_CASE("ppo_update rejects non-finite data") {
  Rng rng(1);
  ActorCritic<double> net = ActorCritic<double>::make(3, 2, {4}, rng);
  Adam adam(net.parameter_count(), 3e-4);
  RolloutBuffer b = constant_buffer(8, 1.0);
  b.observations = Eigen::MatrixXd::Zero(3, 8);
  b.observations(0, 0) = std::numeric_limits<double>::quiet_NaN();
  b.actions.assign(8, 0);
  b.log_probs = Eigen::VectorXd::Constant(8, std::log(0.5));
  compute_gae(b, 0.99, 0.95);
  TrainConfig config;
  config.rollout_horizon = 8;
  config.minibatch_size = 4;
  CHECK_THROWS_AS(ppo_update(net, adam, b, config, rng), TrainingError);
}

TEST_CASE("ppo_update increases the probability of advantaged actions") {
  Rng rng(2);
  ActorCritic<double> net = ActorCritic<double>::make(2, 2, {8}, rng);
  Adam adam(net.parameter_count(), 1e-2);
  const int n = 64;
  RolloutBuffer b = constant_buffer(n, 0.0);
  b.observations = Eigen::MatrixXd::Zero(2, n);
  b.log_probs.resize(n);
  for (int t = 0; t < n; ++t) {
    b.observations(0, t) = 1.0;
    b.actions.push_back(t % 2);
    b.rewards[t] = (t % 2 == 1) ? 1.0 : -1.0;
    b.log_probs[t] = std::log(0.5);
    b.episode_end[static_cast<std::size_t>(t)] = true;
  }
  compute_gae(b, 0.99, 0.95);
  TrainConfig config;
  config.rollout_horizon = n;
  config.minibatch_size = 16;
  config.epochs = 4;
  const UpdateStats stats = ppo_update(net, adam, b, config, rng);
  CHECK(std::isfinite(stats.policy_loss));
  const Eigen::VectorXd logits = net.policy.forward(b.observations.col(0));
  CHECK(logits[1] > logits[0]);
}
