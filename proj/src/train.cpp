#include "sortpress/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace sortpress {

TrainResult train_agent(AgentEnvironment& env, const TrainConfig& config, const UpdateCallback& on_update) {
  config.validate();
  const AgentSpec spec = env.spec();
  Rng rng(config.seed);
  ActorCritic<double> net = ActorCritic<double>::make(spec.obs_len, spec.n_actions, kHiddenLayers, rng);
  Adam optimizer(net.parameter_count(), config.learning_rate);

  TrainResult result;
  const int horizon = config.rollout_horizon;
  const auto updates = static_cast<int>((config.total_timesteps + horizon - 1) / horizon);

  std::uint64_t episode = 0;
  auto current = env.reset(training_episode_seed(config.seed, episode++));
  double episode_reward = 0.0;
  std::int64_t timesteps = 0;

  const auto value_of = [&net](const Eigen::VectorXd& obs) { return net.value.forward(obs)(0, 0); };

  for (int u = 0; u < updates; ++u) {
    RolloutBuffer buf;
    buf.observations.resize(spec.obs_len, horizon);
    buf.actions.resize(static_cast<std::size_t>(horizon));
    buf.log_probs.resize(horizon);
    buf.values.resize(horizon);
    buf.rewards.resize(horizon);
    buf.next_values.resize(horizon);
    buf.terminated.assign(static_cast<std::size_t>(horizon), false);
    buf.episode_end.assign(static_cast<std::size_t>(horizon), false);
    if (config.masked) buf.masks.resize(spec.n_actions, horizon);

    UpdateStats stats;
    double finished_reward = 0.0;

    for (int t = 0; t < horizon; ++t) {
      const Eigen::VectorXd logits = net.policy.forward(current.observation);
      const double value = value_of(current.observation);
      if (!logits.allFinite() || !std::isfinite(value)) {
        throw TrainingError("non-finite network output during rollout at update " + std::to_string(u));
      }
      const ActionMask* mask = config.masked ? &current.mask : nullptr;
      const Categorical dist = masked_distribution(logits, mask);
      if (config.masked) {
        for (Eigen::Index k = 0; k < dist.probs.size(); ++k) {
          if (!current.mask[k]) result.max_invalid_probability = std::max(result.max_invalid_probability, dist.probs[k]);
        }
        buf.masks.col(t) = current.mask;
      }
      const int action = dist.sample(rng);

      buf.observations.col(t) = current.observation;
      buf.actions[static_cast<std::size_t>(t)] = action;
      buf.log_probs[t] = dist.log_probs[action];
      buf.values[t] = value;

      AgentEnvironment::StepResult step = env.step(action);
      ++timesteps;
      if (step.transition.outcome.ignored()) ++stats.ignored_actions;
      buf.rewards[t] = step.reward;
      buf.terminated[static_cast<std::size_t>(t)] = step.terminated;
      episode_reward += step.reward;

      if (step.terminated || step.truncated) {
        buf.episode_end[static_cast<std::size_t>(t)] = true;
        buf.next_values[t] = step.terminated ? 0.0 : value_of(step.observation);
        finished_reward += episode_reward;
        ++stats.episodes;
        episode_reward = 0.0;
        current = env.reset(training_episode_seed(config.seed, episode++));
      } else {
        current.observation = std::move(step.observation);
        current.mask = std::move(step.mask);
        if (t + 1 == horizon) buf.next_values[t] = value_of(current.observation);
      }
    }
    for (int t = 0; t + 1 < horizon; ++t) {
      if (!buf.episode_end[static_cast<std::size_t>(t)]) buf.next_values[t] = buf.values[t + 1];
    }

    compute_gae(buf, config.gamma, config.gae_lambda);
    if (!buf.advantages.allFinite()) throw TrainingError("non-finite GAE advantages at update " + std::to_string(u));

    const std::int64_t ignored = stats.ignored_actions;
    const int episodes = stats.episodes;
    stats = ppo_update(net, optimizer, buf, config, rng);
    stats.update = u;
    stats.timesteps = timesteps;
    stats.episodes = episodes;
    stats.ignored_actions = ignored;
    stats.mean_episode_reward =
        episodes > 0 ? finished_reward / episodes : std::numeric_limits<double>::quiet_NaN();
    result.ignored_actions += ignored;
    result.curve.push_back(stats);
    if (on_update) on_update(stats);
  }

  round_to_float(net);
  result.artifact = PolicyArtifact{spec.kind, config.masked, config.seed, timesteps, std::move(net)};
  return result;
}

SortingController greedy_sorting_controller(const PolicyArtifact& sorter) {
  return [sorter](const EnvState& state, const EnvConfig& config) {
    return sorter.greedy_action(sorting_observation(state, config));
  };
}

TrainResult train_sorting(const EnvConfig& env_config, const TrainConfig& config, const UpdateCallback& on_update) {
  AgentEnvironment env(AgentKind::Sorting, env_config);
  return train_agent(env, config, on_update);
}

TrainResult train_pressing(const EnvConfig& env_config, const TrainConfig& config,
                           const PolicyArtifact& frozen_sorting, const UpdateCallback& on_update) {
  if (frozen_sorting.kind != AgentKind::Sorting) {
    throw ConfigError("train_pressing needs a sorting checkpoint, got " + std::string(to_string(frozen_sorting.kind)));
  }
  AgentEnvironment env(AgentKind::Pressing, env_config, greedy_sorting_controller(frozen_sorting));
  return train_agent(env, config, on_update);
}

TrainResult train_monolithic(const EnvConfig& env_config, const TrainConfig& config,
                             const UpdateCallback& on_update) {
  AgentEnvironment env(AgentKind::Monolithic, env_config);
  return train_agent(env, config, on_update);
}

std::string curve_csv(const std::vector<UpdateStats>& curve) {
  std::string out =
      "update,timesteps,episodes,mean_episode_reward,policy_loss,value_loss,entropy,approx_kl,clip_fraction,"
      "ignored_actions\n";
  char line[512];
  for (const auto& s : curve) {
    std::snprintf(line, sizeof(line), "%d,%lld,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld\n", s.update,
                  static_cast<long long>(s.timesteps), s.episodes, s.mean_episode_reward, s.policy_loss,
                  s.value_loss, s.entropy, s.approx_kl, s.clip_fraction, static_cast<long long>(s.ignored_actions));
    out += line;
  }
  return out;
}

void write_curve_csv(const std::vector<UpdateStats>& curve, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training curve '" + path.string() + "'");
  out << curve_csv(curve);
}

}  // namespace sortpress
