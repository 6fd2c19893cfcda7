#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "sortpress/checkpoint.hpp"
#include "sortpress/config.hpp"
#include "sortpress/environment.hpp"
#include "sortpress/ppo.hpp"

namespace sortpress {

struct TrainResult {
  PolicyArtifact artifact;
  std::vector<UpdateStats> curve;
  std::int64_t ignored_actions = 0;
  // Largest probability any masked-out action received at sampling time (0 when masked).
  double max_invalid_probability = 0.0;
};

inline const std::vector<int> kHiddenLayers{32, 32};

/// Seed of the k-th training episode of a run seeded with `seed`.
inline std::uint64_t training_episode_seed(std::uint64_t seed, std::uint64_t episode) {
  return splitmix64(seed + episode);
}

/// Called after each update; for logging.
using UpdateCallback = std::function<void(const UpdateStats&)>;

/// PPO on one AgentEnvironment for ceil(total_timesteps / rollout_horizon) rollouts.
TrainResult train_agent(AgentEnvironment& env, const TrainConfig& config, const UpdateCallback& on_update = {});

/// Sorting agent with the rule-based presser downstream.
TrainResult train_sorting(const EnvConfig& env_config, const TrainConfig& config,
                          const UpdateCallback& on_update = {});

/// Pressing agent with the frozen sorter's greedy action upstream.
/// Throws ConfigError if `frozen_sorting` is not a sorting checkpoint.
TrainResult train_pressing(const EnvConfig& env_config, const TrainConfig& config,
                           const PolicyArtifact& frozen_sorting, const UpdateCallback& on_update = {});

/// One agent over the flattened 22-action space on r_sort + r_press.
TrainResult train_monolithic(const EnvConfig& env_config, const TrainConfig& config,
                             const UpdateCallback& on_update = {});

SortingController greedy_sorting_controller(const PolicyArtifact& sorter);

/// update,timesteps,episodes,mean_episode_reward,policy_loss,value_loss,entropy,approx_kl,clip_fraction,ignored_actions
void write_curve_csv(const std::vector<UpdateStats>& curve, const std::filesystem::path& path);
std::string curve_csv(const std::vector<UpdateStats>& curve);

}  // namespace sortpress
