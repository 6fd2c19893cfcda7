#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sortpress/types.hpp"

namespace sortpress {

/// Invalid configuration value or unknown key. The message names the key or bound.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RewardWeights {
  double alpha = 10.0;      // tanh input scale of the sorting reward
  double fill_weight = 0.5;  // state-based pressing component
  double bale_bonus = 0.25;  // per full bale in one press action
};

struct EnvConfig {
  int belt_delay_steps = 3;
  double belt_capacity = 30.0;
  double container_capacity = 40.0;
  double bale_size = 10.0;
  std::array<double, kNumContainers> purity_thresholds{0.85, 0.85, 0.85, 0.85, 0.85};
  // accuracy_table[mode] = {group A, group B}
  std::array<Accuracies, kNumModes> accuracy_table{Accuracies{0.90, 0.70}, Accuracies{0.70, 0.90}};
  double accuracy_noise_sigma = 0.02;
  std::array<double, 2> input_volume_range{2.0, 6.0};
  double press_time_base = 5.0;
  double press_time_per_bale = 5.0;
  int episode_length = 200;
  RewardWeights rewards;

  /// Throws ConfigError naming the first violated bound.
  void validate() const;
};

struct TrainConfig {
  std::int64_t total_timesteps = 100'000;
  int rollout_horizon = 2048;
  int minibatch_size = 64;
  int epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_range = 0.2;
  double learning_rate = 3e-4;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  std::uint64_t seed = 42;
  bool masked = false;

  void validate() const;
};

struct BenchConfig {
  std::vector<std::uint64_t> eval_seeds{1000, 1001, 1002, 1003, 1004, 1005, 1006, 1007, 1008, 1009};
  double rule_min_fill = 0.0;

  void validate() const;
};

/// Everything a run is driven by: one flat key space over all three parts.
struct Settings {
  EnvConfig env;
  TrainConfig train;
  BenchConfig bench;

  void validate() const {
    env.validate();
    train.validate();
    bench.validate();
  }
};

/// Sets one key from its textual value. Unknown keys and unparsable values throw.
void apply_setting(Settings& settings, const std::string& key, const std::string& value);

bool is_known_key(const std::string& key);

/// Parses `key = value` lines; `#` starts a comment. Does not validate.
void apply_settings_text(Settings& settings, const std::string& text, const std::string& origin = "<text>");

Settings load_settings(const std::filesystem::path& path);

/// Resolved settings as ordered key/value pairs that round-trip through apply_setting.
std::vector<std::pair<std::string, std::string>> to_key_values(const Settings& settings);

/// Same, restricted to the environment keys.
std::vector<std::pair<std::string, std::string>> to_key_values(const EnvConfig& config);

std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& kv);

}  // namespace sortpress
