#pragma once

#include <cstdint>
#include <functional>
#include <string_view>

#include <Eigen/Dense>

#include "sortpress/config.hpp"
#include "sortpress/sim.hpp"
#include "sortpress/spaces.hpp"

namespace sortpress {

inline constexpr std::string_view kVersion = "1.0.0";

struct StepOutputs {
  Transition transition;
  Eigen::VectorXd observation;  // monolithic layout; the sorting and pressing views are its head and tail
  ActionMask pressing_mask;
  ActionMask monolithic_mask;
};

/// Owns a config and one episode's state. Not thread-safe; use one instance per thread.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  void reset(std::uint64_t seed);
  StepOutputs step(const PlantAction& action);

  bool finished() const { return state_.step >= config_.episode_length; }
  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  Eigen::VectorXd observation(AgentKind kind) const { return sortpress::observation(kind, state_, config_); }
  ActionMask mask(AgentKind kind) const { return action_mask(kind, state_); }

 private:
  EnvConfig config_;
  EnvState state_;
  std::uint64_t seed_ = 0;
};

using SortingController = std::function<int(const EnvState&, const EnvConfig&)>;
using PressingController = std::function<PressingAction(const EnvState&, const EnvConfig&)>;

SortingController rule_sorting_controller();
PressingController rule_pressing_controller(double min_fill = 0.0);

/// Single-agent episodic view of the plant. The sub-task the agent does not
/// control is driven by a fixed controller (rule-based unless given).
///
/// Reward: r_sort for Sorting, r_press for Pressing, r_sort + r_press for Monolithic.
class AgentEnvironment {
 public:
  struct ResetResult {
    Eigen::VectorXd observation;
    ActionMask mask;
  };

  struct StepResult {
    Eigen::VectorXd observation;
    double reward = 0.0;
    bool terminated = false;  // the plant has no failure state
    bool truncated = false;
    ActionMask mask;
    Transition transition;
  };

  AgentEnvironment(AgentKind kind, EnvConfig config, SortingController sorter = rule_sorting_controller(),
                   PressingController presser = rule_pressing_controller());

  ResetResult reset(std::uint64_t seed);
  /// Validates the index before any state change; throws DecodeError when out of range.
  StepResult step(int action);

  ActionMask action_mask() const { return env_.mask(kind_); }
  Eigen::VectorXd observation() const { return env_.observation(kind_); }
  AgentSpec spec() const { return agent_spec(kind_); }
  const Environment& env() const { return env_; }

  /// Plant action the given agent action maps to in the current state.
  PlantAction plant_action(int action) const;

 private:
  AgentKind kind_;
  Environment env_;
  SortingController sorter_;
  PressingController presser_;
};

}  // namespace sortpress
