#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "sortpress/rng.hpp"
#include "sortpress/sim.hpp"
#include "sortpress/spaces.hpp"

namespace sortpress {

class Policy {
 public:
  virtual ~Policy() = default;

  /// Action index for the policy's AgentSpec. With a mask, the index is mask-true.
  virtual int act(const Eigen::VectorXd& observation, const ActionMask* mask) = 0;
  virtual std::string name() const = 0;
  virtual bool deterministic() const = 0;
};

/// Uniform over all actions, or over mask-true actions when a mask is passed.
class RandomPolicy final : public Policy {
 public:
  RandomPolicy(AgentSpec spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  int act(const Eigen::VectorXd& observation, const ActionMask* mask) override;
  std::string name() const override { return "random"; }
  bool deterministic() const override { return false; }

 private:
  AgentSpec spec_;
  Rng rng_;
};

std::unique_ptr<Policy> random_policy(AgentSpec spec, std::uint64_t seed);

/// Mode boosting the group with more mass on the belt; ties go to mode 0.
int rule_based_sorting(const EnvState& state);

/// Lowest-index idle press on the fullest container (lowest index on ties).
/// NoOp when no press is idle or no container holds more than `min_fill`.
PressingAction rule_based_pressing(const EnvState& state, double min_fill = 0.0);

}  // namespace sortpress
