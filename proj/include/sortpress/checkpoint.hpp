#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "sortpress/mlp.hpp"
#include "sortpress/policies.hpp"
#include "sortpress/spaces.hpp"

namespace sortpress {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trained actor-critic and what it was trained for.
struct PolicyArtifact {
  AgentKind kind = AgentKind::Sorting;
  bool masked = false;
  std::uint64_t seed = 0;
  std::int64_t timesteps = 0;
  ActorCritic<double> network;

  /// Most probable action, restricted to `mask` when given.
  int greedy_action(const Eigen::VectorXd& observation, const ActionMask* mask = nullptr) const;
};

/// Rounds every parameter through float32 (the checkpoint precision).
void round_to_float(ActorCritic<double>& network);

/// FNV-1a over the little-endian float32 parameter block.
std::uint64_t weight_checksum(const ActorCritic<double>& network);

// Layout (all little-endian):
//   "SPCK" | u32 version | u32 kind | u32 masked | u64 seed | u64 timesteps
//   | u32 obs_len | u32 n_actions | u32 n_hidden | u32 hidden[n_hidden]
//   | u64 n_policy_params | u64 n_value_params | u64 checksum | f32 params[...]
void save_checkpoint(const PolicyArtifact& artifact, const std::filesystem::path& path);
PolicyArtifact load_checkpoint(const std::filesystem::path& path);

/// Greedy network policy (argmax of the logits, masked when a mask is passed).
class NetworkPolicy final : public Policy {
 public:
  explicit NetworkPolicy(PolicyArtifact artifact, std::string name)
      : artifact_(std::move(artifact)), name_(std::move(name)) {}

  int act(const Eigen::VectorXd& observation, const ActionMask* mask) override {
    return artifact_.greedy_action(observation, mask);
  }
  std::string name() const override { return name_; }
  bool deterministic() const override { return true; }
  const PolicyArtifact& artifact() const { return artifact_; }

 private:
  PolicyArtifact artifact_;
  std::string name_;
};

}  // namespace sortpress
