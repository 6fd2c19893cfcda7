#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sortpress/config.hpp"
#include "sortpress/sim.hpp"

namespace sortpress {

enum class AgentKind { Sorting, Pressing, Monolithic };

struct AgentSpec {
  AgentKind kind;
  int n_actions;
  int obs_len;
};

inline constexpr int kPressingActions = 1 + kNumPresses * kNumContainers;  // 11
inline constexpr int kMonolithicActions = kNumModes * kPressingActions;  // 22
inline constexpr int kSortingObsLen = 13;
inline constexpr int kPressingObsLen = 16;
inline constexpr int kMonolithicObsLen = kSortingObsLen + kPressingObsLen;

constexpr AgentSpec agent_spec(AgentKind kind) {
  switch (kind) {
    case AgentKind::Sorting:
      return {kind, kNumModes, kSortingObsLen};
    case AgentKind::Pressing:
      return {kind, kPressingActions, kPressingObsLen};
    case AgentKind::Monolithic:
      return {kind, kMonolithicActions, kMonolithicObsLen};
  }
  return {kind, 0, 0};
}

std::string_view to_string(AgentKind kind);
/// Accepts "sorting", "pressing", "monolithic"; throws ConfigError otherwise.
AgentKind parse_agent_kind(std::string_view name);

/// Action index outside the agent's range.
class DecodeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// [belt occupancy, belt material shares (5), accuracies (2), purity deviations (5)].
Eigen::VectorXd sorting_observation(const EnvState& state, const EnvConfig& config);

/// [fill levels (5), bale progress (5), machine group masses (2), press timers (2), press idle flags (2)].
Eigen::VectorXd pressing_observation(const EnvState& state, const EnvConfig& config);

Eigen::VectorXd monolithic_observation(const EnvState& state, const EnvConfig& config);

Eigen::VectorXd observation(AgentKind kind, const EnvState& state, const EnvConfig& config);

// Pressing index: 0 is NoOp, 1 + 5 * press + container otherwise.
PressingAction decode_pressing_action(int index);
int encode_pressing_action(const PressingAction& action);

// Monolithic index: mode * 11 + pressing index.
PlantAction decode_monolithic_action(int index);
int encode_monolithic_action(const PlantAction& action);

/// NoOp always valid; Press(p, c) valid iff press p idle and container c nonempty.
ActionMask pressing_action_mask(const EnvState& state);
ActionMask monolithic_action_mask(const EnvState& state);
ActionMask action_mask(AgentKind kind, const EnvState& state);

struct ObservationField {
  int index;
  std::string name;
  std::string meaning;
};

/// Index -> meaning table for an agent's observation vector.
std::vector<ObservationField> observation_layout(AgentKind kind);

/// Markdown rendering of all three layouts (docs/observation-spec.md).
std::string observation_spec_markdown();

}  // namespace sortpress
