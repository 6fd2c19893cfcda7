#include "sortpress/spaces.hpp"

#include <algorithm>
#include <cmath>

namespace sortpress {

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Sorting:
      return "sorting";
    case AgentKind::Pressing:
      return "pressing";
    case AgentKind::Monolithic:
      return "monolithic";
  }
  return "unknown";
}

AgentKind parse_agent_kind(std::string_view name) {
  if (name == "sorting") return AgentKind::Sorting;
  if (name == "pressing") return AgentKind::Pressing;
  if (name == "monolithic") return AgentKind::Monolithic;
  throw ConfigError("unknown agent kind '" + std::string(name) + "' (expected sorting|pressing|monolithic)");
}

Eigen::VectorXd sorting_observation(const EnvState& state, const EnvConfig& config) {
  Eigen::VectorXd obs(kSortingObsLen);
  const MaterialVector belt = state.belt_contents();
  const double belt_mass = belt.sum();
  obs[0] = std::clamp(belt_mass / config.belt_capacity, 0.0, 1.0);
  if (belt_mass > 0.0) {
    obs.segment<kNumMaterials>(1) = (belt / belt_mass).matrix();
  } else {
    obs.segment<kNumMaterials>(1).setZero();
  }
  obs[6] = state.machine.accuracies.group_a;
  obs[7] = state.machine.accuracies.group_b;
  for (int i = 0; i < kNumContainers; ++i) {
    const auto& c = state.containers[static_cast<std::size_t>(i)];
    obs[8 + i] = std::clamp(purity(c) - c.threshold, -1.0, 1.0);
  }
  return obs;
}

Eigen::VectorXd pressing_observation(const EnvState& state, const EnvConfig& config) {
  Eigen::VectorXd obs(kPressingObsLen);
  for (int i = 0; i < kNumContainers; ++i) {
    const double fill = state.containers[static_cast<std::size_t>(i)].fill();
    obs[i] = std::clamp(fill / config.container_capacity, 0.0, 1.0);
    const double bales = fill / config.bale_size;
    obs[5 + i] = bales - std::floor(bales);
  }
  obs[10] = std::clamp(group_mass(state.machine.last_batch, Group::A) / config.belt_capacity, 0.0, 1.0);
  obs[11] = std::clamp(group_mass(state.machine.last_batch, Group::B) / config.belt_capacity, 0.0, 1.0);
  const double longest =
      config.press_time_base + config.press_time_per_bale * config.container_capacity / config.bale_size;
  for (int p = 0; p < kNumPresses; ++p) {
    const auto& press = state.presses[static_cast<std::size_t>(p)];
    obs[12 + p] = longest > 0.0 ? std::clamp(press.remaining / longest, 0.0, 1.0) : 0.0;
    obs[14 + p] = press.idle() ? 1.0 : 0.0;
  }
  return obs;
}

Eigen::VectorXd monolithic_observation(const EnvState& state, const EnvConfig& config) {
  Eigen::VectorXd obs(kMonolithicObsLen);
  obs << sorting_observation(state, config), pressing_observation(state, config);
  return obs;
}

Eigen::VectorXd observation(AgentKind kind, const EnvState& state, const EnvConfig& config) {
  switch (kind) {
    case AgentKind::Sorting:
      return sorting_observation(state, config);
    case AgentKind::Pressing:
      return pressing_observation(state, config);
    case AgentKind::Monolithic:
      return monolithic_observation(state, config);
  }
  return {};
}

PressingAction decode_pressing_action(int index) {
  if (index < 0 || index >= kPressingActions) {
    throw DecodeError("pressing action index " + std::to_string(index) + " outside [0, " +
                      std::to_string(kPressingActions) + ")");
  }
  if (index == 0) return PressingAction::noop();
  return PressingAction::press((index - 1) / kNumContainers, (index - 1) % kNumContainers);
}

int encode_pressing_action(const PressingAction& action) {
  if (action.is_noop()) return 0;
  return 1 + kNumContainers * action.press_id + action.container_id;
}

PlantAction decode_monolithic_action(int index) {
  if (index < 0 || index >= kMonolithicActions) {
    throw DecodeError("monolithic action index " + std::to_string(index) + " outside [0, " +
                      std::to_string(kMonolithicActions) + ")");
  }
  return {index / kPressingActions, decode_pressing_action(index % kPressingActions)};
}

int encode_monolithic_action(const PlantAction& action) {
  return action.mode * kPressingActions + encode_pressing_action(action.press);
}

ActionMask pressing_action_mask(const EnvState& state) {
  ActionMask mask = ActionMask::Constant(kPressingActions, false);
  mask[0] = true;
  for (int p = 0; p < kNumPresses; ++p) {
    if (!state.presses[static_cast<std::size_t>(p)].idle()) continue;
    for (int c = 0; c < kNumContainers; ++c) {
      if (!state.containers[static_cast<std::size_t>(c)].empty()) {
        mask[encode_pressing_action(PressingAction::press(p, c))] = true;
      }
    }
  }
  return mask;
}

ActionMask monolithic_action_mask(const EnvState& state) {
  const ActionMask press = pressing_action_mask(state);
  ActionMask mask(kMonolithicActions);
  for (int m = 0; m < kNumModes; ++m) mask.segment(m * kPressingActions, kPressingActions) = press;
  return mask;
}

ActionMask action_mask(AgentKind kind, const EnvState& state) {
  switch (kind) {
    case AgentKind::Sorting:
      return ActionMask::Constant(kNumModes, true);
    case AgentKind::Pressing:
      return pressing_action_mask(state);
    case AgentKind::Monolithic:
      return monolithic_action_mask(state);
  }
  return {};
}

std::vector<ObservationField> observation_layout(AgentKind kind) {
  std::vector<ObservationField> sorting{
      {0, "belt_occupancy", "belt mass / belt_capacity"},
  };
  for (int i = 0; i < kNumMaterials; ++i) {
    sorting.push_back({1 + i, "belt_share_" + std::to_string(i),
                       "share of material " + std::to_string(i) + " in belt mass (0 when belt empty)"});
  }
  sorting.push_back({6, "accuracy_group_a", "current sorting accuracy for group A (materials 0-2)"});
  sorting.push_back({7, "accuracy_group_b", "current sorting accuracy for group B (materials 3-4)"});
  for (int i = 0; i < kNumContainers; ++i) {
    sorting.push_back({8 + i, "purity_deviation_" + std::to_string(i),
                       "purity - threshold of container " + std::to_string(i) + ", clamped to [-1, 1]"});
  }

  std::vector<ObservationField> pressing;
  for (int i = 0; i < kNumContainers; ++i) {
    pressing.push_back({i, "fill_level_" + std::to_string(i), "fill / container_capacity of container " + std::to_string(i)});
  }
  for (int i = 0; i < kNumContainers; ++i) {
    pressing.push_back({5 + i, "bale_progress_" + std::to_string(i),
                        "fractional part of fill / bale_size of container " + std::to_string(i)});
  }
  pressing.push_back({10, "machine_group_a", "group-A mass sorted in the latest step / belt_capacity"});
  pressing.push_back({11, "machine_group_b", "group-B mass sorted in the latest step / belt_capacity"});
  for (int p = 0; p < kNumPresses; ++p) {
    pressing.push_back({12 + p, "press_timer_" + std::to_string(p),
                        "remaining steps of press " + std::to_string(p) +
                            " / (press_time_base + press_time_per_bale * container_capacity / bale_size)"});
  }
  for (int p = 0; p < kNumPresses; ++p) {
    pressing.push_back({14 + p, "press_idle_" + std::to_string(p), "1 if press " + std::to_string(p) + " is idle, else 0"});
  }

  switch (kind) {
    case AgentKind::Sorting:
      return sorting;
    case AgentKind::Pressing:
      return pressing;
    case AgentKind::Monolithic: {
      auto all = sorting;
      for (auto field : pressing) {
        field.index += kSortingObsLen;
        all.push_back(field);
      }
      return all;
    }
  }
  return {};
}

std::string observation_spec_markdown() {
  std::string out = "# Observation layouts\n\nGenerated by `sortpress observation-spec`; do not edit by hand.\n";
  for (AgentKind kind : {AgentKind::Sorting, AgentKind::Pressing, AgentKind::Monolithic}) {
    const AgentSpec spec = agent_spec(kind);
    out += "\n## " + std::string(to_string(kind)) + " (" + std::to_string(spec.obs_len) + " observations, " +
           std::to_string(spec.n_actions) + " actions)\n\n| index | name | meaning |\n|---|---|---|\n";
    for (const auto& f : observation_layout(kind)) {
      out += "| " + std::to_string(f.index) + " | `" + f.name + "` | " + f.meaning + " |\n";
    }
  }
  out += "\n## Action indices\n\n"
         "- pressing: 0 = no-op, 1 + 5 * press + container = press `press` empties container `container`\n"
         "- monolithic: 11 * mode + pressing index\n";
  return out;
}

}  // namespace sortpress
