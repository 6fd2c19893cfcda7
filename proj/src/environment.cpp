#include "sortpress/environment.hpp"

#include "sortpress/policies.hpp"

namespace sortpress {

Environment::Environment(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  state_ = sortpress::reset(config_, 0);
}

void Environment::reset(std::uint64_t seed) {
  seed_ = seed;
  state_ = sortpress::reset(config_, seed);
}

StepOutputs Environment::step(const PlantAction& action) {
  StepOutputs out;
  out.transition = sortpress::step(state_, config_, action);
  out.observation = monolithic_observation(state_, config_);
  out.pressing_mask = pressing_action_mask(state_);
  out.monolithic_mask = monolithic_action_mask(state_);
  return out;
}

SortingController rule_sorting_controller() {
  return [](const EnvState& state, const EnvConfig&) { return rule_based_sorting(state); };
}

PressingController rule_pressing_controller(double min_fill) {
  return [min_fill](const EnvState& state, const EnvConfig&) { return rule_based_pressing(state, min_fill); };
}

AgentEnvironment::AgentEnvironment(AgentKind kind, EnvConfig config, SortingController sorter,
                                   PressingController presser)
    : kind_(kind), env_(std::move(config)), sorter_(std::move(sorter)), presser_(std::move(presser)) {}

AgentEnvironment::ResetResult AgentEnvironment::reset(std::uint64_t seed) {
  env_.reset(seed);
  return {observation(), action_mask()};
}

PlantAction AgentEnvironment::plant_action(int action) const {
  const AgentSpec s = spec();
  if (action < 0 || action >= s.n_actions) {
    throw DecodeError(std::string(to_string(kind_)) + " action " + std::to_string(action) + " outside [0, " +
                      std::to_string(s.n_actions) + ")");
  }
  switch (kind_) {
    case AgentKind::Sorting:
      return {action, presser_(env_.state(), env_.config())};
    case AgentKind::Pressing:
      return {sorter_(env_.state(), env_.config()), decode_pressing_action(action)};
    case AgentKind::Monolithic:
      return decode_monolithic_action(action);
  }
  return {};
}

AgentEnvironment::StepResult AgentEnvironment::step(int action) {
  const PlantAction plant = plant_action(action);
  StepOutputs outputs = env_.step(plant);
  StepResult r;
  r.transition = outputs.transition;
  r.truncated = outputs.transition.truncated;
  switch (kind_) {
    case AgentKind::Sorting:
      r.reward = r.transition.reward.sort;
      r.observation = outputs.observation.head(kSortingObsLen);
      r.mask = ActionMask::Constant(kNumModes, true);
      break;
    case AgentKind::Pressing:
      r.reward = r.transition.reward.press;
      r.observation = outputs.observation.tail(kPressingObsLen);
      r.mask = std::move(outputs.pressing_mask);
      break;
    case AgentKind::Monolithic:
      r.reward = r.transition.reward.total;
      r.observation = std::move(outputs.observation);
      r.mask = std::move(outputs.monolithic_mask);
      break;
  }
  return r;
}

}  // namespace sortpress
