#include "sortpress/policies.hpp"

#include <cassert>

namespace sortpress {

int RandomPolicy::act(const Eigen::VectorXd& /*observation*/, const ActionMask* mask) {
  if (mask == nullptr) return static_cast<int>(rng_.uniform_index(static_cast<std::size_t>(spec_.n_actions)));
  assert(mask->size() == spec_.n_actions);
  const auto valid = static_cast<std::size_t>(mask->count());
  if (valid == 0) throw std::invalid_argument("random policy: mask admits no action");
  std::size_t pick = rng_.uniform_index(valid);
  for (int a = 0; a < spec_.n_actions; ++a) {
    if ((*mask)[a] && pick-- == 0) return a;
  }
  return 0;
}

std::unique_ptr<Policy> random_policy(AgentSpec spec, std::uint64_t seed) {
  return std::make_unique<RandomPolicy>(spec, seed);
}

int rule_based_sorting(const EnvState& state) {
  const MaterialVector belt = state.belt_contents();
  return group_mass(belt, Group::A) >= group_mass(belt, Group::B) ? 0 : 1;
}

PressingAction rule_based_pressing(const EnvState& state, double min_fill) {
  int press_id = -1;
  for (int p = 0; p < kNumPresses; ++p) {
    if (state.presses[static_cast<std::size_t>(p)].idle()) {
      press_id = p;
      break;
    }
  }
  if (press_id < 0) return PressingAction::noop();

  int best = -1;
  double best_fill = 0.0;
  for (int c = 0; c < kNumContainers; ++c) {
    const double fill = state.containers[static_cast<std::size_t>(c)].fill();
    if (fill > best_fill) {
      best = c;
      best_fill = fill;
    }
  }
  if (best < 0 || best_fill <= min_fill) return PressingAction::noop();
  return PressingAction::press(press_id, best);
}

}  // namespace sortpress
