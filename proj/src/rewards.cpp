#include "sortpress/rewards.hpp"

#include <cassert>
#include <cmath>

namespace sortpress {

double sorting_reward(std::span<const double> purities, std::span<const double> thresholds, double alpha) {
  assert(purities.size() == thresholds.size() && !purities.empty());
  double deviation = 0.0;
  for (std::size_t i = 0; i < purities.size(); ++i) deviation += purities[i] - thresholds[i];
  deviation /= static_cast<double>(purities.size());
  return std::tanh(alpha * deviation);
}

double pressing_state_reward(double overall_fill_ratio, double fill_weight) {
  return fill_weight * overall_fill_ratio;
}

double distance_to_positive_integer(double bales) {
  if (bales <= 1.0) return 1.0 - bales;
  return std::abs(bales - std::round(bales));
}

double pressing_action_reward(double bales, double bale_bonus) {
  assert(bales > 0.0);
  const double triangle = 1.0 - 4.0 * distance_to_positive_integer(bales);
  return triangle + bale_bonus * std::floor(bales);
}

double pressing_reward(double overall_fill_ratio, const double* executed_bales, const RewardWeights& weights) {
  double r = pressing_state_reward(overall_fill_ratio, weights.fill_weight);
  if (executed_bales != nullptr) r += pressing_action_reward(*executed_bales, weights.bale_bonus);
  return r;
}

double monolithic_reward(double sort_reward, double press_reward) { return sort_reward + press_reward; }

}  // namespace sortpress
