#pragma once

#include <array>
#include <span>

#include "sortpress/config.hpp"

namespace sortpress {

/// tanh(alpha * mean_i(p_i - theta_i)).
double sorting_reward(std::span<const double> purities, std::span<const double> thresholds, double alpha);

/// w_f * overall fill ratio.
double pressing_state_reward(double overall_fill_ratio, double fill_weight);

/// Triangular wave 1 - 4 * dist(b, nearest positive integer), plus bale_bonus * floor(b).
/// Only defined for executed presses (b > 0).
double pressing_action_reward(double bales, double bale_bonus);

/// Distance from b to the nearest positive integer.
double distance_to_positive_integer(double bales);

struct RewardBreakdown {
  double sort = 0.0;
  double press_state = 0.0;
  double press_action = 0.0;
  double press = 0.0;  // press_state + press_action
  double total = 0.0;  // sort + press
};

/// State component plus, when `executed_bales` is set, the action component.
double pressing_reward(double overall_fill_ratio, const double* executed_bales, const RewardWeights& weights);

double monolithic_reward(double sort_reward, double press_reward);

}  // namespace sortpress
