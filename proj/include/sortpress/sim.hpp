#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "sortpress/config.hpp"
#include "sortpress/rewards.hpp"
#include "sortpress/rng.hpp"
#include "sortpress/types.hpp"

namespace sortpress {

/// Stepping an episode that already reached episode_length.
class EpisodeFinished : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Container {
  MaterialVector contents = MaterialVector::Zero();
  int dominant_type = 0;
  double capacity = 0.0;
  double threshold = 0.5;

  double fill() const { return contents.sum(); }
  double free_capacity() const { return std::max(0.0, capacity - fill()); }
  bool empty() const { return fill() <= 0.0; }
};

/// Share of the container's own material type; the threshold when empty.
double purity(const Container& container);

struct Bale {
  double size_bales = 0.0;  // emptied volume / bale_size
  double purity = 0.0;
  int material = 0;
  int created_at = 0;
  int press_id = 0;
};

enum class PressStatus { Idle, Busy };

struct Press {
  int remaining = 0;
  std::vector<Bale> history;

  bool idle() const { return remaining == 0; }
  PressStatus status() const { return idle() ? PressStatus::Idle : PressStatus::Busy; }
};

struct PressingAction {
  int press_id = -1;
  int container_id = -1;

  static constexpr PressingAction noop() { return {}; }
  static constexpr PressingAction press(int press_id, int container_id) { return {press_id, container_id}; }
  constexpr bool is_noop() const { return press_id < 0; }
  bool operator==(const PressingAction&) const = default;
};

/// Decoded monolithic action: sorting mode plus pressing sub-action.
struct PlantAction {
  int mode = 0;
  PressingAction press;
  bool operator==(const PlantAction&) const = default;
};

struct PressOutcome {
  enum class Kind { NoOp, Ignored, Executed };
  Kind kind = Kind::NoOp;
  double bales = 0.0;  // set when Executed

  bool executed() const { return kind == Kind::Executed; }
  bool ignored() const { return kind == Kind::Ignored; }
};

struct SortingMachine {
  int mode = 0;
  Accuracies accuracies;
  // Batch sorted in the most recent step. Material passes through within a step,
  // so this is a record, not part of the held mass.
  MaterialVector last_batch = MaterialVector::Zero();
};

struct EnvState {
  int step = 0;
  std::deque<MaterialVector> belt;  // oldest first
  MaterialVector source_backlog = MaterialVector::Zero();
  SortingMachine machine;
  std::array<Container, kNumContainers> containers;
  std::array<Press, kNumPresses> presses;
  Rng rng;
  double overflow_lost = 0.0;
  double pressed_total = 0.0;
  double input_total = 0.0;
  int ignored_actions = 0;

  double belt_mass() const;
  MaterialVector belt_contents() const;
  double container_mass() const;
  double overall_fill_ratio() const;
  /// input_total minus everything accounted for downstream.
  double mass_balance_error() const;
};

/// Fresh episode. Throws ConfigError for an invalid config.
EnvState reset(const EnvConfig& config, std::uint64_t seed);

/// Total drawn uniformly from input_volume_range, split by normalized unit exponentials.
MaterialVector generate_input(Rng& rng, const EnvConfig& config);

struct BeltAdvance {
  MaterialVector delivered = MaterialVector::Zero();
  MaterialVector enqueued = MaterialVector::Zero();
  MaterialVector withheld = MaterialVector::Zero();
};

/// Pops the oldest slot and enqueues `offered`, scaled down so the belt holds at most `capacity`.
BeltAdvance advance_belt(std::deque<MaterialVector>& belt, const MaterialVector& offered, double capacity);

/// Table value plus Normal(0, sigma^2) noise per group, clamped to [0.5, 1].
Accuracies sample_accuracies(Rng& rng, int mode, const EnvConfig& config);

struct SortOutcome {
  std::array<MaterialVector, kNumContainers> deposits;
  double overflow = 0.0;
};

/// Expected-value routing: share a_g of material i goes to container i, the rest
/// is spread evenly over the other containers. Inflow beyond free capacity overflows.
SortOutcome sort_material(const MaterialVector& delivered, const Accuracies& accuracies,
                          std::array<Container, kNumContainers>& containers);

/// Empties `container_id` into press `press_id` if the press is idle and the
/// container nonempty; Ignored otherwise. Throws std::out_of_range on bad ids.
PressOutcome execute_press(EnvState& state, const EnvConfig& config, int press_id, int container_id);

void tick_presses(EnvState& state);

struct Transition {
  MaterialVector input = MaterialVector::Zero();  // generated this step (before belt clamping)
  MaterialVector delivered = MaterialVector::Zero();
  double overflow = 0.0;
  PlantAction action;
  PressOutcome outcome;
  RewardBreakdown reward;
  bool truncated = false;
};

/// One environment step. Phase order:
///  1 set mode, 2 sample accuracies, 3 advance belt, 4 sort, 5 press,
///  6 tick press timers, 7 rewards. Throws EpisodeFinished past episode_length.
Transition step(EnvState& state, const EnvConfig& config, const PlantAction& action);

/// Full textual dump, including the RNG stream; equal strings mean equal states.
std::string serialize_state(const EnvState& state);

}  // namespace sortpress
