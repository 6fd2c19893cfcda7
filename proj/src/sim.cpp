#include "sortpress/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sortpress {
namespace {

// Absorbs rounding noise such as 5 + 5 * 2.0000000000000004 before ceil().
constexpr double kCeilSlack = 1e-9;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append(std::ostringstream& out, const MaterialVector& m) {
  out << '[';
  for (int i = 0; i < kNumMaterials; ++i) out << (i ? "," : "") << fmt(m[i]);
  out << ']';
}

}  // namespace

double purity(const Container& container) {
  const double total = container.fill();
  if (total <= 0.0) return container.threshold;
  return std::clamp(container.contents[container.dominant_type] / total, 0.0, 1.0);
}

double EnvState::belt_mass() const { return belt_contents().sum(); }

MaterialVector EnvState::belt_contents() const {
  MaterialVector total = MaterialVector::Zero();
  for (const auto& slot : belt) total += slot;
  return total;
}

double EnvState::container_mass() const {
  double total = 0.0;
  for (const auto& c : containers) total += c.fill();
  return total;
}

double EnvState::overall_fill_ratio() const {
  double capacity = 0.0;
  for (const auto& c : containers) capacity += c.capacity;
  return std::clamp(container_mass() / capacity, 0.0, 1.0);
}

double EnvState::mass_balance_error() const {
  // The sorting machine holds nothing between steps.
  return std::abs(input_total - (belt_mass() + container_mass() + pressed_total + overflow_lost));
}

EnvState reset(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  EnvState state;
  state.rng = Rng(seed);
  state.belt.assign(static_cast<std::size_t>(config.belt_delay_steps), MaterialVector::Zero());
  for (int i = 0; i < kNumContainers; ++i) {
    auto& c = state.containers[static_cast<std::size_t>(i)];
    c.dominant_type = i;
    c.capacity = config.container_capacity;
    c.threshold = config.purity_thresholds[static_cast<std::size_t>(i)];
  }
  state.machine.accuracies = config.accuracy_table[0];
  return state;
}

MaterialVector generate_input(Rng& rng, const EnvConfig& config) {
  const double total = rng.uniform(config.input_volume_range[0], config.input_volume_range[1]);
  MaterialVector weights;
  for (int i = 0; i < kNumMaterials; ++i) weights[i] = rng.exponential();
  const double norm = weights.sum();
  if (!(norm > 0.0)) return MaterialVector::Constant(total / kNumMaterials);
  return weights * (total / norm);
}

BeltAdvance advance_belt(std::deque<MaterialVector>& belt, const MaterialVector& offered, double capacity) {
  BeltAdvance out;
  if (!belt.empty()) {
    out.delivered = belt.front();
    belt.pop_front();
  }
  double held = 0.0;
  for (const auto& slot : belt) held += slot.sum();
  const double room = std::max(0.0, capacity - held);
  const double amount = offered.sum();
  if (amount > room) {
    out.enqueued = amount > 0.0 ? MaterialVector(offered * (room / amount)) : MaterialVector::Zero();
    out.withheld = offered - out.enqueued;
  } else {
    out.enqueued = offered;
  }
  belt.push_back(out.enqueued);
  return out;
}

Accuracies sample_accuracies(Rng& rng, int mode, const EnvConfig& config) {
  const auto& base = config.accuracy_table.at(static_cast<std::size_t>(mode));
  const double sigma = config.accuracy_noise_sigma;
  const double noise_a = sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0;
  const double noise_b = sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0;
  return {std::clamp(base.group_a + noise_a, 0.5, 1.0), std::clamp(base.group_b + noise_b, 0.5, 1.0)};
}

SortOutcome sort_material(const MaterialVector& delivered, const Accuracies& accuracies,
                          std::array<Container, kNumContainers>& containers) {
  SortOutcome out;
  std::array<MaterialVector, kNumContainers> inflow;
  inflow.fill(MaterialVector::Zero());
  for (int i = 0; i < kNumMaterials; ++i) {
    const double q = delivered[i];
    if (q <= 0.0) continue;
    const double a = accuracies.of(group_of(i));
    const double stray = q * (1.0 - a) / (kNumContainers - 1);
    for (int c = 0; c < kNumContainers; ++c) {
      inflow[static_cast<std::size_t>(c)][i] += (c == i) ? q * a : stray;
    }
  }
  for (std::size_t c = 0; c < containers.size(); ++c) {
    auto& container = containers[c];
    const double amount = inflow[c].sum();
    const double room = container.free_capacity();
    MaterialVector deposit = inflow[c];
    if (amount > room) {
      deposit = amount > 0.0 ? MaterialVector(inflow[c] * (room / amount)) : MaterialVector::Zero();
      out.overflow += amount - deposit.sum();
    }
    container.contents += deposit;
    out.deposits[c] = deposit;
  }
  return out;
}

PressOutcome execute_press(EnvState& state, const EnvConfig& config, int press_id, int container_id) {
  if (press_id < 0 || press_id >= kNumPresses) {
    throw std::out_of_range("press id " + std::to_string(press_id) + " out of range");
  }
  if (container_id < 0 || container_id >= kNumContainers) {
    throw std::out_of_range("container id " + std::to_string(container_id) + " out of range");
  }
  auto& press = state.presses[static_cast<std::size_t>(press_id)];
  auto& container = state.containers[static_cast<std::size_t>(container_id)];
  if (!press.idle() || container.empty()) return {PressOutcome::Kind::Ignored, 0.0};

  const double volume = container.fill();
  const double bales = volume / config.bale_size;
  press.history.push_back(Bale{bales, purity(container), container.dominant_type, state.step, press_id});
  container.contents.setZero();
  const double duration = config.press_time_base + config.press_time_per_bale * bales;
  press.remaining = static_cast<int>(std::ceil(duration - kCeilSlack));
  state.pressed_total += volume;
  return {PressOutcome::Kind::Executed, bales};
}

void tick_presses(EnvState& state) {
  for (auto& press : state.presses) {
    if (press.remaining > 0) --press.remaining;
  }
}

Transition step(EnvState& state, const EnvConfig& config, const PlantAction& action) {
  if (state.step >= config.episode_length) {
    throw EpisodeFinished("episode finished after " + std::to_string(state.step) + " steps; call reset()");
  }
  if (action.mode < 0 || action.mode >= kNumModes) {
    throw std::out_of_range("sorting mode " + std::to_string(action.mode) + " out of range");
  }
  Transition t;
  t.action = action;

  state.machine.mode = action.mode;
  state.machine.accuracies = sample_accuracies(state.rng, action.mode, config);

  t.input = generate_input(state.rng, config);
  const BeltAdvance belt = advance_belt(state.belt, state.source_backlog + t.input, config.belt_capacity);
  state.source_backlog = belt.withheld;
  state.input_total += belt.enqueued.sum();
  t.delivered = belt.delivered;

  const SortOutcome sorted = sort_material(belt.delivered, state.machine.accuracies, state.containers);
  state.machine.last_batch = belt.delivered;
  state.overflow_lost += sorted.overflow;
  t.overflow = sorted.overflow;

  if (!action.press.is_noop()) {
    t.outcome = execute_press(state, config, action.press.press_id, action.press.container_id);
    if (t.outcome.ignored()) ++state.ignored_actions;
  }

  tick_presses(state);

  std::array<double, kNumContainers> purities;
  for (std::size_t i = 0; i < purities.size(); ++i) purities[i] = purity(state.containers[i]);
  const auto& rw = config.rewards;
  t.reward.sort = sorting_reward(purities, config.purity_thresholds, rw.alpha);
  t.reward.press_state = pressing_state_reward(state.overall_fill_ratio(), rw.fill_weight);
  t.reward.press_action = t.outcome.executed() ? pressing_action_reward(t.outcome.bales, rw.bale_bonus) : 0.0;
  t.reward.press = t.reward.press_state + t.reward.press_action;
  t.reward.total = monolithic_reward(t.reward.sort, t.reward.press);

  ++state.step;
  t.truncated = state.step == config.episode_length;
  return t;
}

std::string serialize_state(const EnvState& s) {
  std::ostringstream out;
  out << "step=" << s.step << "\nbelt=";
  for (const auto& slot : s.belt) append(out, slot);
  out << "\nbacklog=";
  append(out, s.source_backlog);
  out << "\nmachine=" << s.machine.mode << ',' << fmt(s.machine.accuracies.group_a) << ','
      << fmt(s.machine.accuracies.group_b) << ',';
  append(out, s.machine.last_batch);
  for (const auto& c : s.containers) {
    out << "\ncontainer=";
    append(out, c.contents);
  }
  for (const auto& p : s.presses) {
    out << "\npress=" << p.remaining << ':';
    for (const auto& b : p.history) {
      out << '(' << fmt(b.size_bales) << ',' << fmt(b.purity) << ',' << b.material << ',' << b.created_at << ')';
    }
  }
  out << "\naccounting=" << fmt(s.overflow_lost) << ',' << fmt(s.pressed_total) << ',' << fmt(s.input_total) << ','
      << s.ignored_actions;
  out << "\nrng=" << s.rng.state() << '\n';
  return out.str();
}

}  // namespace sortpress
