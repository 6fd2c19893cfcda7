#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>

namespace sortpress {

inline constexpr int kNumMaterials = 5;
inline constexpr int kNumContainers = 5;
inline constexpr int kNumPresses = 2;
inline constexpr int kNumModes = 2;

/// Per-type volumes of the five material types.
using MaterialVector = Eigen::Array<double, kNumMaterials, 1>;

using ActionMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Materials 0..2 form group A, 3..4 group B. Sorting mode 0 boosts A, mode 1 boosts B.
enum class Group : int { A = 0, B = 1 };

constexpr Group group_of(int material) { return material < 3 ? Group::A : Group::B; }

inline double group_mass(const MaterialVector& m, Group g) {
  return g == Group::A ? m.head<3>().sum() : m.tail<2>().sum();
}

struct Accuracies {
  double group_a = 1.0;
  double group_b = 1.0;

  double of(Group g) const { return g == Group::A ? group_a : group_b; }
  bool operator==(const Accuracies&) const = default;
};

}  // namespace sortpress
