#pragma once

#include <string>

#include "bmstab/voxel_set.hpp"

namespace bmstab {

enum class ScenarioFamily {
  ellipsoid_pair,
  sheared_polytope,
  dented_convex,
  interval_union_1d,
  conelike_pair,
};

std::string to_string(ScenarioFamily f);
ScenarioFamily family_from_string(const std::string& s);

struct ScenarioSpec {
  ScenarioFamily family = ScenarioFamily::ellipsoid_pair;
  int dim = 2;
  double t = 0.5;
  double perturbation = 0.0;
  double h = 0.01;
  uint64_t seed = 0;

  void validate() const;
  std::string key() const;
};

struct ScenarioData {
  VoxelSet a, b;
  // Intended deficit scale of the perturbation level; NaN when the family
  // has no closed form.
  double design_delta = 0.0;
  std::string note;
};

// Generates an equal-volume voxel pair (rebalanced by trimming the
// lexicographically largest boundary cells).
ScenarioData generate_scenario(const ScenarioSpec& spec);

}  // namespace bmstab
