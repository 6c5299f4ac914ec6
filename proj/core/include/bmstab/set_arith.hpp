#pragma once

#include "bmstab/polytope.hpp"
#include "bmstab/voxel_set.hpp"

namespace bmstab {

// A value together with a certified absolute error bar.
struct Measured {
  double value = 0.0;
  double error = 0.0;
};

struct MinkowskiResult {
  VoxelSet sum;
  double volume = 0.0;
  // Overestimate bound relative to the exact region t*A + (1-t)*B; zero on
  // the commensurable-grid path, positive after conservative resampling.
  double error_bound = 0.0;
  bool resampled = false;
};

// t*A + (1-t)*B as a voxel set. When t*h_A and (1-t)*h_B are integer
// multiples of a common output spacing the result is the exact region;
// otherwise both terms are outer-covered on a common grid and the induced
// volume error is reported.
MinkowskiResult minkowski_combine(const VoxelSet& a, const VoxelSet& b, double t);

// Volume of t*A + (1-t)*B without materializing the summed set; same error
// semantics as minkowski_combine.
Measured minkowski_volume(const VoxelSet& a, const VoxelSet& b, double t);

// delta = |tA+(1-t)B|/|A| - 1 for equal-volume sets.
Measured bm_deficit(const VoxelSet& a, const VoxelSet& b, double t);

// (|co(A)| - |A|)/|A|.
Measured hull_gap(const VoxelSet& a);

struct SymDiffResult {
  Vec translation;       // applied to A
  double value = 0.0;    // |(A+x) symdiff B|
  double error = 0.0;    // lattice quantization allowance
};

// Local-search upper bound on min_x |(A+x) symdiff B|; centroid alignment,
// coarse-to-fine shift scan, then lattice descent. Requires equal spacing.
SymDiffResult sym_diff_min_translation(const VoxelSet& a, const VoxelSet& b);

double volume(const VoxelSet& x);
double volume(const Polytope& p);

}  // namespace bmstab
