#pragma once

#include <vector>

#include "bmstab/polytope.hpp"
#include "bmstab/voxel_set.hpp"

namespace bmstab {

// Regular unit-volume simplex centered at the origin.
struct SimplexFrame {
  int dim = 0;
  std::vector<Vec> vertices;  // n+1 vertices, lexicographic build order

  Polytope polytope() const;
};

SimplexFrame regular_simplex(int n);

// The n+1 cones spanned by the frame's facets: cone i is the nonnegative
// hull of every vertex except e_i. They essentially partition R^n.
class ConeFamily {
 public:
  explicit ConeFamily(SimplexFrame frame);

  int dim() const { return frame_.dim; }
  int count() const { return dim() + 1; }
  const SimplexFrame& frame() const { return frame_; }
  const std::vector<Halfspace>& cone_halfspaces(int i) const {
    return cones_[i];
  }

  bool in_cone(int i, const Vec& p, double tol = 1e-9) const;
  // Smallest index whose cone contains p; the origin resolves to 0.
  int membership(const Vec& p) const;

 private:
  SimplexFrame frame_;
  std::vector<std::vector<Halfspace>> cones_;
};

// Exact per-cone volumes of (X + shift): whole cells classified by their
// box, cells straddling a cone boundary clipped exactly.
std::vector<double> cone_masses(const VoxelSet& x, const ConeFamily& f,
                                const Vec& shift);

// Cell partition by cell-center membership (ties to the smallest index).
std::vector<VoxelSet> cone_partition(const VoxelSet& x, const ConeFamily& f);

struct BalanceResult {
  Vec v;
  double residual = 0.0;  // max over cones |m_A - m_{B+v}|
  int evaluations = 0;
  std::vector<double> masses_a;
  std::vector<double> masses_b;
  std::vector<double> accepted_residuals;  // best-so-far trace, nonincreasing
};

// Finds v with |A cap C| = |(B+v) cap C| for every cone, to the requested
// absolute tolerance (defaults to 1e-6 * |A|). Throws SolverError with the
// best residual when the evaluation budget runs out.
BalanceResult balancing_translation(const VoxelSet& a, const VoxelSet& b,
                                    const ConeFamily& f, double tol = -1.0,
                                    int max_evaluations = 6000,
                                    uint64_t seed = 1);

struct ConeDeficitRow {
  int cone_index = 0;
  double volume_a = 0.0;
  double volume_b = 0.0;
  double deficit = 0.0;
  double grid_error = 0.0;
};

struct ConeSplitResult {
  std::vector<ConeDeficitRow> rows;
  double w_n = 0.0;              // (n+1) (4 n^3)^n
  double global_deficit = 0.0;
  double global_error = 0.0;
  double sum_of_parts = 0.0;      // sum over cones |t A_C + (1-t) B_C|
  double global_sum_volume = 0.0; // |t A + (1-t) B|
  double overlap_allowance = 0.0; // straddle-cell slack for superadditivity
};

// Per-cone deficits after balancing; requires the center-rule cone masses
// of A and B to agree within tol_rel * |A| per cone.
ConeSplitResult cone_split_deficits(const VoxelSet& a, const VoxelSet& b,
                                    const ConeFamily& f, double t,
                                    double tol_rel = 1e-2);

// JSON report with one row per cone:
// {cone_index, volume_A, volume_B, deficit, grid_error}.
std::string cone_split_to_json(const ConeSplitResult& r);

}  // namespace bmstab
