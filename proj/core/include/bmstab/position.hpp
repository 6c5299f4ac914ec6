#pragma once

#include <string>

#include "bmstab/cones.hpp"
#include "bmstab/polytope.hpp"
#include "bmstab/voxel_set.hpp"

namespace bmstab {

struct SandwichResult {
  bool ok = false;
  std::string reason;
  Polytope p;        // witness with o in P subset X,Y subset (1+eta) P
  double scale = 0;  // shrink factor applied to co(X) cap co(Y)
  double worst_upper_violation = 0.0;
};

// Tests the eta-sandwich property on the grid: the candidate witness is
// co(X) cap co(Y) shrunk toward the origin until it fits inside both sets
// at cell-center resolution.
SandwichResult sandwich_check(const VoxelSet& x, const VoxelSet& y, double eta);

struct BoundedPositionReport {
  Mat linear;
  Vec shift;
  double r = 1.0;
  double lambda_measured = 0.0;
  double lambda_required = 0.0;  // n^2 + n^3 eta
  bool lambda_ok = false;
  double inner_escape_fraction = 0.0;  // sampled S \ m(X) volume fraction
  Polytope witness;                    // image of the sandwich witness
};

// Positions the sandwich pair (X, Y) by mapping a greedily inscribed
// maximum-volume simplex of the witness onto the frame simplex, then
// verifies the (n^2 + n^3 eta)-bounded n*eta-sandwich postcondition.
BoundedPositionReport bounded_position(const VoxelSet& x, const VoxelSet& y,
                                       double eta);

struct ConelikeCertificate {
  VoxelSet a, b;
  Polytope c_a, c_b;   // convex supersets, ball-sandwiched around o
  Polytope k;          // common near-convex envelope
  Polytope s_dd;       // cone-slice lower frame S''
  Vec z, x, y;
  double gamma = 0, ell = 0, lambda = 0, mu = 0;
};

struct ConditionReport {
  bool pass = false;
  double worst = 0.0;  // escape fraction or violation magnitude
  std::string note;
};

struct ConelikeReport {
  ConditionReport ball_sandwich;   // condition 1
  ConditionReport cone_slice;      // condition 2
  ConditionReport envelope;        // condition 3
  bool all_pass() const {
    return ball_sandwich.pass && cone_slice.pass && envelope.pass;
  }
};

// Independently verifies the three conelike conditions by polytope-level
// containments plus grid sampling with at most escape_tol relative volume
// escaping.
ConelikeReport conelike_check(const ConelikeCertificate& cert,
                              double escape_tol = 1e-3);

}  // namespace bmstab
