#pragma once

#include <functional>
#include <vector>

#include "bmstab/lemmas.hpp"
#include "bmstab/polytope.hpp"

namespace bmstab {

// Random affine scaling: a Haar orthonormal basis with independent uniform
// diagonal stretches in [1/theta, theta].
struct RandomScaling {
  Mat basis;   // columns orthonormal
  Vec diag;    // stretches
  uint64_t seed = 0;

  Mat matrix() const { return basis * diag.asDiagonal() * basis.transpose(); }
  Mat inverse() const {
    return basis * diag.cwiseInverse().asDiagonal() * basis.transpose();
  }
  double determinant() const { return diag.prod(); }
};

RandomScaling sample_random_scaling(int n, double theta, uint64_t seed);

// Map provider: given the scaling matrix Q and the point Q(x), returns
// T_Q(Q(x)), which must land in Q(C_B).
using MapProvider = std::function<Vec(const Mat& q, const Vec& qx)>;

// Radial projection onto Q(C_B): scales the point toward the origin until
// it enters. Requires the origin strictly inside C_B.
MapProvider radial_projection_provider(const Polytope& c_b);

struct ProbBoundEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double distance = 0.0;  // d(x, C_B)
  int trials = 0;
  std::vector<double> batch_means;  // for bootstrap confidence intervals
  ProbLemParams params;
};

// Monte Carlo estimate of
//   E_{Q,o'} max{ <Q(x)-T_Q(Q(x)), (Q(x)-Q(o'))/|Q(x)-Q(o')|>, 0 }
// with Q a random scaling at theta = theta_{n,ell} and o' uniform in
// B(o, 1/ell). Requires B(o,1/ell) in C_A/2, C_B/2 in B(o,ell); the
// provider's containment is checked on every sample.
ProbBoundEstimate mc_probabilistic_bound(const Polytope& c_a,
                                         const Polytope& c_b, double ell,
                                         const Vec& x, int trials,
                                         uint64_t seed,
                                         const MapProvider& provider,
                                         int batches = 100);

}  // namespace bmstab
