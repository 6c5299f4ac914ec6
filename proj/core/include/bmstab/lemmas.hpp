#pragma once

#include <optional>
#include <vector>

#include "bmstab/cones.hpp"
#include "bmstab/polytope.hpp"
#include "bmstab/set_arith.hpp"

namespace bmstab {

// Constant of the reduced-form eigenvalue inequality.
struct LambdaBoundConstants {
  int n = 0;
  double alpha_n = 0.0;  // 2^{-(18+2n)}

  static LambdaBoundConstants make(int n) {
    return LambdaBoundConstants{n, std::pow(2.0, -(18.0 + 2.0 * n))};
  }
};

struct LambdaBoundCheck {
  bool pass = false;
  double slack = 0.0;            // min over coordinate roles of RHS - LHS
  double sufficient_c = 0.0;     // alpha_n^{-1/2}, reported not asserted
  double statement_slack = 0.0;  // statement form with sufficient_c
};

// Reduced form: alpha_n (lambda_j - 1)^2 <= t^{-1}(P-1) + t^{-2n}(P-1)^2
// with P = prod(t + (1-t)lambda_i), checked for every coordinate in the
// lambda_1 role. The product constraint is enforced by renormalizing the
// last entry.
LambdaBoundCheck check_lambdabound(int n, double t, std::vector<double> lambdas,
                                   double alpha_override = -1.0);

struct LambdaScanReport {
  long samples = 0;
  long violations = 0;
  double worst_slack = 0.0;  // most negative slack seen (0 if none)
  double min_slack = 0.0;    // smallest slack over all samples
};

// Random scan: n uniform in [1, n_max], t uniform in (0, 1/2], lambdas
// log-uniform in [1e-3, 1e3] renormalized to product one.
LambdaScanReport scan_lambdabound(int n_max, long samples, uint64_t seed,
                                  double alpha_override = -1.0);

// Parameter chain of the probabilistic lemma, a pure function of (ell, n).
struct ProbLemParams {
  int n = 0;
  double ell = 0;
  double psi = 0, phi = 0, xi = 0, theta = 0, zeta = 0, alpha = 0, eta = 0;

  static ProbLemParams compute(int n, double ell);
};

struct RayCheck {
  bool pass = false;
  bool vacuous = false;  // x in Y
  double ratio = 0.0;    // |x - y_x| / (ell^2 d(x,Y))
  double dist = 0.0;
  double segment = 0.0;  // |x - y_x|
};

// Pointwise ray claim: |x - y_x| <= ell^2 d(x, Y) for x on the boundary of
// X, with y_x the exit point of segment o->x through the boundary of Y.
RayCheck check_pointwise_ray(const Vec& x, const Polytope& X,
                             const Polytope& Y, double ell);

struct SdVsDistance {
  double sym_diff = 0.0;
  double boundary_integral = 0.0;
  double ratio = 0.0;
  bool undefined = false;  // both sides at grid zero
};

SdVsDistance check_sd_vs_distance(const Polytope& X, const Polytope& Y,
                                  double ell, int refinement);

struct SimplexNormalsReport {
  double sigma = 0.0;
  bool pass = false;
  Vec worst_direction;
};

// Measured separation of the inward facet normals: minimum over unit v of
// max_{1<=i<=n} |<f_i, v>|, excluding the distinguished facet.
SimplexNormalsReport check_simplex_normals(const std::vector<Vec>& simplex,
                                           double r, int excluded_facet = 0,
                                           uint64_t seed = 1);

struct ConelikeBallReport {
  Vec center;
  double k = 0.0;
  bool containment_pass = false;   // property 1, hard
  bool half_mass_pass = false;     // property 2, statistical
  bool cone_pass = false;          // property 3, hard
  bool distance_pass = false;      // property 4, hard
  double half_mass_fraction = 0.0;
  double worst_distance = 0.0;
  bool all_pass() const {
    return containment_pass && half_mass_pass && cone_pass && distance_pass;
  }
};

// Builds X = B(w + f/(2r), sigma/(4r)) and verifies the four properties by
// sampling. H is the hyperplane through the origin with unit normal f.
ConelikeBallReport construct_conelike_ball(const Vec& w, Vec f, double r,
                                           double sigma, const Vec& y1,
                                           const Vec& y2, int samples,
                                           uint64_t seed);

struct FacetTouchReport {
  Vec point;
  bool inner_ball_in_simplex = false;
  bool plane_ball_in_facet = false;
  bool facet_in_big_ball = false;
  bool all_pass() const {
    return inner_ball_in_simplex && plane_ball_in_facet && facet_in_big_ball;
  }
};

// Point v on facet F hit by the ray from the opposite vertex through the
// ball center; verifies B(v,1/r) cap H+ in S', B(v,1/r) cap H in F, and
// F in B(v,2r).
FacetTouchReport facet_touch_point(const std::vector<Vec>& simplex,
                                   int facet_index, double r, int samples,
                                   uint64_t seed);

// Largest mu in (0,1] with (ell^{-2}+1)^{-1}(1+mu) <=
// (t eps/4)^{-1}(t(1+mu)eps/4 - mu); nullopt when no positive mu exists.
std::optional<double> max_filling_mu(double t, double eps, double ell);

struct FillingReport {
  bool pass = false;
  double escaped_fraction = 0.0;
  double mu_max = 0.0;
};

// Grid check of t(1-eps/4)C_A + (1-t)C_B inside tA + (1-t)B.
FillingReport check_filling(const VoxelSet& a, const VoxelSet& b,
                            const Polytope& c_a, const Polytope& c_b,
                            const Polytope& k, const Vec& x, const Vec& y,
                            double t, double eps, double ell, double mu);

}  // namespace bmstab
