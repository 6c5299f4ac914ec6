#pragma once

#include "bmstab/set_arith.hpp"
#include "bmstab/transport.hpp"

namespace bmstab {

struct JacobianEstimate {
  Mat jacobian;       // symmetrized least-squares fit
  Vec eigenvalues;    // ascending
  double fit_residual = 0.0;
  int neighbors = 0;
  bool negative_flagged = false;  // eigenvalue below -1e-6
};

// Least-squares affine fit of the barycentric map over the sites within
// radius of x; needs at least (n+1)(n+2)/2 neighbors.
JacobianEstimate jacobian_estimate(const TransportMap& map, const Vec& x,
                                   double radius);

// Fits Jacobians at every source site with a k-nearest-neighbor radius
// (k defaults to 4(n+1)(n+2)/2 capped by the site count).
void compute_jacobians(TransportMap& map, int k_neighbors = 0);

// prod_i (t + (1-t) lambda_i) - 1.
double eigen_deficit(const std::vector<double>& eigs, double t);

struct IntegralEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

// vol(region) * mean over region sites of |D(T - Id)|_op.
IntegralEstimate displacement_opnorm_integral(const TransportMap& map,
                                              const Polytope& region);

// Quadrature of max{<x - T(x), (x-o')/|x-o'|>, 0} over the boundary mesh;
// T extends off-site by the nearest-site displacement.
double boundary_transport_integral(const TransportMap& map,
                                   const Polytope& c_a, const Vec& o_prime,
                                   const BoundaryMesh& mesh,
                                   double* extension_radius = nullptr);

// Transport between discretizations of Q(C_A) and Q(C_B); reports the
// operator norms of Q and its inverse.
TransportMap affine_conjugate_transport(const Polytope& c_a,
                                        const Polytope& c_b,
                                        const Mat& q_linear,
                                        const Vec& q_shift, int sites,
                                        uint64_t seed,
                                        double* theta_report = nullptr);

struct RegularityRatio {
  double l_inf = 0.0;  // sup over (1-eps) C_A
  double l_1 = 0.0;    // integral over (1-eps/2) C_A
  double ratio = 0.0;
  bool undefined = false;  // 0/0, reported as pass
  bool infinite = false;   // denominator < 1e-12 with numerator > 1e-9
  int sites_inner = 0;
  int sites_outer = 0;
};

RegularityRatio regularity_ratio(const TransportMap& map, const Polytope& c_a,
                                 double eps);

struct MainPropDiagnostics {
  double delta = 0, gamma = 0, t = 0, eps = 0, ell = 0;
  double hypothesis_bound = 0;  // t^(2n-1)/2
  double scale = 0;             // sqrt((delta+gamma)/t)

  double eigen_deficit_integral = 0;
  double opnorm_integral = 0;
  double opnorm_sup_inner = 0;
  double center_displacement = 0;
  double boundary_integral_max = 0;

  // Entries normalized by sqrt((delta+gamma)/t)*|A| (sup and displacement
  // by sqrt((delta+gamma)/t) alone).
  double norm_eigen_integral = 0;
  double norm_opnorm_integral = 0;
  double norm_opnorm_sup = 0;
  double norm_center_displacement = 0;
  double norm_boundary_integral = 0;

  int sites = 0;
  double e_fraction = 0;  // fraction of sites in the discrete E region
};

// Runs the discrete transport between C_A and C_B and evaluates the mass
// chain: the eigenvalue-deficit integral over the discrete E region, the
// operator-norm displacement integral, its sup over (1-eps/2) C_A, the
// center displacement |T(o)-o|, and the boundary transport integral over a
// grid of o' in (1-eps) C_A. Requires delta + gamma <= t^(2n-1)/2.
MainPropDiagnostics mainprop_diagnostics(const VoxelSet& a, const VoxelSet& b,
                                         const Polytope& c_a,
                                         const Polytope& c_b, double t,
                                         double eps, double ell, int sites,
                                         uint64_t seed);

}  // namespace bmstab
