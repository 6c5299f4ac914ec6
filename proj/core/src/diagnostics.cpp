#include "bmstab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/Dense>

#include "bmstab/cones.hpp"

namespace bmstab {

namespace {

double opnorm_sym(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// FNV-style hash of the canonical vertex list; identical bodies get
// identical site streams, so transporting a body to itself yields the
// exact identity plan.
uint64_t body_hash(const Polytope& p) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& v : p.vertices())
    for (int k = 0; k < p.dim(); ++k) {
      uint64_t bits;
      const double q = v[k];
      static_assert(sizeof(bits) == sizeof(q));
      std::memcpy(&bits, &q, sizeof(bits));
      h = (h ^ bits) * 0x100000001b3ull;
    }
  return h;
}

}  // namespace

JacobianEstimate jacobian_estimate(const TransportMap& map, const Vec& x,
                                   double radius) {
  const int n = map.plan.source.dim();
  const int needed = (n + 1) * (n + 2) / 2;
  std::vector<int> nbr;
  const auto& sites = map.sites();
  for (std::size_t i = 0; i < sites.size(); ++i)
    if ((sites[i] - x).norm() <= radius) nbr.push_back(static_cast<int>(i));
  if (static_cast<int>(nbr.size()) < needed)
    throw PreconditionError("jacobian_estimate: insufficient neighbors");

  // Affine fit  y ~ J s + b  by centered normal equations.
  Vec mean_s = Vec::Zero(n), mean_y = Vec::Zero(n);
  for (int i : nbr) {
    mean_s += sites[i];
    mean_y += map.images[i];
  }
  mean_s /= static_cast<double>(nbr.size());
  mean_y /= static_cast<double>(nbr.size());
  Mat sxx = Mat::Zero(n, n), syx = Mat::Zero(n, n);
  for (int i : nbr) {
    const Vec ds = sites[i] - mean_s;
    const Vec dy = map.images[i] - mean_y;
    sxx += ds * ds.transpose();
    syx += dy * ds.transpose();
  }
  Mat jac = syx * sxx.completeOrthogonalDecomposition().pseudoInverse();

  JacobianEstimate est;
  est.jacobian = 0.5 * (jac + jac.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(est.jacobian);
  est.eigenvalues = es.eigenvalues();
  est.negative_flagged = est.eigenvalues.minCoeff() < -1e-6;
  est.neighbors = static_cast<int>(nbr.size());
  double rss = 0;
  for (int i : nbr)
    rss += (map.images[i] - mean_y - jac * (sites[i] - mean_s)).squaredNorm();
  est.fit_residual = std::sqrt(rss / static_cast<double>(nbr.size()));
  return est;
}

void compute_jacobians(TransportMap& map, int k_neighbors) {
  const int n = map.plan.source.dim();
  const auto& sites = map.sites();
  const int m = static_cast<int>(sites.size());
  const int needed = (n + 1) * (n + 2) / 2;
  if (k_neighbors <= 0) k_neighbors = 4 * needed;
  k_neighbors = std::min(k_neighbors, m);
  if (k_neighbors < needed)
    throw PreconditionError("compute_jacobians: too few sites");

  map.jacobians.assign(m, Mat());
  map.jacobian_eigs.assign(m, Vec());
  map.jacobian_residuals.assign(m, 0.0);
  map.jacobian_valid.assign(m, 0);

  std::vector<double> d2(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) d2[j] = (sites[j] - sites[i]).squaredNorm();
    std::vector<double> tmp = d2;
    std::nth_element(tmp.begin(), tmp.begin() + (k_neighbors - 1), tmp.end());
    const double radius = std::sqrt(tmp[k_neighbors - 1]) * (1 + 1e-12);
    try {
      JacobianEstimate est = jacobian_estimate(map, sites[i], radius);
      map.jacobians[i] = est.jacobian;
      map.jacobian_eigs[i] = est.eigenvalues;
      map.jacobian_residuals[i] = est.fit_residual;
      map.jacobian_valid[i] = 1;
    } catch (const PreconditionError&) {
      map.jacobian_valid[i] = 0;
    }
  }
}

double eigen_deficit(const std::vector<double>& eigs, double t) {
  if (eigs.empty()) throw PreconditionError("eigen_deficit: empty spectrum");
  double prod = 1.0;
  for (double l : eigs) {
    if (!(l > 0)) throw PreconditionError("eigen_deficit: nonpositive eigenvalue");
    prod *= t + (1.0 - t) * l;
  }
  return prod - 1.0;
}

IntegralEstimate displacement_opnorm_integral(const TransportMap& map,
                                              const Polytope& region) {
  if (map.jacobians.empty())
    throw PreconditionError("opnorm integral: jacobians not computed");
  const int n = map.plan.source.dim();
  const Mat id = Mat::Identity(n, n);
  double sum = 0, sum2 = 0;
  int count = 0;
  for (std::size_t i = 0; i < map.sites().size(); ++i) {
    if (!map.jacobian_valid[i]) continue;
    if (!region.contains(map.sites()[i], 1e-12)) continue;
    const double v = opnorm_sym(map.jacobians[i] - id);
    sum += v;
    sum2 += v * v;
    ++count;
  }
  if (count == 0)
    throw PreconditionError("opnorm integral: no sites in region");
  IntegralEstimate est;
  est.samples = count;
  const double mean = sum / count;
  const double var = std::max(0.0, sum2 / count - mean * mean);
  const double vol = region.volume();
  est.value = vol * mean;
  est.std_error = vol * std::sqrt(var / count);
  return est;
}

double boundary_transport_integral(const TransportMap& map,
                                   const Polytope& c_a, const Vec& o_prime,
                                   const BoundaryMesh& mesh,
                                   double* extension_radius) {
  if (!c_a.contains(o_prime, -1e-6))
    throw PreconditionError("boundary integral: o' must be interior");
  double acc = 0;
  double ext = 0;
  for (std::size_t f = 0; f < mesh.facets.size(); ++f) {
    const Vec x = mesh.facet_centroid(f);
    double nd = 0;
    const Vec tx = map_at(map, x, &nd);
    ext = std::max(ext, nd);
    const Vec dir = x - o_prime;
    const double len = dir.norm();
    if (len < 1e-12) continue;
    const double integrand = std::max(0.0, (x - tx).dot(dir) / len);
    acc += mesh.facets[f].area * integrand;
  }
  if (extension_radius) *extension_radius = ext;
  return acc;
}

TransportMap affine_conjugate_transport(const Polytope& c_a,
                                        const Polytope& c_b,
                                        const Mat& q_linear,
                                        const Vec& q_shift, int sites,
                                        uint64_t seed, double* theta_report) {
  Eigen::JacobiSVD<Mat> svd(q_linear);
  const double smax = svd.singularValues().maxCoeff();
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > 0))
    throw PreconditionError("affine_conjugate_transport: singular Q");
  if (theta_report) *theta_report = std::max(smax, 1.0 / smin);

  Polytope qa = c_a.affine_image(q_linear, q_shift);
  Polytope qb = c_b.affine_image(q_linear, q_shift);
  DiscreteMeasure mu = discretize_uniform(qa, sites, seed);
  DiscreteMeasure nu = discretize_uniform(qb, sites, seed ^ 0x5bf0a8b1u);
  const OtMode mode =
      sites > kExactSiteBudget ? OtMode::entropic : OtMode::exact;
  return barycentric_map(solve_ot(mu, nu, mode));
}

RegularityRatio regularity_ratio(const TransportMap& map, const Polytope& c_a,
                                 double eps) {
  if (!(eps > 0) || eps >= 1)
    throw PreconditionError("regularity_ratio: eps must be in (0,1)");
  if (map.jacobians.empty())
    throw PreconditionError("regularity_ratio: jacobians not computed");
  const int n = map.plan.source.dim();
  const Mat id = Mat::Identity(n, n);
  const Polytope inner = c_a.scaled(1.0 - eps);
  const Polytope outer = c_a.scaled(1.0 - eps / 2.0);

  RegularityRatio r;
  double sum = 0;
  for (std::size_t i = 0; i < map.sites().size(); ++i) {
    if (!map.jacobian_valid[i]) continue;
    const Vec& s = map.sites()[i];
    const double v = opnorm_sym(map.jacobians[i] - id);
    if (outer.contains(s, 1e-12)) {
      sum += v;
      ++r.sites_outer;
    }
    if (inner.contains(s, 1e-12)) {
      r.l_inf = std::max(r.l_inf, v);
      ++r.sites_inner;
    }
  }
  if (r.sites_inner == 0 || r.sites_outer == 0)
    throw PreconditionError("regularity_ratio: insufficient site coverage");
  r.l_1 = outer.volume() * sum / r.sites_outer;
  if (r.l_1 < 1e-12) {
    if (r.l_inf > 1e-9) {
      r.infinite = true;
      r.ratio = std::numeric_limits<double>::infinity();
    } else {
      r.undefined = true;  // 0/0, reported as pass
      r.ratio = 0.0;
    }
  } else {
    r.ratio = r.l_inf / r.l_1;
  }
  return r;
}

MainPropDiagnostics mainprop_diagnostics(const VoxelSet& a, const VoxelSet& b,
                                         const Polytope& c_a,
                                         const Polytope& c_b, double t,
                                         double eps, double ell, int sites,
                                         uint64_t seed) {
  const int n = a.dim();
  MainPropDiagnostics d;
  d.t = t;
  d.eps = eps;
  d.ell = ell;
  d.sites = sites;

  const double va = a.volume();
  d.delta = bm_deficit(a, b, t).value;
  d.gamma = (c_a.volume() - va) / va + (c_b.volume() - b.volume()) / b.volume();
  d.hypothesis_bound = std::pow(t, 2 * n - 1) / 2.0;
  if (d.delta + d.gamma > d.hypothesis_bound)
    throw PreconditionError("mainprop: delta + gamma exceeds t^(2n-1)/2");
  d.scale = std::sqrt(std::max(1e-300, (d.delta + d.gamma) / t));

  DiscreteMeasure mu = discretize_uniform(c_a, sites, seed ^ body_hash(c_a));
  DiscreteMeasure nu = discretize_uniform(c_b, sites, seed ^ body_hash(c_b));
  TransportMap map = barycentric_map(solve_ot(mu, nu));
  compute_jacobians(map);

  const Polytope e_hull = c_a.scaled(1.0 - eps / 4.0);
  const Polytope inner_half = c_a.scaled(1.0 - eps / 2.0);

  // Discrete E region: image lands in B or the site lies in the shrunken
  // hull.
  std::vector<char> in_e(sites, 0);
  int e_count = 0;
  for (int i = 0; i < sites; ++i) {
    const bool img_in_b = b.contains_point(map.images[i]);
    if (img_in_b || e_hull.contains(map.sites()[i], 1e-12)) {
      in_e[i] = 1;
      ++e_count;
    }
  }
  d.e_fraction = static_cast<double>(e_count) / sites;

  const Mat id = Mat::Identity(n, n);
  const double site_weight = c_a.volume() / sites;
  for (int i = 0; i < sites; ++i) {
    if (!in_e[i] || !map.jacobian_valid[i]) continue;
    const Vec& eigs = map.jacobian_eigs[i];
    double prod = 1.0;
    bool pos = true;
    for (int k = 0; k < n; ++k) {
      const double l = std::max(eigs[k], 1e-12);
      if (eigs[k] <= 0) pos = pos && eigs[k] > -1e-6;
      prod *= t + (1 - t) * l;
    }
    if (!pos) continue;
    d.eigen_deficit_integral += site_weight * (prod - 1.0);
    d.opnorm_integral += site_weight * opnorm_sym(map.jacobians[i] - id);
  }
  for (int i = 0; i < sites; ++i) {
    if (!map.jacobian_valid[i]) continue;
    if (!inner_half.contains(map.sites()[i], 1e-12)) continue;
    d.opnorm_sup_inner =
        std::max(d.opnorm_sup_inner, opnorm_sym(map.jacobians[i] - id));
  }

  // |T(o) - o| through the nearest-site displacement extension.
  d.center_displacement = map_at(map, Vec::Zero(n)).norm();

  // Boundary integral maximized over a deterministic grid of o' in
  // (1-eps) C_A: the origin plus shrunken frame-vertex directions.
  {
    BoundaryMesh mesh = boundary_quadrature(c_a, 12);
    std::vector<Vec> opts = {Vec::Zero(n)};
    const Polytope safe = c_a.scaled(1.0 - eps);
    SimplexFrame frame = regular_simplex(n);
    for (const auto& v : frame.vertices) {
      Vec cand = 0.3 * v / std::max(1.0, v.norm());
      if (safe.contains(cand, -1e-9)) opts.push_back(cand);
    }
    for (const auto& o : opts)
      d.boundary_integral_max = std::max(
          d.boundary_integral_max,
          boundary_transport_integral(map, c_a, o, mesh));
  }

  const double denom = d.scale * va;
  d.norm_eigen_integral = d.eigen_deficit_integral / denom;
  d.norm_opnorm_integral = d.opnorm_integral / denom;
  d.norm_opnorm_sup = d.opnorm_sup_inner / d.scale;
  d.norm_center_displacement = d.center_displacement / d.scale;
  d.norm_boundary_integral = d.boundary_integral_max / denom;
  return d;
}

}  // namespace bmstab
