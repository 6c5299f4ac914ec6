#include "bmstab/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "bmstab/rng.hpp"

namespace bmstab {

LambdaBoundCheck check_lambdabound(int n, double t,
                                   std::vector<double> lambdas,
                                   double alpha_override) {
  if (n < 1 || static_cast<int>(lambdas.size()) != n)
    throw PreconditionError("check_lambdabound: bad spectrum size");
  if (!(t > 0) || t > 0.5)
    throw PreconditionError("check_lambdabound: t must be in (0, 1/2]");
  double prod = 1.0;
  for (double l : lambdas) {
    if (!(l > 0)) throw PreconditionError("check_lambdabound: nonpositive lambda");
    prod *= l;
  }
  if (std::abs(prod - 1.0) > 1e-9) lambdas.back() /= prod;

  const double alpha = alpha_override > 0
                           ? alpha_override
                           : LambdaBoundConstants::make(n).alpha_n;
  double p = 1.0;
  for (double l : lambdas) p *= t + (1.0 - t) * l;
  const double excess = p - 1.0;
  const double rhs = excess / t + std::pow(t, -2.0 * n) * excess * excess;

  LambdaBoundCheck out;
  out.slack = std::numeric_limits<double>::infinity();
  for (double l : lambdas)
    out.slack = std::min(out.slack, rhs - alpha * (l - 1.0) * (l - 1.0));
  out.pass = out.slack >= -1e-12 * std::max(1.0, std::abs(rhs));

  out.sufficient_c = 1.0 / std::sqrt(alpha);
  double sum_sq = 0;
  for (double l : lambdas) sum_sq += (l - 1.0) * (l - 1.0);
  const double statement_rhs =
      out.sufficient_c * std::pow(t, -static_cast<double>(n)) * excess +
      out.sufficient_c * std::sqrt(std::max(0.0, excess) / t);
  out.statement_slack = statement_rhs - std::sqrt(sum_sq);
  return out;
}

LambdaScanReport scan_lambdabound(int n_max, long samples, uint64_t seed,
                                  double alpha_override) {
  if (n_max < 1) throw PreconditionError("scan_lambdabound: n_max >= 1");
  Rng rng(seed);
  LambdaScanReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  std::vector<double> lambdas;
  for (long s = 0; s < samples; ++s) {
    const int n = 1 + static_cast<int>(rng.below(n_max));
    double t = 0;
    while (!(t > 0)) t = 0.5 * rng.uniform01();
    lambdas.resize(n);
    for (int k = 0; k < n; ++k)
      lambdas[k] = std::pow(10.0, rng.uniform(-3.0, 3.0));
    double prod = 1.0;
    for (double l : lambdas) prod *= l;
    lambdas.back() /= prod;
    LambdaBoundCheck chk = check_lambdabound(n, t, lambdas, alpha_override);
    ++rep.samples;
    rep.min_slack = std::min(rep.min_slack, chk.slack);
    if (!chk.pass) {
      ++rep.violations;
      rep.worst_slack = std::min(rep.worst_slack, chk.slack);
    }
  }
  return rep;
}

ProbLemParams ProbLemParams::compute(int n, double ell) {
  if (n < 1) throw PreconditionError("ProbLemParams: n >= 1");
  if (!(ell > 1)) throw PreconditionError("ProbLemParams: ell > 1");
  ProbLemParams p;
  p.n = n;
  p.ell = ell;
  p.psi = 0.1;
  p.phi = 1.0 / (4.0 * ell);
  p.xi = std::min(p.phi / (12.0 * ell), p.psi / (2.0 * ell));
  p.theta = 2.0 * ell * ell / (p.xi * p.xi);
  p.zeta = p.psi / (24.0 * p.theta * p.theta * ell * ell);
  const double first =
      n > 1 ? p.xi * p.xi / (4.0 * (n - 1) * p.theta * p.theta * ell * ell)
            : std::numeric_limits<double>::infinity();
  const double second = p.psi * p.psi * n /
                        (48.0 * 48.0 * std::pow(p.theta, 6.0) * std::pow(ell, 6.0));
  p.alpha = std::min({first, second, 0.5});
  p.eta = std::min(p.psi / (3.0 * p.theta * ell), p.phi / 2.0);
  return p;
}

RayCheck check_pointwise_ray(const Vec& x, const Polytope& X,
                             const Polytope& Y, double ell) {
  if (!ball_sandwich_check(X, ell, 1e-7) || !ball_sandwich_check(Y, ell, 1e-7))
    throw PreconditionError("check_pointwise_ray: ball sandwich violated");
  RayCheck out;
  if (Y.contains(x, 1e-12)) {
    out.pass = true;
    out.vacuous = true;
    return out;
  }
  const double s = Y.radial_gauge(x);
  const Vec y_x = s * x;
  out.segment = (x - y_x).norm();
  out.dist = dist_to_convex(x, Y);
  out.ratio = out.segment / (ell * ell * out.dist);
  out.pass = out.segment <= ell * ell * out.dist * (1.0 + 1e-6);
  return out;
}

SdVsDistance check_sd_vs_distance(const Polytope& X, const Polytope& Y,
                                  double ell, int refinement) {
  const double vx = X.volume();
  const double vy = Y.volume();
  if (std::abs(vx - vy) > 1e-6 * std::max(vx, vy))
    throw PreconditionError("check_sd_vs_distance: unequal volumes");
  if (!ball_sandwich_check(X, ell, 1e-7) || !ball_sandwich_check(Y, ell, 1e-7))
    throw PreconditionError("check_sd_vs_distance: ball sandwich violated");
  const int n = X.dim();

  // Grid symmetric difference over the shared bounding box.
  const double h = 2.0 * ell / (8.0 * refinement);
  int64_t diff = 0;
  std::vector<int64_t> idx(n);
  const int64_t lim = static_cast<int64_t>(std::ceil(ell / h)) + 1;
  for (int k = 0; k < n; ++k) idx[k] = -lim;
  Vec p(n);
  while (true) {
    for (int k = 0; k < n; ++k) p[k] = h * (idx[k] + 0.5);
    const bool ix = X.contains(p, -1e-12);
    const bool iy = Y.contains(p, -1e-12);
    if (ix != iy) ++diff;
    int k = 0;
    for (; k < n; ++k) {
      if (++idx[k] <= lim) break;
      idx[k] = -lim;
    }
    if (k == n) break;
  }

  SdVsDistance out;
  out.sym_diff = std::pow(h, n) * static_cast<double>(diff);
  BoundaryMesh mesh = boundary_quadrature(X, 4 * refinement);
  for (std::size_t f = 0; f < mesh.facets.size(); ++f)
    out.boundary_integral +=
        mesh.facets[f].area * dist_to_convex(mesh.facet_centroid(f), Y);
  const double tiny = std::pow(h, n);
  if (out.sym_diff <= tiny && out.boundary_integral <= 1e-9) {
    out.undefined = true;
    out.ratio = 0.0;
  } else {
    out.ratio = out.sym_diff / out.boundary_integral;
  }
  return out;
}

namespace {

// Inward facet normals of a simplex, indexed opposite each vertex.
std::vector<Vec> inward_normals(const std::vector<Vec>& simplex) {
  const int n = static_cast<int>(simplex.size()) - 1;
  std::vector<Vec> normals(simplex.size());
  if (n == 1) {
    normals[0] = (simplex[0] - simplex[1]).normalized();
    normals[1] = -normals[0];
    return normals;
  }
  Mat e(n, n);
  for (std::size_t i = 0; i < simplex.size(); ++i) {
    int col = 0;
    std::size_t base = (i == 0) ? 1 : 0;
    for (std::size_t j = 0; j < simplex.size(); ++j) {
      if (j == i || j == base) continue;
      e.col(col++) = simplex[j] - simplex[base];
    }
    // Normal orthogonal to the facet spanned by all vertices but i.
    Eigen::FullPivLU<Mat> lu(e.leftCols(col).transpose());
    Mat kernel = lu.kernel();
    Vec nrm = kernel.col(0);
    nrm.normalize();
    if (nrm.dot(simplex[i] - simplex[base]) < 0) nrm = -nrm;
    normals[i] = nrm;
  }
  return normals;
}

void require_ball_sandwich(const std::vector<Vec>& simplex, double r,
                           Vec& center) {
  const int n = static_cast<int>(simplex.size()) - 1;
  center = Vec::Zero(n);
  for (const auto& v : simplex) center += v;
  center /= static_cast<double>(simplex.size());
  std::vector<Vec> normals = inward_normals(simplex);
  for (std::size_t i = 0; i < simplex.size(); ++i) {
    std::size_t on = (i == 0) ? 1 : 0;
    const double dist = normals[i].dot(center - simplex[on]);
    if (dist < 1.0 / r - 1e-12)
      throw PreconditionError("simplex: inball B(u,1/r) violated");
  }
  for (const auto& v : simplex)
    if ((v - center).norm() > r + 1e-12)
      throw PreconditionError("simplex: outball B(u,r) violated");
}

}  // namespace

SimplexNormalsReport check_simplex_normals(const std::vector<Vec>& simplex,
                                           double r, int excluded_facet,
                                           uint64_t seed) {
  const int n = static_cast<int>(simplex.size()) - 1;
  if (n < 1) throw PreconditionError("check_simplex_normals: need a simplex");
  Vec center;
  require_ball_sandwich(simplex, r, center);
  std::vector<Vec> normals = inward_normals(simplex);

  std::vector<Vec> active;
  for (int i = 0; i <= n; ++i)
    if (i != excluded_facet) active.push_back(normals[i]);

  auto value = [&](const Vec& v) {
    double m = 0;
    for (const auto& f : active) m = std::max(m, std::abs(f.dot(v)));
    return m;
  };

  SimplexNormalsReport rep;
  rep.sigma = std::numeric_limits<double>::infinity();
  if (n == 1) {
    Vec v = Vec::Constant(1, 1.0);
    rep.sigma = value(v);
    rep.worst_direction = v;
  } else if (n == 2) {
    double best_angle = 0;
    for (int i = 0; i < 100000; ++i) {
      const double a = 2.0 * M_PI * i / 100000;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      const double m = value(v);
      if (m < rep.sigma) { rep.sigma = m; best_angle = a; }
    }
    // Golden-section refinement around the grid minimum.
    double lo = best_angle - 2.0 * M_PI / 100000;
    double hi = best_angle + 2.0 * M_PI / 100000;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int round = 0; round < 3; ++round)
      for (int it = 0; it < 40; ++it) {
        const double m1 = hi - gr * (hi - lo);
        const double m2 = lo + gr * (hi - lo);
        Vec v1(2), v2(2);
        v1 << std::cos(m1), std::sin(m1);
        v2 << std::cos(m2), std::sin(m2);
        if (value(v1) < value(v2)) hi = m2;
        else lo = m1;
      }
    Vec v(2);
    v << std::cos(0.5 * (lo + hi)), std::sin(0.5 * (lo + hi));
    const double m = value(v);
    if (m < rep.sigma) { rep.sigma = m; rep.worst_direction = v; }
    else {
      rep.worst_direction = Vec(2);
      rep.worst_direction << std::cos(best_angle), std::sin(best_angle);
    }
  } else {
    // Fibonacci lattice (n == 3) or random directions, then Nelder-Mead
    // refinement on the sphere.
    Rng rng(seed);
    Vec best;
    const int m_dirs = 100000;
    for (int i = 0; i < m_dirs; ++i) {
      Vec v;
      if (n == 3) {
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        const double z = 1.0 - 2.0 * (i + 0.5) / m_dirs;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = 2.0 * M_PI * i / golden;
        v = Vec(3);
        v << rho * std::cos(a), rho * std::sin(a), z;
      } else {
        v = rng.unit_vector(n);
      }
      const double val = value(v);
      if (val < rep.sigma) { rep.sigma = val; best = v; }
    }
    // Local refinement: Nelder-Mead in the tangent space of the best
    // direction.
    Mat basis(n, n - 1);
    {
      Eigen::FullPivLU<Mat> lu(best.transpose());
      Mat kernel = lu.kernel();
      Eigen::HouseholderQR<Mat> qr(kernel);
      basis = qr.householderQ() * Mat::Identity(n, n - 1);
    }
    auto eval_t = [&](const Vec& tvec) {
      Vec v = (best + basis * tvec).normalized();
      return value(v);
    };
    Vec t0 = Vec::Zero(n - 1);
    std::vector<Vec> simplex_t{t0};
    std::vector<double> fv{eval_t(t0)};
    for (int k = 0; k < n - 1; ++k) {
      Vec t = t0;
      t[k] += 1e-3;
      simplex_t.push_back(t);
      fv.push_back(eval_t(t));
    }
    for (int it = 0; it < 200; ++it) {
      std::size_t worst = 0, bi = 0;
      for (std::size_t i = 1; i < fv.size(); ++i) {
        if (fv[i] > fv[worst]) worst = i;
        if (fv[i] < fv[bi]) bi = i;
      }
      Vec c = Vec::Zero(n - 1);
      for (std::size_t i = 0; i < simplex_t.size(); ++i)
        if (i != worst) c += simplex_t[i];
      c /= static_cast<double>(simplex_t.size() - 1);
      Vec refl = c + (c - simplex_t[worst]);
      const double fr = eval_t(refl);
      if (fr < fv[worst]) { simplex_t[worst] = refl; fv[worst] = fr; }
      else {
        for (std::size_t i = 0; i < simplex_t.size(); ++i)
          if (i != bi) {
            simplex_t[i] = simplex_t[bi] + 0.5 * (simplex_t[i] - simplex_t[bi]);
            fv[i] = eval_t(simplex_t[i]);
          }
      }
    }
    for (std::size_t i = 0; i < fv.size(); ++i)
      if (fv[i] < rep.sigma) {
        rep.sigma = fv[i];
        best = (best + basis * simplex_t[i]).normalized();
      }
    rep.worst_direction = best;
  }
  rep.pass = rep.sigma > 1e-9;
  return rep;
}

ConelikeBallReport construct_conelike_ball(const Vec& w, Vec f, double r,
                                           double sigma, const Vec& y1,
                                           const Vec& y2, int samples,
                                           uint64_t seed) {
  const int n = static_cast<int>(w.size());
  if (!(r > 0) || !(sigma > 0) || sigma > 1)
    throw PreconditionError("conelike ball: need r > 0 and sigma in (0,1]");
  const double fn = f.norm();
  if (!(fn > 0)) throw PreconditionError("conelike ball: zero normal");
  f /= fn;
  if (w.norm() > r * (1 + 1e-12))
    throw PreconditionError("conelike ball: |w| must be at most r");
  if (std::abs(f.dot(w)) > 1e-9 * std::max(1.0, w.norm()))
    throw PreconditionError("conelike ball: w must lie in the hyperplane");
  if (y1.dot(f) < -1e-12 * y1.norm())
    throw PreconditionError("conelike ball: <y1,f> must be nonnegative");
  if (y2.dot(f) < sigma * y2.norm() * (1 - 1e-12))
    throw PreconditionError("conelike ball: <y2,f> must reach sigma");

  ConelikeBallReport rep;
  rep.k = sigma / (4.0 * r);
  rep.center = w + f / (2.0 * r);
  const double eps = 1.0 / (8.0 * r * r);

  Rng rng(seed);
  int half_mass = 0;
  rep.containment_pass = rep.cone_pass = rep.distance_pass = true;
  rep.worst_distance = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Vec x = rep.center + rng.in_ball(n, rep.k);
    // (1) x in (1-eps)(B(w,1/r) cap H+), scaling about the origin.
    if ((x - (1 - eps) * w).norm() > (1 - eps) / r + 1e-12 ||
        f.dot(x) < -1e-12)
      rep.containment_pass = false;
    const Vec d = x - w;
    const double dn = d.norm();
    if (y1.dot(d) >= 0) ++half_mass;
    if (y2.dot(d) < (sigma / 4.0 - 1e-12) * y2.norm() * dn)
      rep.cone_pass = false;
    rep.worst_distance = std::min(rep.worst_distance, dn);
    if (dn < 1.0 / (4.0 * r) - 1e-12) rep.distance_pass = false;
  }
  rep.half_mass_fraction = static_cast<double>(half_mass) / samples;
  const double slack = 3.0 * std::sqrt(0.25 / samples);
  rep.half_mass_pass = rep.half_mass_fraction >= 0.5 - slack;
  return rep;
}

FacetTouchReport facet_touch_point(const std::vector<Vec>& simplex,
                                   int facet_index, double r, int samples,
                                   uint64_t seed) {
  const int n = static_cast<int>(simplex.size()) - 1;
  Vec u;
  require_ball_sandwich(simplex, r, u);
  std::vector<Vec> normals = inward_normals(simplex);
  const Vec apex = simplex[facet_index];
  const Vec f = normals[facet_index];  // inward normal of the facet
  std::vector<Vec> facet;
  for (int i = 0; i <= n; ++i)
    if (i != facet_index) facet.push_back(simplex[i]);

  // Plane offset from any facet vertex.
  const double b = f.dot(facet[0]);
  const double denom = f.dot(u - apex);
  if (std::abs(denom) < 1e-14)
    throw PreconditionError("facet_touch_point: degenerate ray");
  const double s = (b - f.dot(apex)) / denom;
  FacetTouchReport rep;
  rep.point = apex + s * (u - apex);

  Polytope sp = Polytope::hull_of_points(n, simplex);
  Rng rng(seed);

  rep.inner_ball_in_simplex = true;
  rep.plane_ball_in_facet = true;
  rep.facet_in_big_ball = true;

  // Tangent basis of the facet plane (empty in 1D).
  Mat basis;
  if (n >= 2) {
    Eigen::FullPivLU<Mat> lu(f.transpose());
    Mat kernel = lu.kernel();
    Eigen::HouseholderQR<Mat> qr(kernel);
    basis = qr.householderQ() * Mat::Identity(n, n - 1);
  }

  for (int t = 0; t < samples; ++t) {
    // B(v, 1/r) cap H+ inside the simplex.
    Vec x = rep.point + rng.in_ball(n, 1.0 / r);
    if (f.dot(x - rep.point) >= 0 && !sp.contains(x, 1e-9))
      rep.inner_ball_in_simplex = false;

    // B(v, 1/r) cap H inside the facet.
    if (n >= 2) {
      Vec tv = rng.in_ball(n - 1, 1.0 / r);
      Vec y = rep.point + basis * tv;
      if (dist_to_simplex(y, facet) > 1e-9) rep.plane_ball_in_facet = false;
    }

    // Facet point via Dirichlet weights inside B(v, 2r).
    Vec bc(n);
    double tot = 0;
    for (int k = 0; k < n; ++k) {
      bc[k] = -std::log(std::max(1e-300, rng.uniform01()));
      tot += bc[k];
    }
    Vec fp = Vec::Zero(n);
    for (int k = 0; k < n; ++k) fp += (bc[k] / tot) * facet[k];
    if ((fp - rep.point).norm() > 2.0 * r + 1e-12)
      rep.facet_in_big_ball = false;
  }
  for (const auto& v : facet)
    if ((v - rep.point).norm() > 2.0 * r + 1e-12)
      rep.facet_in_big_ball = false;
  return rep;
}

std::optional<double> max_filling_mu(double t, double eps, double ell) {
  if (!(t > 0) || !(eps > 0) || !(ell > 1))
    throw PreconditionError("max_filling_mu: bad parameters");
  const double q = 1.0 / (1.0 / (ell * ell) + 1.0);
  const double s = t * eps / 4.0;
  const double denom = 1.0 - (1.0 - q) * s;
  if (denom <= 0) return 1.0;
  const double mu = (1.0 - q) * s / denom;
  if (!(mu > 0)) return std::nullopt;
  return std::min(1.0, mu);
}

namespace {

// Inner rasterization of a polytope on the grid of a reference set: cells
// whose closed cube lies inside the body.
VoxelSet inner_rasterize_on(const Polytope& p, const VoxelSet& ref) {
  const int n = ref.dim();
  const double h = ref.spacing();
  Vec lo = p.vertices()[0], hi = lo;
  for (const auto& v : p.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::vector<int64_t> ilo(n), ihi(n), idx(n);
  for (int k = 0; k < n; ++k) {
    ilo[k] = static_cast<int64_t>(std::floor((lo[k] - ref.origin()[k]) / h)) - 1;
    ihi[k] = static_cast<int64_t>(std::ceil((hi[k] - ref.origin()[k]) / h)) + 1;
    idx[k] = ilo[k];
  }
  std::vector<Cell> cells;
  Vec corner(n);
  const int corners = 1 << n;
  while (true) {
    bool inside = true;
    for (int m = 0; m < corners && inside; ++m) {
      for (int k = 0; k < n; ++k)
        corner[k] = ref.origin()[k] + h * (idx[k] + ((m >> k) & 1));
      if (!p.contains(corner, 1e-12)) inside = false;
    }
    if (inside) {
      Cell c{};
      for (int k = 0; k < n; ++k) c[k] = static_cast<int32_t>(idx[k]);
      cells.push_back(c);
    }
    int k = 0;
    for (; k < n; ++k) {
      if (++idx[k] <= ihi[k]) break;
      idx[k] = ilo[k];
    }
    if (k == n) break;
  }
  return VoxelSet(n, h, ref.origin(), std::move(cells));
}

}  // namespace

FillingReport check_filling(const VoxelSet& a, const VoxelSet& b,
                            const Polytope& c_a, const Polytope& c_b,
                            const Polytope& k, const Vec& x, const Vec& y,
                            double t, double eps, double ell, double mu) {
  FillingReport rep;
  auto mu_max = max_filling_mu(t, eps, ell);
  if (!mu_max)
    throw PreconditionError("check_filling: no positive mu satisfies the constraint");
  rep.mu_max = *mu_max;
  if (mu > *mu_max * (1 + 1e-9))
    throw PreconditionError("check_filling: mu exceeds the maximal choice " +
                            std::to_string(*mu_max));

  // Light envelope sanity: K within the certified bodies.
  for (const auto& v : k.vertices()) {
    if (c_a.signed_violation(v - x) >
        2.0 * a.spacing() * std::sqrt(static_cast<double>(a.dim())))
      throw PreconditionError("check_filling: envelope condition violated for C_A");
    if (c_b.signed_violation(v - y) >
        2.0 * b.spacing() * std::sqrt(static_cast<double>(b.dim())))
      throw PreconditionError("check_filling: envelope condition violated for C_B");
  }

  const Polytope c_a_shrunk = c_a.scaled(1.0 - eps / 4.0);
  VoxelSet inner_a = inner_rasterize_on(c_a_shrunk, a);
  VoxelSet inner_b = inner_rasterize_on(c_b, b);
  if (inner_a.empty() || inner_b.empty()) {
    rep.pass = true;  // nothing representable at this resolution
    return rep;
  }
  MinkowskiResult rhs = minkowski_combine(inner_a, inner_b, t);
  MinkowskiResult lhs = minkowski_combine(a, b, t);
  if (!rhs.sum.same_grid(lhs.sum))
    throw PreconditionError("check_filling: incompatible grids after combine");
  std::size_t escaped = 0;
  for (const auto& c : rhs.sum.cells())
    if (!lhs.sum.contains_cell(c)) ++escaped;
  rep.escaped_fraction =
      static_cast<double>(escaped) / static_cast<double>(rhs.sum.cell_count());
  rep.pass = escaped == 0;
  return rep;
}

}  // namespace bmstab
