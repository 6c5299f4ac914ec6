#include "bmstab/position.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace bmstab {

namespace {

// Gauge of p with respect to the halfspace intersection {<n,x> <= b},
// scaling about the origin; requires every offset positive.
double hs_gauge(const std::vector<Halfspace>& hs, const Vec& p) {
  double g = 0;
  for (const auto& h : hs) {
    const double d = h.normal.dot(p);
    if (d > 0) g = std::max(g, d / h.offset);
  }
  return g;
}

// Max gauge slope over a cell of spacing h: how much the gauge can change
// between a cell center and any point of the cell.
double gauge_cell_slack(const std::vector<Halfspace>& hs, double h) {
  double s = 0;
  for (const auto& hsp : hs)
    s = std::max(s, 0.5 * h * hsp.normal.cwiseAbs().sum() / hsp.offset);
  return s;
}

}  // namespace

SandwichResult sandwich_check(const VoxelSet& x, const VoxelSet& y,
                              double eta) {
  SandwichResult out;
  if (eta < 0) throw PreconditionError("sandwich_check: eta must be >= 0");
  if (x.dim() != y.dim()) {
    out.reason = "dimension mismatch";
    return out;
  }
  if (x.empty() || y.empty()) {
    out.reason = "empty input";
    return out;
  }
  Polytope hx = convex_hull(x);
  Polytope hy = convex_hull(y);
  if (hx.is_degenerate() || hy.is_degenerate()) {
    out.reason = "degenerate hull";
    return out;
  }
  std::vector<Halfspace> q = hx.halfspaces();
  const auto& hyh = hy.halfspaces();
  q.insert(q.end(), hyh.begin(), hyh.end());
  for (const auto& h : q)
    if (!(h.offset > 0)) {
      out.reason = "origin not interior to co(X) cap co(Y)";
      return out;
    }

  // Largest s with s*(co X cap co Y) inside both sets at cell-center
  // resolution: the minimum gauge over unoccupied cell centers.
  double s_max = 1.0;
  auto shrink_for = [&](const VoxelSet& set) {
    Cell lo, hi;
    set.bounding_box(lo, hi);
    // Scan the witness bounding region on this set's grid.
    std::vector<int32_t> idx(set.dim());
    for (int k = 0; k < set.dim(); ++k) idx[k] = lo[k] - 1;
    while (true) {
      Cell c{};
      for (int k = 0; k < set.dim(); ++k) c[k] = idx[k];
      const Vec center = set.cell_center(c);
      if (!set.contains_cell(c)) {
        const double g = hs_gauge(q, center);
        if (g < s_max) s_max = std::max(0.0, g);
      }
      int k = 0;
      for (; k < set.dim(); ++k) {
        if (++idx[k] <= hi[k] + 1) break;
        idx[k] = lo[k] - 1;
      }
      if (k == set.dim()) break;
    }
  };
  shrink_for(x);
  shrink_for(y);

  if (!(s_max > 0)) {
    out.reason = "witness collapses to the origin at grid resolution";
    return out;
  }

  // Upper containment X, Y subset (1+eta) * s * Q with one cell of slack.
  double worst = 0;
  auto check_upper = [&](const VoxelSet& set) {
    const double slack = gauge_cell_slack(q, set.spacing()) +
                         1e-9;
    for (const auto& c : set.cells()) {
      const double g = hs_gauge(q, set.cell_center(c));
      const double excess = g / ((1.0 + eta) * s_max) - 1.0 - slack;
      worst = std::max(worst, excess);
    }
  };
  check_upper(x);
  check_upper(y);
  out.worst_upper_violation = std::max(0.0, worst);
  out.scale = s_max;
  if (worst > 0) {
    out.reason = "upper containment fails";
    return out;
  }
  std::vector<Halfspace> scaled = q;
  for (auto& h : scaled) h.offset *= s_max;
  out.p = Polytope::from_halfspaces(x.dim(), std::move(scaled));
  out.ok = true;
  return out;
}

BoundedPositionReport bounded_position(const VoxelSet& x, const VoxelSet& y,
                                       double eta) {
  SandwichResult sw = sandwich_check(x, y, eta);
  if (!sw.ok)
    throw PreconditionError("bounded_position: not an eta-sandwich (" +
                            sw.reason + ")");
  const int n = x.dim();
  const std::vector<Vec>& pv = sw.p.vertices();
  if (pv.size() < static_cast<std::size_t>(n) + 1)
    throw PreconditionError("bounded_position: witness has too few vertices");

  // Greedy maximum-volume inscribed simplex over the witness vertices,
  // then swap-improvement sweeps.
  std::vector<int> pick;
  {
    Vec c = Vec::Zero(n);
    for (const auto& v : pv) c += v;
    c /= static_cast<double>(pv.size());
    int far = 0;
    double best = -1;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double t = (pv[i] - c).norm();
      if (t > best) { best = t; far = static_cast<int>(i); }
    }
    pick.push_back(far);
    Mat basis(n, 0);
    while (static_cast<int>(pick.size()) < n + 1) {
      int arg = -1;
      double bestr = -1;
      Vec bestdir;
      for (std::size_t i = 0; i < pv.size(); ++i) {
        Vec r = pv[i] - pv[pick[0]];
        if (basis.cols() > 0) r -= basis * (basis.transpose() * r);
        const double t = r.norm();
        if (t > bestr) { bestr = t; arg = static_cast<int>(i); bestdir = r; }
      }
      if (bestr < 1e-12)
        throw PreconditionError("bounded_position: witness not full-dimensional");
      pick.push_back(arg);
      basis.conservativeResize(n, basis.cols() + 1);
      basis.col(basis.cols() - 1) = bestdir / bestr;
    }
  }
  auto simplex_vol = [&](const std::vector<int>& ids) {
    Mat e(n, n);
    for (int i = 1; i <= n; ++i) e.col(i - 1) = pv[ids[i]] - pv[ids[0]];
    return std::abs(e.determinant());
  };
  double vol = simplex_vol(pick);
  for (int sweep = 0; sweep < 12; ++sweep) {
    bool improved = false;
    for (int slot = 0; slot <= n; ++slot)
      for (std::size_t cand = 0; cand < pv.size(); ++cand) {
        std::vector<int> trial = pick;
        trial[slot] = static_cast<int>(cand);
        const double v = simplex_vol(trial);
        if (v > vol * (1 + 1e-12)) {
          vol = v;
          pick = trial;
          improved = true;
        }
      }
    if (!improved) break;
  }

  // Affine map sending the inscribed simplex onto the frame simplex.
  SimplexFrame frame = regular_simplex(n);
  Mat src(n, n), dst(n, n);
  for (int i = 1; i <= n; ++i) {
    src.col(i - 1) = pv[pick[i]] - pv[pick[0]];
    dst.col(i - 1) = frame.vertices[i] - frame.vertices[0];
  }
  BoundedPositionReport rep;
  rep.linear = dst * src.inverse();
  rep.shift = frame.vertices[0] - rep.linear * pv[pick[0]];
  rep.lambda_required = static_cast<double>(n) * n +
                        static_cast<double>(n) * n * n * eta;

  Polytope s = frame.polytope();
  const auto& shs = s.halfspaces();
  auto gauge_s = [&](const Vec& p) { return hs_gauge(shs, p); };

  // lambda from the mapped cell corners of both sets.
  double lam = 0;
  for (const VoxelSet* setp : {&x, &y}) {
    const VoxelSet& set = *setp;
    for (const auto& pt : set.boundary_corner_points())
      lam = std::max(lam, gauge_s(rep.linear * pt + rep.shift));
  }
  rep.lambda_measured = lam;
  rep.lambda_ok = lam <= rep.lambda_required * (1 + 1e-9);

  // Sampled containment S subset m(X) cap m(Y): map a deterministic lattice
  // of frame-simplex points back through m^{-1}.
  const Mat inv = (rep.linear).inverse();
  int escapes = 0, total = 0;
  const int grid = 40;
  Vec lo = s.vertices()[0], hi = s.vertices()[0];
  for (const auto& v : s.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::vector<int> idx(n, 0);
  while (true) {
    Vec p(n);
    for (int k = 0; k < n; ++k)
      p[k] = lo[k] + (hi[k] - lo[k]) * (idx[k] + 0.5) / grid;
    if (gauge_s(p) <= 1.0 - 1e-9) {
      ++total;
      const Vec back = inv * (p - rep.shift);
      if (!x.contains_point(back) || !y.contains_point(back)) ++escapes;
    }
    int k = 0;
    for (; k < n; ++k) {
      if (++idx[k] < grid) break;
      idx[k] = 0;
    }
    if (k == n) break;
  }
  rep.inner_escape_fraction =
      total ? static_cast<double>(escapes) / total : 1.0;
  rep.witness = sw.p.affine_image(rep.linear, rep.shift);
  return rep;
}

namespace {

// Fraction of the polytope's volume (sampled on the voxel grid) that fails
// the membership predicate.
template <typename Pred>
double escape_fraction(const Polytope& region, const VoxelSet& grid_ref,
                       Pred&& inside) {
  Vec lo(region.dim()), hi(region.dim());
  lo = region.vertices()[0];
  hi = lo;
  for (const auto& v : region.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double h = grid_ref.spacing();
  int64_t total = 0, escaped = 0;
  const int n = region.dim();
  std::vector<int64_t> ilo(n), ihi(n), idx(n);
  for (int k = 0; k < n; ++k) {
    ilo[k] = static_cast<int64_t>(std::floor((lo[k] - grid_ref.origin()[k]) / h)) - 1;
    ihi[k] = static_cast<int64_t>(std::ceil((hi[k] - grid_ref.origin()[k]) / h)) + 1;
    idx[k] = ilo[k];
  }
  Vec center(n);
  while (true) {
    for (int k = 0; k < n; ++k)
      center[k] = grid_ref.origin()[k] + h * (idx[k] + 0.5);
    if (region.contains(center, -1e-12)) {
      ++total;
      if (!inside(center)) ++escaped;
    }
    int k = 0;
    for (; k < n; ++k) {
      if (++idx[k] <= ihi[k]) break;
      idx[k] = ilo[k];
    }
    if (k == n) break;
  }
  if (total == 0) return 0.0;
  return static_cast<double>(escaped) / static_cast<double>(total);
}

}  // namespace

ConelikeReport conelike_check(const ConelikeCertificate& cert,
                              double escape_tol) {
  ConelikeReport rep;
  const int n = cert.a.dim();
  // Certificates built from voxel data place hull corner points up to one
  // cell diagonal outside the ideal bodies; containments get that much
  // slack.
  const double grid_slack =
      1.05 * std::min(cert.a.spacing(), cert.b.spacing()) *
      std::sqrt(static_cast<double>(n));

  // Condition 1: B(o,1/ell) subset C_A, C_B subset B(o,ell).
  {
    const bool a_ok = ball_sandwich_check(cert.c_a, cert.ell, grid_slack);
    const bool b_ok = ball_sandwich_check(cert.c_b, cert.ell, grid_slack);
    rep.ball_sandwich.pass = a_ok && b_ok;
    double worst = 0;
    for (const Polytope* p : {&cert.c_a, &cert.c_b}) {
      for (const auto& h : p->halfspaces())
        worst = std::max(worst, 1.0 / cert.ell - h.offset);
      for (const auto& v : p->vertices())
        worst = std::max(worst, v.norm() - cert.ell);
    }
    rep.ball_sandwich.worst = worst;
    if (!rep.ball_sandwich.pass) rep.ball_sandwich.note = "ball sandwich violated";
  }

  // Condition 2: S'' subset A-z, C_A-z, B-z, C_B-z subset lambda S''.
  {
    double worst = 0;
    const Polytope s_up = cert.s_dd.scaled(cert.lambda);
    for (const Polytope* p : {&cert.c_a, &cert.c_b}) {
      for (const auto& v : cert.s_dd.vertices())
        worst = std::max(worst, p->signed_violation(v + cert.z));
      for (const auto& v : p->vertices())
        worst = std::max(worst, s_up.signed_violation(v - cert.z));
    }
    double frac = 0;
    frac = std::max(frac, escape_fraction(cert.s_dd, cert.a, [&](const Vec& p) {
      return cert.a.contains_point(p + cert.z);
    }));
    frac = std::max(frac, escape_fraction(cert.s_dd, cert.b, [&](const Vec& p) {
      return cert.b.contains_point(p + cert.z);
    }));
    // Upper side for the voxel sets: cells escaping lambda S''.
    auto upper_escape = [&](const VoxelSet& s) {
      int64_t bad = 0;
      for (const auto& c : s.cells())
        if (s_up.signed_violation(s.cell_center(c) - cert.z) > grid_slack)
          ++bad;
      return static_cast<double>(bad) / static_cast<double>(s.cell_count());
    };
    frac = std::max(frac, upper_escape(cert.a));
    frac = std::max(frac, upper_escape(cert.b));
    rep.cone_slice.worst = std::max(worst, frac);
    rep.cone_slice.pass = worst <= grid_slack && frac <= escape_tol;
    if (!rep.cone_slice.pass) rep.cone_slice.note = "cone-slice frame violated";
  }

  // Condition 3: K subset A+x, C_A+x, B+y, C_B+y subset (1+mu) K.
  {
    double worst = 0;
    const Polytope k_up = cert.k.scaled(1.0 + cert.mu);
    for (const auto& v : cert.k.vertices()) {
      worst = std::max(worst, cert.c_a.signed_violation(v - cert.x));
      worst = std::max(worst, cert.c_b.signed_violation(v - cert.y));
    }
    for (const auto& v : cert.c_a.vertices())
      worst = std::max(worst, k_up.signed_violation(v + cert.x));
    for (const auto& v : cert.c_b.vertices())
      worst = std::max(worst, k_up.signed_violation(v + cert.y));
    double frac = 0;
    frac = std::max(frac, escape_fraction(cert.k, cert.a, [&](const Vec& p) {
      return cert.a.contains_point(p - cert.x);
    }));
    frac = std::max(frac, escape_fraction(cert.k, cert.b, [&](const Vec& p) {
      return cert.b.contains_point(p - cert.y);
    }));
    auto upper_escape = [&](const VoxelSet& s, const Vec& shift) {
      int64_t bad = 0;
      for (const auto& c : s.cells())
        if (k_up.signed_violation(s.cell_center(c) + shift) > grid_slack)
          ++bad;
      return static_cast<double>(bad) / static_cast<double>(s.cell_count());
    };
    frac = std::max(frac, upper_escape(cert.a, cert.x));
    frac = std::max(frac, upper_escape(cert.b, cert.y));
    rep.envelope.worst = std::max(worst, frac);
    rep.envelope.pass = worst <= grid_slack && frac <= escape_tol;
    if (!rep.envelope.pass) rep.envelope.note = "envelope condition violated";
  }
  return rep;
}

}  // namespace bmstab
