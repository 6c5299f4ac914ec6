#include "bmstab/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include <json.hpp>

#include "bmstab/rng.hpp"
#include "bmstab/set_arith.hpp"

namespace bmstab {

Polytope SimplexFrame::polytope() const {
  return Polytope::hull_of_points(dim, vertices);
}

SimplexFrame regular_simplex(int n) {
  if (n < 1) throw PreconditionError("regular_simplex: n must be >= 1");
  // Center the standard basis of R^{n+1} and project onto the complement of
  // the all-ones direction, then rescale to unit volume.
  Mat q(n + 1, n + 1);
  q.setIdentity();
  q.array() -= 1.0 / (n + 1);
  Vec ones = Vec::Constant(n + 1, 1.0);
  Eigen::FullPivLU<Mat> lu(ones.transpose());
  Mat kernel = lu.kernel();  // (n+1) x n
  Eigen::HouseholderQR<Mat> qr(kernel);
  Mat basis = qr.householderQ() * Mat::Identity(n + 1, n);

  std::vector<Vec> verts;
  for (int i = 0; i <= n; ++i) verts.push_back(basis.transpose() * q.row(i).transpose());

  Mat edges(n, n);
  for (int i = 1; i <= n; ++i) edges.col(i - 1) = verts[i] - verts[0];
  double vol = std::abs(edges.determinant());
  for (int i = 2; i <= n; ++i) vol /= i;
  const double scale = std::pow(1.0 / vol, 1.0 / n);
  for (auto& v : verts) v *= scale;

  SimplexFrame frame;
  frame.dim = n;
  frame.vertices = std::move(verts);
  return frame;
}

ConeFamily::ConeFamily(SimplexFrame frame) : frame_(std::move(frame)) {
  const int n = frame_.dim;
  cones_.resize(n + 1);
  Mat m(n, n);
  for (int i = 0; i <= n; ++i) {
    int col = 0;
    for (int j = 0; j <= n; ++j) {
      if (j == i) continue;
      m.col(col++) = frame_.vertices[j];
    }
    // x in cone i iff m^{-1} x >= 0 componentwise.
    const Mat inv = m.inverse();
    for (int r = 0; r < n; ++r) {
      Halfspace h;
      h.normal = -inv.row(r).transpose();
      const double nn = h.normal.norm();
      h.normal /= nn;
      h.offset = 0.0;
      cones_[i].push_back(std::move(h));
    }
  }
}

bool ConeFamily::in_cone(int i, const Vec& p, double tol) const {
  const double scale = std::max(1.0, p.norm());
  for (const auto& h : cones_[i])
    if (h.normal.dot(p) > tol * scale) return false;
  return true;
}

int ConeFamily::membership(const Vec& p) const {
  for (int i = 0; i < count(); ++i)
    if (in_cone(i, p)) return i;
  // Numerically outside every closed cone; take the least-violating one.
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count(); ++i) {
    double v = 0;
    for (const auto& h : cones_[i]) v = std::max(v, h.normal.dot(p));
    if (v < best_v) { best_v = v; best = i; }
  }
  return best;
}

std::vector<double> cone_masses(const VoxelSet& x, const ConeFamily& f,
                                const Vec& shift) {
  const int n = x.dim();
  if (n != f.dim()) throw PreconditionError("cone_masses: dimension mismatch");
  const double h = x.spacing();
  const double cell_vol = std::pow(h, n);
  std::vector<double> masses(f.count(), 0.0);

  // Shifted halfspace offsets: <nrm, p + shift> <= 0 over the cell box.
  std::vector<std::vector<Halfspace>> shifted(f.count());
  for (int i = 0; i < f.count(); ++i) {
    shifted[i] = f.cone_halfspaces(i);
    for (auto& hs : shifted[i]) hs.offset = -hs.normal.dot(shift);
  }

  Vec lo(n), hi(n), center(n);
  for (const auto& c : x.cells()) {
    for (int k = 0; k < n; ++k) {
      lo[k] = x.origin()[k] + h * c[k];
      hi[k] = lo[k] + h;
      center[k] = lo[k] + 0.5 * h;
    }
    int full_cone = -1;
    bool straddles = false;
    for (int i = 0; i < f.count() && full_cone < 0; ++i) {
      bool inside = true;
      for (const auto& hs : shifted[i]) {
        const double margin = 0.5 * h * hs.normal.cwiseAbs().sum();
        const double d = hs.normal.dot(center) - hs.offset;
        if (d > margin) { inside = false; break; }       // box fully outside
        if (d > -margin) { inside = false; straddles = true; break; }
      }
      if (inside) full_cone = i;
    }
    if (full_cone >= 0) {
      masses[full_cone] += cell_vol;
      continue;
    }
    if (!straddles) {
      // Box lies strictly outside every cone's slab test; classify by the
      // center as a fallback (should not happen for a partition).
      straddles = true;
    }
    for (int i = 0; i < f.count(); ++i)
      masses[i] += clipped_box_volume(n, lo, hi, shifted[i]);
  }
  return masses;
}

std::vector<VoxelSet> cone_partition(const VoxelSet& x, const ConeFamily& f) {
  std::vector<std::vector<Cell>> buckets(f.count());
  for (const auto& c : x.cells())
    buckets[f.membership(x.cell_center(c))].push_back(c);
  std::vector<VoxelSet> parts;
  for (auto& b : buckets)
    parts.push_back(VoxelSet(x.dim(), x.spacing(), x.origin(), std::move(b)));
  return parts;
}

namespace {

struct Merit {
  const VoxelSet& b;
  const ConeFamily& f;
  const std::vector<double>& target;
  int evals = 0;

  double residual(const Vec& v, double& merit) {
    ++evals;
    std::vector<double> mb = cone_masses(b, f, v);
    merit = 0;
    double worst = 0;
    for (std::size_t i = 0; i < mb.size(); ++i) {
      const double d = target[i] - mb[i];
      merit += d * d;
      worst = std::max(worst, std::abs(d));
    }
    return worst;
  }
};

}  // namespace

BalanceResult balancing_translation(const VoxelSet& a, const VoxelSet& b,
                                    const ConeFamily& f, double tol,
                                    int max_evaluations, uint64_t seed) {
  const double va = a.volume();
  const double vb = b.volume();
  if (std::abs(va - vb) > 1e-9 * std::max(va, vb))
    throw PreconditionError("balancing_translation: volumes differ");
  if (tol <= 0) tol = 1e-6 * va;
  const int n = a.dim();

  BalanceResult out;
  out.masses_a = cone_masses(a, f, Vec::Zero(n));
  Merit merit{b, f, out.masses_a, 0};

  Vec best_v = Vec::Zero(n);
  double best_m = 0, best_r = 0;
  best_r = merit.residual(best_v, best_m);
  out.accepted_residuals.push_back(best_r);

  auto consider = [&](const Vec& v) {
    double m = 0;
    const double r = merit.residual(v, m);
    if (m < best_m) {
      best_m = m;
      best_v = v;
      if (r < best_r) {
        best_r = r;
        out.accepted_residuals.push_back(r);
      }
      return true;
    }
    return false;
  };

  Cell lo_a, hi_a, lo_b, hi_b;
  a.bounding_box(lo_a, hi_a);
  b.bounding_box(lo_b, hi_b);
  Vec span(n);
  for (int k = 0; k < n; ++k)
    span[k] = a.spacing() * (hi_a[k] - lo_a[k] + 1) +
              b.spacing() * (hi_b[k] - lo_b[k] + 1);

  Rng rng(seed);
  const Vec centroid_start = a.centroid() - b.centroid();
  for (int restart = 0; restart < 8 && best_r > tol; ++restart) {
    Vec v0 = best_v;
    if (restart == 0) v0 = centroid_start;
    else if (restart > 1) {
      v0 = centroid_start;
      for (int k = 0; k < n; ++k) v0[k] += rng.uniform(-0.5, 0.5) * span[k];
    }
    consider(v0);

    // Nelder-Mead on the squared-mass merit.
    std::vector<Vec> simplex{v0};
    for (int k = 0; k < n; ++k) {
      Vec p = v0;
      p[k] += 0.25 * span[k] * (restart == 0 ? 1.0 : rng.uniform(0.3, 1.0));
      simplex.push_back(p);
    }
    std::vector<double> fv(simplex.size());
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      double r = merit.residual(simplex[i], fv[i]);
      (void)r;
    }
    for (int iter = 0; iter < 400; ++iter) {
      if (merit.evals > max_evaluations) break;
      std::vector<std::size_t> ord(simplex.size());
      std::iota(ord.begin(), ord.end(), 0);
      std::sort(ord.begin(), ord.end(),
                [&](std::size_t i, std::size_t j) { return fv[i] < fv[j]; });
      const std::size_t worst = ord.back();
      Vec c = Vec::Zero(n);
      for (std::size_t i : ord)
        if (i != worst) c += simplex[i];
      c /= static_cast<double>(simplex.size() - 1);
      double size = 0;
      for (const auto& s : simplex) size = std::max(size, (s - simplex[ord[0]]).norm());
      if (size < 1e-12 * std::max(1.0, span.norm())) break;

      const Vec refl = c + (c - simplex[worst]);
      double f_refl;
      merit.residual(refl, f_refl);
      if (f_refl < fv[ord[0]]) {
        const Vec exp = c + 2.0 * (c - simplex[worst]);
        double f_exp;
        merit.residual(exp, f_exp);
        if (f_exp < f_refl) { simplex[worst] = exp; fv[worst] = f_exp; }
        else { simplex[worst] = refl; fv[worst] = f_refl; }
      } else if (f_refl < fv[ord[ord.size() - 2]]) {
        simplex[worst] = refl;
        fv[worst] = f_refl;
      } else {
        const Vec con = c + 0.5 * (simplex[worst] - c);
        double f_con;
        merit.residual(con, f_con);
        if (f_con < fv[worst]) { simplex[worst] = con; fv[worst] = f_con; }
        else {
          for (std::size_t i : ord)
            if (i != ord[0]) {
              simplex[i] = simplex[ord[0]] + 0.5 * (simplex[i] - simplex[ord[0]]);
              merit.residual(simplex[i], fv[i]);
            }
        }
      }
      consider(simplex[std::min_element(fv.begin(), fv.end()) - fv.begin()]);
      if (best_r <= tol) break;
    }
  }

  // Coordinate descent with shrinking steps down to well below the target
  // tolerance; the exact masses are continuous in v.
  double step = a.spacing();
  while (best_r > tol && step > 1e-13 && merit.evals < max_evaluations) {
    bool improved = false;
    for (int k = 0; k < n; ++k)
      for (double s : {step, -step}) {
        Vec v = best_v;
        v[k] += s;
        if (consider(v)) improved = true;
        if (best_r <= tol) break;
      }
    if (!improved) step *= 0.5;
  }

  out.v = best_v;
  out.residual = best_r;
  out.evaluations = merit.evals;
  out.masses_b = cone_masses(b, f, best_v);
  if (best_r > tol)
    throw SolverError("balancing_translation: residual above tolerance", best_r);
  return out;
}

ConeSplitResult cone_split_deficits(const VoxelSet& a, const VoxelSet& b,
                                    const ConeFamily& f, double t,
                                    double tol_rel) {
  const double va = a.volume();
  ConeSplitResult out;
  const int n = a.dim();
  out.w_n = (n + 1) * std::pow(4.0 * n * n * n, n);

  std::vector<VoxelSet> pa = cone_partition(a, f);
  std::vector<VoxelSet> pb = cone_partition(b, f);
  for (int i = 0; i < f.count(); ++i) {
    const double ma = pa[i].volume();
    const double mb = pb[i].volume();
    if (std::abs(ma - mb) > tol_rel * va)
      throw PreconditionError("cone_split_deficits: unbalanced cone masses");
  }

  Measured global = minkowski_volume(a, b, t);
  out.global_sum_volume = global.value;
  out.global_deficit = global.value / va - 1.0;
  out.global_error = global.error / va;

  const double cell_vol = std::pow(a.spacing(), n);
  std::size_t straddle = 0;
  for (const auto& part : {std::cref(a), std::cref(b)}) {
    const VoxelSet& s = part.get();
    for (const auto& c : s.cells()) {
      const Vec center = s.cell_center(c);
      const int home = f.membership(center);
      const double margin = 0.5 * s.spacing() * std::sqrt(static_cast<double>(n)) * std::sqrt(static_cast<double>(n));
      for (const auto& hs : f.cone_halfspaces(home))
        if (std::abs(hs.normal.dot(center)) <= margin) { ++straddle; break; }
    }
  }
  out.overlap_allowance = static_cast<double>(straddle) * cell_vol * (1 << n);

  for (int i = 0; i < f.count(); ++i) {
    ConeDeficitRow row;
    row.cone_index = i;
    row.volume_a = pa[i].volume();
    row.volume_b = pb[i].volume();
    if (pa[i].empty() || pb[i].empty()) {
      row.deficit = std::numeric_limits<double>::quiet_NaN();
      out.rows.push_back(row);
      continue;
    }
    Measured part = minkowski_volume(pa[i], pb[i], t);
    row.deficit = part.value / row.volume_a - 1.0;
    row.grid_error = part.error / row.volume_a;
    out.sum_of_parts += part.value;
    out.rows.push_back(row);
  }
  return out;
}

std::string cone_split_to_json(const ConeSplitResult& r) {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["w_n"] = r.w_n;
  j["global_deficit"] = r.global_deficit;
  j["rows"] = ojson::array();
  for (const auto& row : r.rows) {
    ojson o;
    o["cone_index"] = row.cone_index;
    o["volume_A"] = row.volume_a;
    o["volume_B"] = row.volume_b;
    if (std::isnan(row.deficit)) o["deficit"] = nullptr;
    else o["deficit"] = row.deficit;
    o["grid_error"] = row.grid_error;
    j["rows"].push_back(std::move(o));
  }
  return j.dump(2);
}

}  // namespace bmstab
