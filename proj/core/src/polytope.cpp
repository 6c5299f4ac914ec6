#include "bmstab/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include <json.hpp>

#include "bmstab/io_util.hpp"

namespace bmstab {

namespace {

// Solve a small n x n system with partial pivoting; returns false when the
// matrix is numerically singular.
bool solve_small(int n, double a[][kMaxVoxelDim], double* rhs, double* out,
                 double tol) {
  int perm[kMaxVoxelDim];
  std::iota(perm, perm + n, 0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < tol) return false;
    if (piv != col) {
      for (int k = 0; k < n; ++k) std::swap(a[col][k], a[piv][k]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int k = r + 1; k < n; ++k) s -= a[r][k] * out[k];
    out[r] = s / a[r][r];
  }
  return true;
}

double det_small(int n, Mat m) {
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
    if (m(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      m.row(col).swap(m.row(piv));
      det = -det;
    }
    det *= m(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = m(r, col) / m(col, col);
      for (int k = col; k < n; ++k) m(r, k) -= f * m(col, k);
    }
  }
  return det;
}

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Unit normal of the hyperplane through the given d points; false when the
// points are affinely dependent.
bool facet_plane(const std::vector<Vec>& pts, const std::vector<int>& idx,
                 double scale, Vec& normal, double& offset) {
  const int d = static_cast<int>(idx.size());
  Mat e(d - 1, d);
  for (int i = 1; i < d; ++i) e.row(i - 1) = (pts[idx[i]] - pts[idx[0]]).transpose();
  Eigen::FullPivLU<Mat> lu(e);
  lu.setThreshold(1e-12);
  if (lu.rank() != d - 1) return false;
  Mat k = lu.kernel();
  Vec n = k.col(0);
  const double nn = n.norm();
  if (!(nn > 1e-14 * std::max(1.0, scale))) return false;
  normal = n / nn;
  offset = normal.dot(pts[idx[0]]);
  return true;
}

struct HullOutput {
  std::vector<Vec> verts;
  std::vector<FacetSimplex> facets;
};

HullOutput hull_1d(const std::vector<Vec>& pts) {
  double lo = pts[0][0], hi = pts[0][0];
  for (const auto& p : pts) {
    lo = std::min(lo, p[0]);
    hi = std::max(hi, p[0]);
  }
  if (!(hi - lo > 0))
    throw PreconditionError("hull: degenerate 1D point set");
  HullOutput out;
  out.verts = {Vec::Constant(1, lo), Vec::Constant(1, hi)};
  FacetSimplex f0{{0}, Vec::Constant(1, -1.0), -lo};
  FacetSimplex f1{{1}, Vec::Constant(1, 1.0), hi};
  out.facets = {f0, f1};
  return out;
}

HullOutput hull_2d(std::vector<Vec> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec& a, const Vec& b) {
                          return a[0] == b[0] && a[1] == b[1];
                        }),
            pts.end());
  double scale = 0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = 1e-12 * std::max(1.0, scale * scale);
  auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  const std::size_t n = pts.size();
  std::vector<Vec> chain(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(chain[k - 2], chain[k - 1], pts[i]) <= eps) --k;
    chain[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(chain[k - 2], chain[k - 1], pts[i]) <= eps) --k;
    chain[k++] = pts[i];
  }
  chain.resize(k - 1);  // counter-clockwise, no repeated endpoint
  if (chain.size() < 3)
    throw PreconditionError("hull: degenerate 2D point set");
  HullOutput out;
  out.verts = chain;
  const int m = static_cast<int>(chain.size());
  for (int i = 0; i < m; ++i) {
    const Vec& p = chain[i];
    const Vec& q = chain[(i + 1) % m];
    Vec normal(2);
    normal << q[1] - p[1], -(q[0] - p[0]);
    normal.normalize();
    out.facets.push_back(FacetSimplex{{i, (i + 1) % m}, normal, normal.dot(p)});
  }
  return out;
}

HullOutput hull_nd(std::vector<Vec> pts, int d) {
  std::sort(pts.begin(), pts.end(), [d](const Vec& a, const Vec& b) {
    for (int k = 0; k < d; ++k) {
      if (a[k] < b[k]) return true;
      if (a[k] > b[k]) return false;
    }
    return false;
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec& a, const Vec& b) { return a == b; }),
            pts.end());
  const int np = static_cast<int>(pts.size());
  if (np < d + 1) throw PreconditionError("hull: too few points");

  Vec lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = std::max(1e-30, (hi - lo).norm());
  const double eps_vis = 1e-9 * scale;

  // Greedy affinely independent seed: maximize the Gram-Schmidt residual.
  std::vector<int> seed = {0};
  {
    int far = 0;
    double best = -1;
    for (int i = 0; i < np; ++i) {
      const double t = (pts[i] - pts[0]).norm();
      if (t > best) { best = t; far = i; }
    }
    if (!(best > 1e-12 * scale)) throw PreconditionError("hull: degenerate point set");
    seed.push_back(far);
    Mat basis(d, 0);
    Vec e0 = (pts[far] - pts[0]).normalized();
    basis.conservativeResize(d, 1);
    basis.col(0) = e0;
    while (static_cast<int>(seed.size()) < d + 1) {
      int pick = -1;
      double bestr = eps_vis;
      Vec bestdir;
      for (int i = 0; i < np; ++i) {
        Vec r = pts[i] - pts[0];
        r -= basis * (basis.transpose() * r);
        const double t = r.norm();
        if (t > bestr) { bestr = t; pick = i; bestdir = r / t; }
      }
      if (pick < 0) throw PreconditionError("hull: point set not full-dimensional");
      seed.push_back(pick);
      basis.conservativeResize(d, basis.cols() + 1);
      basis.col(basis.cols() - 1) = bestdir;
    }
  }

  Vec interior = Vec::Zero(d);
  for (int s : seed) interior += pts[s];
  interior /= static_cast<double>(seed.size());

  struct HFacet {
    std::vector<int> v;
    Vec n;
    double b = 0;
    bool alive = true;
  };
  std::vector<HFacet> facets;
  auto make_facet = [&](std::vector<int> v) -> bool {
    Vec n;
    double b;
    if (!facet_plane(pts, v, scale, n, b)) return false;
    if (n.dot(interior) > b) { n = -n; b = -b; }
    facets.push_back(HFacet{std::move(v), std::move(n), b, true});
    return true;
  };
  for (int skip = 0; skip <= d; ++skip) {
    std::vector<int> v;
    for (int i = 0; i <= d; ++i)
      if (i != skip) v.push_back(seed[i]);
    if (!make_facet(std::move(v)))
      throw PreconditionError("hull: degenerate seed simplex");
  }

  std::vector<int> order;
  order.reserve(np);
  std::vector<char> used(np, 0);
  for (int s : seed) used[s] = 1;
  for (int i = 0; i < np; ++i)
    if (!used[i]) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return (pts[a] - interior).squaredNorm() > (pts[b] - interior).squaredNorm();
  });

  std::vector<int> ridge(d - 1);
  for (int pi : order) {
    const Vec& p = pts[pi];
    std::vector<int> visible;
    for (int fi = 0; fi < static_cast<int>(facets.size()); ++fi) {
      if (!facets[fi].alive) continue;
      if (facets[fi].n.dot(p) - facets[fi].b > eps_vis) visible.push_back(fi);
    }
    if (visible.empty()) continue;

    // Horizon ridges appear in exactly one visible facet.
    std::map<std::vector<int>, int> ridge_count;
    for (int fi : visible) {
      const auto& v = facets[fi].v;
      for (int skip = 0; skip < d; ++skip) {
        ridge.clear();
        for (int i = 0; i < d; ++i)
          if (i != skip) ridge.push_back(v[i]);
        std::sort(ridge.begin(), ridge.end());
        ridge_count[ridge] += 1;
      }
    }
    for (int fi : visible) facets[fi].alive = false;
    for (const auto& [r, cnt] : ridge_count) {
      if (cnt != 1) continue;
      std::vector<int> v = r;
      v.push_back(pi);
      if (!make_facet(std::move(v))) {
        // p is affinely dependent with this ridge; the adjacent facets
        // already cover the direction, skip the sliver.
        continue;
      }
    }
    if (facets.size() > 4096) {
      std::vector<HFacet> compact;
      compact.reserve(facets.size());
      for (auto& f : facets)
        if (f.alive) compact.push_back(std::move(f));
      facets = std::move(compact);
    }
  }

  HullOutput out;
  std::vector<int> remap(np, -1);
  for (const auto& f : facets) {
    if (!f.alive) continue;
    for (int v : f.v)
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(out.verts.size());
        out.verts.push_back(pts[v]);
      }
  }
  // Canonical vertex order.
  std::vector<int> perm(out.verts.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) {
    for (int k = 0; k < d; ++k) {
      if (out.verts[a][k] < out.verts[b][k]) return true;
      if (out.verts[a][k] > out.verts[b][k]) return false;
    }
    return false;
  });
  std::vector<int> inv(out.verts.size());
  std::vector<Vec> sorted;
  sorted.reserve(out.verts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    inv[perm[i]] = static_cast<int>(i);
    sorted.push_back(out.verts[perm[i]]);
  }
  out.verts = std::move(sorted);
  for (const auto& f : facets) {
    if (!f.alive) continue;
    FacetSimplex fs;
    for (int v : f.v) fs.verts.push_back(inv[remap[v]]);
    fs.normal = f.n;
    fs.offset = f.b;
    out.facets.push_back(std::move(fs));
  }
  return out;
}

std::vector<Halfspace> dedup_planes(const std::vector<FacetSimplex>& facets,
                                    int d) {
  std::map<std::vector<int64_t>, Halfspace> seen;
  for (const auto& f : facets) {
    std::vector<int64_t> key(d + 1);
    for (int k = 0; k < d; ++k)
      key[k] = llround(f.normal[k] * 1e7);
    key[d] = llround(f.offset * 1e7);
    seen.emplace(std::move(key), Halfspace{f.normal, f.offset});
  }
  std::vector<Halfspace> hs;
  hs.reserve(seen.size());
  for (auto& [k, h] : seen) hs.push_back(std::move(h));
  return hs;
}

double simplex_area(const std::vector<Vec>& verts) {
  const int k = static_cast<int>(verts.size()) - 1;  // simplex dimension
  if (k == 0) return 1.0;  // counting measure for 0-dimensional facets
  Mat e(k, verts[0].size());
  for (int i = 1; i <= k; ++i) e.row(i - 1) = (verts[i] - verts[0]).transpose();
  const Mat g = e * e.transpose();
  const double det = det_small(k, g);
  return std::sqrt(std::max(0.0, det)) / factorial(k);
}

double simplex_diameter(const std::vector<Vec>& verts) {
  double d2 = 0;
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j)
      d2 = std::max(d2, (verts[i] - verts[j]).squaredNorm());
  return std::sqrt(d2);
}

}  // namespace

Vec BoundaryMesh::facet_centroid(std::size_t i) const {
  const auto& f = facets[i];
  Vec c = Vec::Zero(f.verts[0].size());
  for (const auto& v : f.verts) c += v;
  return c / static_cast<double>(f.verts.size());
}

Polytope Polytope::hull_of_points(int dim, const std::vector<Vec>& pts) {
  if (pts.empty()) throw PreconditionError("hull of empty point set");
  Polytope p;
  p.dim_ = dim;
  p.build_from_vertices(pts);
  return p;
}

void Polytope::build_from_vertices(const std::vector<Vec>& pts) {
  for (const auto& v : pts)
    if (v.size() != dim_) throw PreconditionError("hull: point dimension mismatch");
  HullOutput out;
  try {
    if (dim_ == 1) out = hull_1d(pts);
    else if (dim_ == 2) out = hull_2d(pts);
    else out = hull_nd(pts, dim_);
  } catch (const PreconditionError&) {
    // Lower-dimensional point set: keep the deduplicated points so distance
    // queries still work; facet-based operations will refuse.
    degenerate_ = true;
    verts_ = pts;
    std::sort(verts_.begin(), verts_.end(), [this](const Vec& a, const Vec& b) {
      for (int k = 0; k < dim_; ++k) {
        if (a[k] < b[k]) return true;
        if (a[k] > b[k]) return false;
      }
      return false;
    });
    verts_.erase(std::unique(verts_.begin(), verts_.end(),
                             [](const Vec& a, const Vec& b) { return a == b; }),
                 verts_.end());
    vrep_ready_ = true;
    return;
  }
  verts_ = std::move(out.verts);
  facets_ = std::move(out.facets);
  hs_ = dedup_planes(facets_, dim_);
  vrep_ready_ = true;
}

Polytope Polytope::from_halfspaces(int dim, std::vector<Halfspace> hs) {
  Polytope p;
  p.dim_ = dim;
  for (auto& h : hs) {
    const double n = h.normal.norm();
    if (!(n > 0)) throw PreconditionError("halfspace with zero normal");
    h.offset /= n;
    h.normal /= n;
  }
  p.hs_ = std::move(hs);
  p.vrep_ready_ = false;
  return p;
}

void Polytope::ensure_vrep() const {
  if (vrep_ready_) return;
  std::vector<Vec> vs = enumerate_vertices(dim_, hs_);
  if (vs.size() < static_cast<std::size_t>(dim_) + 1)
    throw PreconditionError("H-rep polytope is unbounded or degenerate");
  Polytope hull = hull_of_points(dim_, vs);
  verts_ = std::move(hull.verts_);
  facets_ = std::move(hull.facets_);
  // Keep the caller's halfspaces (they may include redundant ones); facet
  // planes are available through facet_simplices().
  vrep_ready_ = true;
}

Polytope Polytope::box(const Vec& lo, const Vec& hi) {
  const int d = static_cast<int>(lo.size());
  std::vector<Vec> corners;
  for (int m = 0; m < (1 << d); ++m) {
    Vec p(d);
    for (int k = 0; k < d; ++k) p[k] = ((m >> k) & 1) ? hi[k] : lo[k];
    corners.push_back(std::move(p));
  }
  return hull_of_points(d, corners);
}

Polytope Polytope::regular_polygon(int sides, double circumradius) {
  std::vector<Vec> pts;
  for (int i = 0; i < sides; ++i) {
    const double a = 2.0 * M_PI * i / sides;
    Vec p(2);
    p << circumradius * std::cos(a), circumradius * std::sin(a);
    pts.push_back(std::move(p));
  }
  return hull_of_points(2, pts);
}

const std::vector<Vec>& Polytope::vertices() const {
  ensure_vrep();
  return verts_;
}

const std::vector<Halfspace>& Polytope::halfspaces() const {
  if (hs_.empty() && !vrep_ready_) ensure_vrep();
  if (hs_.empty()) hs_ = dedup_planes(facets_, dim_);
  return hs_;
}

const std::vector<FacetSimplex>& Polytope::facet_simplices() const {
  ensure_vrep();
  return facets_;
}

double Polytope::volume() const {
  ensure_vrep();
  if (degenerate_) return 0.0;
  const Vec c = vertex_centroid();
  double vol = 0;
  Mat m(dim_, dim_);
  for (const auto& f : facets_) {
    for (int i = 0; i < dim_; ++i) m.col(i) = verts_[f.verts[i]] - c;
    vol += std::abs(det_small(dim_, m));
  }
  return vol / factorial(dim_);
}

double Polytope::surface_area() const {
  ensure_vrep();
  double area = 0;
  std::vector<Vec> fv;
  for (const auto& f : facets_) {
    fv.clear();
    for (int v : f.verts) fv.push_back(verts_[v]);
    area += simplex_area(fv);
  }
  return area;
}

double Polytope::diameter() const {
  ensure_vrep();
  double d2 = 0;
  for (std::size_t i = 0; i < verts_.size(); ++i)
    for (std::size_t j = i + 1; j < verts_.size(); ++j)
      d2 = std::max(d2, (verts_[i] - verts_[j]).squaredNorm());
  return std::sqrt(d2);
}

Vec Polytope::vertex_centroid() const {
  ensure_vrep();
  Vec c = Vec::Zero(dim_);
  for (const auto& v : verts_) c += v;
  return c / static_cast<double>(verts_.size());
}

Vec Polytope::centroid() const {
  ensure_vrep();
  const Vec ref = vertex_centroid();
  Vec acc = Vec::Zero(dim_);
  double vol = 0;
  Mat m(dim_, dim_);
  for (const auto& f : facets_) {
    Vec fc = ref;
    for (int i = 0; i < dim_; ++i) {
      m.col(i) = verts_[f.verts[i]] - ref;
      fc += verts_[f.verts[i]];
    }
    fc /= static_cast<double>(dim_ + 1);
    const double v = std::abs(det_small(dim_, m)) / factorial(dim_);
    acc += v * fc;
    vol += v;
  }
  if (!(vol > 0)) throw PreconditionError("centroid of degenerate polytope");
  return acc / vol;
}

bool Polytope::contains(const Vec& p, double tol) const {
  if (degenerate_) return dist_to_convex(p, *this) <= tol;
  return signed_violation(p) <= tol;
}

double Polytope::signed_violation(const Vec& p) const {
  const auto& hs = halfspaces();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& h : hs) worst = std::max(worst, h.normal.dot(p) - h.offset);
  return worst;
}

double Polytope::support(const Vec& dir) const {
  ensure_vrep();
  double s = -std::numeric_limits<double>::infinity();
  for (const auto& v : verts_) s = std::max(s, dir.dot(v));
  return s;
}

double Polytope::radial_gauge(const Vec& p) const {
  const auto& hs = halfspaces();
  double s = std::numeric_limits<double>::infinity();
  for (const auto& h : hs) {
    if (!(h.offset > 0))
      throw PreconditionError("radial_gauge requires the origin strictly inside");
    const double d = h.normal.dot(p);
    if (d > 0) s = std::min(s, h.offset / d);
  }
  return s;
}

Polytope Polytope::affine_image(const Mat& m, const Vec& shift) const {
  ensure_vrep();
  std::vector<Vec> pts;
  pts.reserve(verts_.size());
  for (const auto& v : verts_) pts.push_back(m * v + shift);
  return hull_of_points(dim_, pts);
}

Polytope Polytope::scaled(double s) const {
  if (!(s > 0)) throw PreconditionError("scale factor must be positive");
  if (!vrep_ready_ && !hs_.empty()) {
    std::vector<Halfspace> hs = hs_;
    for (auto& h : hs) h.offset *= s;
    return from_halfspaces(dim_, std::move(hs));
  }
  return affine_image(Mat::Identity(dim_, dim_) * s, Vec::Zero(dim_));
}

Polytope Polytope::translated(const Vec& v) const {
  return affine_image(Mat::Identity(dim_, dim_), v);
}

std::string Polytope::to_json() const {
  ensure_vrep();
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["dim"] = dim_;
  auto& jv = j["vertices"];
  jv = ojson::array();
  for (const auto& v : verts_) {
    ojson row = ojson::array();
    for (int k = 0; k < dim_; ++k) row.push_back(v[k]);
    jv.push_back(std::move(row));
  }
  auto& jh = j["halfspaces"];
  jh = ojson::array();
  for (const auto& h : halfspaces()) {
    ojson row;
    row["normal"] = ojson::array();
    for (int k = 0; k < dim_; ++k) row["normal"].push_back(h.normal[k]);
    row["offset"] = h.offset;
    jh.push_back(std::move(row));
  }
  return j.dump(2);
}

Polytope Polytope::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const int dim = j.at("dim").get<int>();
  std::vector<Vec> pts;
  for (const auto& row : j.at("vertices")) {
    Vec v(dim);
    int k = 0;
    for (const auto& x : row) v[k++] = x.get<double>();
    pts.push_back(std::move(v));
  }
  if (!pts.empty()) return hull_of_points(dim, pts);
  if (j.contains("halfspaces")) {
    std::vector<Halfspace> hs;
    for (const auto& row : j.at("halfspaces")) {
      Halfspace h;
      h.normal = Vec(dim);
      int k = 0;
      for (const auto& x : row.at("normal")) h.normal[k++] = x.get<double>();
      h.offset = row.at("offset").get<double>();
      hs.push_back(std::move(h));
    }
    return from_halfspaces(dim, std::move(hs));
  }
  throw PreconditionError("polytope json: no vertices or halfspaces");
}

BoundaryMesh boundary_quadrature(const Polytope& p, int refinement) {
  if (refinement < 1) throw PreconditionError("refinement must be >= 1");
  if (p.is_degenerate())
    throw PreconditionError("boundary quadrature needs a full-dimensional polytope");
  const int d = p.dim();
  const double target = p.diameter() / refinement;
  BoundaryMesh mesh;
  std::deque<MeshFacet> queue;
  for (const auto& f : p.facet_simplices()) {
    MeshFacet mf;
    for (int v : f.verts) mf.verts.push_back(p.vertices()[v]);
    mf.normal = f.normal;
    queue.push_back(std::move(mf));
  }
  while (!queue.empty()) {
    MeshFacet f = std::move(queue.front());
    queue.pop_front();
    if (d >= 2 && simplex_diameter(f.verts) > target) {
      // Longest-edge bisection keeps the total area exact.
      std::size_t bi = 0, bj = 1;
      double best = -1;
      for (std::size_t i = 0; i < f.verts.size(); ++i)
        for (std::size_t j = i + 1; j < f.verts.size(); ++j) {
          const double t = (f.verts[i] - f.verts[j]).squaredNorm();
          if (t > best) { best = t; bi = i; bj = j; }
        }
      const Vec mid = 0.5 * (f.verts[bi] + f.verts[bj]);
      MeshFacet a = f, b = f;
      a.verts[bj] = mid;
      b.verts[bi] = mid;
      queue.push_back(std::move(a));
      queue.push_back(std::move(b));
      continue;
    }
    f.area = simplex_area(f.verts);
    mesh.total_area += f.area;
    mesh.facets.push_back(std::move(f));
  }
  return mesh;
}

double dist_to_simplex(const Vec& x, const std::vector<Vec>& verts) {
  const std::size_t m = verts.size();
  if (m == 1) return (x - verts[0]).norm();
  // Affine projection; barycentric coordinates from the normal equations.
  Mat e(x.size(), m - 1);
  for (std::size_t i = 1; i < m; ++i) e.col(i - 1) = verts[i] - verts[0];
  const Mat g = e.transpose() * e;
  const Vec rhs = e.transpose() * (x - verts[0]);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(g);
  const Vec t = cod.solve(rhs);
  bool inside = true;
  double sum = 0;
  for (int i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || t[i] < -1e-12) inside = false;
    sum += t[i];
  }
  if (!(sum <= 1.0 + 1e-12)) inside = false;
  if (inside) {
    const Vec proj = verts[0] + e * t;
    return (x - proj).norm();
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<Vec> sub;
  for (std::size_t skip = 0; skip < m; ++skip) {
    sub.clear();
    for (std::size_t i = 0; i < m; ++i)
      if (i != skip) sub.push_back(verts[i]);
    best = std::min(best, dist_to_simplex(x, sub));
  }
  return best;
}

double dist_to_convex(const Vec& x, const Polytope& p) {
  const auto& verts = p.vertices();
  if (verts.empty()) throw PreconditionError("distance to empty polytope");
  if (verts.size() <= static_cast<std::size_t>(p.dim()) + 1)
    return dist_to_simplex(x, verts);
  if (p.is_degenerate())
    throw PreconditionError("distance to a degenerate polytope with many vertices");
  if (p.contains(x)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Vec> fv;
  for (const auto& f : p.facet_simplices()) {
    // The plane distance lower-bounds the facet distance.
    const double plane = std::abs(f.normal.dot(x) - f.offset);
    if (plane >= best) continue;
    fv.clear();
    for (int v : f.verts) fv.push_back(verts[v]);
    best = std::min(best, dist_to_simplex(x, fv));
  }
  return best;
}

bool ball_sandwich_check(const Polytope& p, double ell, double tol) {
  if (!(ell > 1)) throw PreconditionError("ball sandwich needs ell > 1");
  std::vector<Halfspace> hs;
  std::vector<Vec> verts;
  try {
    hs = p.halfspaces();
    verts = p.vertices();
  } catch (const PreconditionError&) {
    return false;
  }
  if (verts.size() <= static_cast<std::size_t>(p.dim())) return false;
  for (const auto& h : hs)
    if (h.offset < 1.0 / ell - tol) return false;
  for (const auto& v : verts)
    if (v.norm() > ell + tol) return false;
  return true;
}

std::vector<Vec> enumerate_vertices(int dim, const std::vector<Halfspace>& hs,
                                    double tol) {
  const int m = static_cast<int>(hs.size());
  if (m < dim) return {};
  std::vector<Vec> out;
  std::vector<int> idx(dim);
  double a[kMaxVoxelDim][kMaxVoxelDim];
  double rhs[kMaxVoxelDim];
  double sol[kMaxVoxelDim];

  std::vector<int> comb(dim);
  for (int i = 0; i < dim; ++i) comb[i] = i;
  auto next_comb = [&]() {
    int i = dim - 1;
    while (i >= 0 && comb[i] == m - dim + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (int j = i + 1; j < dim; ++j) comb[j] = comb[j - 1] + 1;
    return true;
  };
  do {
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < dim; ++c) a[r][c] = hs[comb[r]].normal[c];
      rhs[r] = hs[comb[r]].offset;
    }
    if (!solve_small(dim, a, rhs, sol, 1e-10)) continue;
    bool feas = true;
    for (int k = 0; k < m && feas; ++k) {
      double v = -hs[k].offset;
      for (int c = 0; c < dim; ++c) v += hs[k].normal[c] * sol[c];
      if (v > tol) feas = false;
    }
    if (!feas) continue;
    Vec p(dim);
    for (int c = 0; c < dim; ++c) p[c] = sol[c];
    bool dup = false;
    for (const auto& q : out)
      if ((q - p).cwiseAbs().maxCoeff() <= 10 * tol) { dup = true; break; }
    if (!dup) out.push_back(std::move(p));
  } while (next_comb());
  return out;
}

double clipped_box_volume(int dim, const Vec& lo, const Vec& hi,
                          const std::vector<Halfspace>& hs) {
  if (dim == 1) {
    double a = lo[0], b = hi[0];
    for (const auto& h : hs) {
      // n*x <= off with n scalar
      const double n = h.normal[0];
      if (n > 0) b = std::min(b, h.offset / n);
      else if (n < 0) a = std::max(a, h.offset / n);
      else if (h.offset < 0) return 0.0;
    }
    return std::max(0.0, b - a);
  }
  std::vector<Halfspace> all = hs;
  for (int k = 0; k < dim; ++k) {
    Vec up = Vec::Zero(dim);
    up[k] = 1;
    all.push_back(Halfspace{up, hi[k]});
    Vec down = Vec::Zero(dim);
    down[k] = -1;
    all.push_back(Halfspace{down, -lo[k]});
  }
  const double scale = (hi - lo).norm();
  std::vector<Vec> vs = enumerate_vertices(dim, all, 1e-11 * std::max(1.0, scale));
  if (vs.size() < static_cast<std::size_t>(dim) + 1) return 0.0;
  // Divergence theorem over the active faces: V = (1/d) sum b_f * area_f.
  double vol = 0;
  std::vector<Vec> face;
  for (const auto& h : all) {
    face.clear();
    for (const auto& v : vs)
      if (std::abs(h.normal.dot(v) - h.offset) <= 1e-9 * std::max(1.0, scale))
        face.push_back(v);
    if (face.size() < static_cast<std::size_t>(dim)) continue;
    double area = 0;
    if (dim == 2) {
      // Segment length between the extreme points along the edge direction.
      Vec t(2);
      t << -h.normal[1], h.normal[0];
      double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
      for (const auto& v : face) {
        const double s = t.dot(v);
        tmin = std::min(tmin, s);
        tmax = std::max(tmax, s);
      }
      area = std::max(0.0, tmax - tmin);
    } else {
      // Polygon (dim==3) or cell (dim==4) measured by fanning around the
      // face centroid after an angular sort in the face plane.
      Vec c = Vec::Zero(dim);
      for (const auto& v : face) c += v;
      c /= static_cast<double>(face.size());
      if (dim == 3) {
        auto as3 = [](const Vec& v) {
          return Eigen::Vector3d(v[0], v[1], v[2]);
        };
        Vec u = face[0] - c;
        if (u.norm() < 1e-14) continue;
        u.normalize();
        const Eigen::Vector3d w = as3(h.normal).cross(as3(u));
        std::vector<std::pair<double, const Vec*>> ang;
        for (const auto& v : face) {
          const Vec r = v - c;
          ang.emplace_back(std::atan2(w.dot(as3(r)), u.dot(r)), &v);
        }
        std::sort(ang.begin(), ang.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t i = 0; i < ang.size(); ++i) {
          const Vec& p = *ang[i].second;
          const Vec& q = *ang[(i + 1) % ang.size()].second;
          area += 0.5 * as3(p - c).cross(as3(q - c)).norm();
        }
      } else {
        // dim == 4: hull of the face points inside its hyperplane.
        // Rarely exercised; fall back to a simplex fan via Gram areas.
        Polytope fp;
        try {
          // Project to 3D coordinates in the plane.
          Vec u0 = h.normal;
          Mat basis = Mat::Zero(dim, dim - 1);
          int col = 0;
          for (int k = 0; k < dim && col < dim - 1; ++k) {
            Vec e = Vec::Zero(dim);
            e[k] = 1;
            Vec r = e - u0 * u0.dot(e);
            for (int j = 0; j < col; ++j) r -= basis.col(j) * basis.col(j).dot(r);
            if (r.norm() > 1e-8) basis.col(col++) = r.normalized();
          }
          std::vector<Vec> proj;
          for (const auto& v : face) proj.push_back(basis.transpose() * (v - c));
          fp = Polytope::hull_of_points(dim - 1, proj);
          area = fp.volume();
        } catch (const PreconditionError&) {
          continue;
        }
      }
    }
    vol += h.offset * area;
  }
  return std::max(0.0, vol / dim);
}

Polytope convex_hull(const VoxelSet& x) {
  if (x.empty()) throw PreconditionError("convex hull of empty VoxelSet");
  return Polytope::hull_of_points(x.dim(), x.boundary_corner_points());
}

VoxelSet rasterize_polytope(const Polytope& p, double h, bool outer) {
  if (p.is_degenerate())
    throw PreconditionError("rasterize: degenerate polytope");
  const int n = p.dim();
  Vec lo = p.vertices()[0], hi = lo;
  for (const auto& v : p.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::vector<int64_t> ilo(n), ihi(n), idx(n);
  for (int k = 0; k < n; ++k) {
    ilo[k] = static_cast<int64_t>(std::floor(lo[k] / h)) - 1;
    ihi[k] = static_cast<int64_t>(std::ceil(hi[k] / h)) + 1;
    idx[k] = ilo[k];
  }
  std::vector<Cell> cells;
  Vec pt(n);
  // Any cell that meets the body has its center within half a diagonal of
  // it, so the distance rule yields a genuine cover.
  const double cover_radius = 0.5 * h * std::sqrt(static_cast<double>(n));
  while (true) {
    bool keep = false;
    for (int k = 0; k < n; ++k) pt[k] = h * (idx[k] + 0.5);
    if (p.contains(pt, outer ? 1e-12 : -1e-12)) keep = true;
    if (!keep && outer && dist_to_convex(pt, p) <= cover_radius * (1 + 1e-9))
      keep = true;
    if (keep) {
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
  return VoxelSet::from_cells(n, h, std::move(cells));
}

}  // namespace bmstab
