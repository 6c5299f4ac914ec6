#include "bmstab/scenario.hpp"

#include <cmath>
#include <sstream>

#include "bmstab/cones.hpp"
#include "bmstab/io_util.hpp"
#include "bmstab/polytope.hpp"
#include "bmstab/rng.hpp"

namespace bmstab {

std::string to_string(ScenarioFamily f) {
  switch (f) {
    case ScenarioFamily::ellipsoid_pair: return "ellipsoid-pair";
    case ScenarioFamily::sheared_polytope: return "sheared-polytope";
    case ScenarioFamily::dented_convex: return "dented-convex";
    case ScenarioFamily::interval_union_1d: return "interval-union-1d";
    case ScenarioFamily::conelike_pair: return "conelike-pair";
  }
  return "?";
}

ScenarioFamily family_from_string(const std::string& s) {
  if (s == "ellipsoid-pair") return ScenarioFamily::ellipsoid_pair;
  if (s == "sheared-polytope") return ScenarioFamily::sheared_polytope;
  if (s == "dented-convex") return ScenarioFamily::dented_convex;
  if (s == "interval-union-1d") return ScenarioFamily::interval_union_1d;
  if (s == "conelike-pair") return ScenarioFamily::conelike_pair;
  throw PreconditionError("unknown scenario family: " + s);
}

void ScenarioSpec::validate() const {
  if (dim < 1 || dim > kMaxVoxelDim)
    throw PreconditionError("scenario: dim out of range");
  if (!(t > 0) || t > 0.5)
    throw PreconditionError("scenario: t must be in (0, 1/2]");
  if (!(h > 0)) throw PreconditionError("scenario: h must be positive");
  if (perturbation < 0)
    throw PreconditionError("scenario: perturbation must be >= 0");
  if (family == ScenarioFamily::interval_union_1d && dim != 1)
    throw PreconditionError("scenario: interval-union-1d needs dim 1");
}

std::string ScenarioSpec::key() const {
  std::ostringstream ss;
  ss << to_string(family) << "/n" << dim << "/t" << fmt_double(t) << "/p"
     << fmt_double(perturbation) << "/h" << fmt_double(h) << "/s" << seed;
  return ss.str();
}

namespace {

// Center-rule rasterization of an ellipsoid with given semi-axes.
VoxelSet raster_ellipsoid(const Vec& semi, double h) {
  const int n = static_cast<int>(semi.size());
  std::vector<int64_t> lim(n), idx(n);
  for (int k = 0; k < n; ++k) {
    lim[k] = static_cast<int64_t>(std::ceil(semi[k] / h)) + 1;
    idx[k] = -lim[k];
  }
  std::vector<Cell> cells;
  while (true) {
    double q = 0;
    for (int k = 0; k < n; ++k) {
      const double x = h * (idx[k] + 0.5) / semi[k];
      q += x * x;
    }
    if (q <= 1.0) {
      Cell c{};
      for (int k = 0; k < n; ++k) c[k] = static_cast<int32_t>(idx[k]);
      cells.push_back(c);
    }
    int k = 0;
    for (; k < n; ++k) {
      if (++idx[k] <= lim[k]) break;
      idx[k] = -lim[k];
    }
    if (k == n) break;
  }
  return VoxelSet::from_cells(n, h, std::move(cells));
}

void equalize(VoxelSet& a, VoxelSet& b) {
  const std::size_t c = std::min(a.cell_count(), b.cell_count());
  if (c == 0) throw PreconditionError("scenario: empty voxel set");
  a = a.trimmed_to_count(c);
  b = b.trimmed_to_count(c);
}

double unit_ball_radius(int n) {
  // |B(0,r)| = 1.
  const double ball1 =
      std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
  return std::pow(1.0 / ball1, 1.0 / n);
}

ScenarioData make_ellipsoid_pair(const ScenarioSpec& s) {
  ScenarioData out;
  const int n = s.dim;
  const double p = s.perturbation;
  const double r = unit_ball_radius(n);
  Vec semi_b = Vec::Constant(n, r);
  Vec semi_a = semi_b;
  if (n >= 2) {
    semi_a[0] *= 1.0 + p;
    semi_a[1] /= 1.0 + p;
  }
  out.a = raster_ellipsoid(semi_a, s.h);
  out.b = raster_ellipsoid(semi_b, s.h);
  equalize(out.a, out.b);
  if (n == 2) {
    // Coaxial ellipses: mixed-area closed form gives
    // delta = t(1-t) p^2 / (1+p).
    out.design_delta = s.t * (1.0 - s.t) * p * p / (1.0 + p);
  } else if (n == 1) {
    out.design_delta = 0.0;
  } else {
    out.design_delta = s.t * (1.0 - s.t) * p * p;  // scale only
    out.note = "design delta is a scale, not exact, for n >= 3";
  }
  return out;
}

ScenarioData make_sheared(const ScenarioSpec& s) {
  if (s.dim < 2) throw PreconditionError("sheared-polytope needs dim >= 2");
  ScenarioData out;
  const int n = s.dim;
  const double p = s.perturbation;
  Vec lo = Vec::Constant(n, -0.5), hi = Vec::Constant(n, 0.5);
  Polytope base = Polytope::box(lo, hi);
  Mat shear = Mat::Identity(n, n);
  shear(0, 1) = p;
  Polytope sheared = base.affine_image(shear, Vec::Zero(n));
  out.a = rasterize_polytope(sheared, s.h);
  out.b = rasterize_polytope(base, s.h);
  equalize(out.a, out.b);
  // Box mixed volume under shear: |tA+(1-t)B| = 1 + t(1-t) p exactly in 2D.
  out.design_delta = s.t * (1.0 - s.t) * p;
  return out;
}

ScenarioData make_dented(const ScenarioSpec& s) {
  ScenarioData out;
  const int n = s.dim;
  const double rho = s.perturbation;  // dent volume fraction
  if (rho >= 0.5)
    throw PreconditionError("dented-convex: dent fraction too large to balance");
  const double r = unit_ball_radius(n);
  VoxelSet base = raster_ellipsoid(Vec::Constant(n, r), s.h);
  const auto target =
      static_cast<std::size_t>(std::llround((1.0 - rho) * base.cell_count()));
  // Remove cells closest to a boundary point until the dent fraction is
  // reached; the removal order is deterministic.
  Vec anchor = Vec::Zero(n);
  anchor[0] = r;
  std::vector<std::pair<double, Cell>> ranked;
  for (const auto& c : base.cells())
    ranked.emplace_back((base.cell_center(c) - anchor).squaredNorm(), c);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& x, const auto& y) {
              if (x.first != y.first) return x.first < y.first;
              return x.second < y.second;
            });
  std::vector<Cell> kept;
  for (std::size_t i = base.cell_count() - target; i < ranked.size(); ++i)
    kept.push_back(ranked[i].second);
  out.a = VoxelSet(n, s.h, base.origin(), std::move(kept));
  out.b = out.a;
  out.design_delta = s.t * (1.0 - s.t) * rho;
  out.note = "gamma is designed to be about the dent fraction";
  return out;
}

ScenarioData make_interval_union(const ScenarioSpec& s) {
  ScenarioData out;
  const double g = s.perturbation;  // gap width
  const int cells_l = static_cast<int>(std::llround(1.0 / s.h));
  const int gap = static_cast<int>(std::llround(g / s.h));
  const int half = cells_l / 2;
  out.a = VoxelSet::interval_union_1d(s.h, {{0, cells_l}});
  out.b = VoxelSet::interval_union_1d(
      s.h, {{0, half}, {half + gap, cells_l + gap}});
  equalize(out.a, out.b);
  // |tA+(1-t)B| = L + (1-t) g while the gap overlap persists.
  out.design_delta = (1.0 - s.t) * (gap * s.h) / (cells_l * s.h);
  return out;
}

ScenarioData make_conelike_pair(const ScenarioSpec& s) {
  if (s.dim < 2) throw PreconditionError("conelike-pair needs dim >= 2");
  ScenarioData out;
  const int n = s.dim;
  const double p = s.perturbation;
  SimplexFrame frame = regular_simplex(n);
  ConeFamily fam(frame);
  Polytope sp = frame.polytope();
  std::vector<Halfspace> slice = fam.cone_halfspaces(0);
  for (const auto& h : sp.halfspaces()) {
    bool opposite = true;
    for (int j = 1; j <= n; ++j)
      if (std::abs(h.normal.dot(frame.vertices[j]) - h.offset) > 1e-9)
        opposite = false;
    if (opposite) slice.push_back(h);
  }
  Polytope p0 = Polytope::from_halfspaces(n, slice);
  const Vec c = p0.centroid();
  Polytope body_a = p0.translated(-c);
  Mat stretch = Mat::Identity(n, n);
  stretch(0, 0) = 1.0 + p;
  stretch(1, 1) = 1.0 / (1.0 + p);
  Polytope body_b = body_a.affine_image(stretch, Vec::Zero(n));
  out.a = rasterize_polytope(body_a, s.h, /*outer=*/true);
  out.b = rasterize_polytope(body_b, s.h, /*outer=*/true);
  equalize(out.a, out.b);
  out.design_delta = s.t * (1.0 - s.t) * p * p;
  out.note = "cone slice pair, design delta is a scale";
  return out;
}

}  // namespace

ScenarioData generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  ScenarioData out;
  switch (spec.family) {
    case ScenarioFamily::ellipsoid_pair: out = make_ellipsoid_pair(spec); break;
    case ScenarioFamily::sheared_polytope: out = make_sheared(spec); break;
    case ScenarioFamily::dented_convex: out = make_dented(spec); break;
    case ScenarioFamily::interval_union_1d: out = make_interval_union(spec); break;
    case ScenarioFamily::conelike_pair: out = make_conelike_pair(spec); break;
  }
  const double va = out.a.volume();
  const double vb = out.b.volume();
  if (out.a.empty() || out.b.empty())
    throw PreconditionError("scenario: infeasible spec produced empty sets");
  if (std::abs(va - vb) > 1e-6 * std::max(va, vb))
    throw PreconditionError("scenario: volume balance failed");
  return out;
}

}  // namespace bmstab
