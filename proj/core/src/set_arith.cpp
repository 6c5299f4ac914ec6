#include "bmstab/set_arith.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace bmstab {

namespace {

using Prefix = std::array<int32_t, kMaxVoxelDim - 1>;

struct PrefixHash {
  std::size_t operator()(const Prefix& p) const {
    uint64_t h = 0x9e3779b97f4a7c15ull;
    for (int32_t v : p) h = (h ^ static_cast<uint64_t>(static_cast<uint32_t>(v))) * 0x100000001b3ull;
    return static_cast<std::size_t>(h);
  }
};

using Runs = std::vector<std::pair<int32_t, int32_t>>;
using RowMap = std::unordered_map<Prefix, Runs, PrefixHash>;

// Merge possibly overlapping runs in place into a disjoint sorted union;
// returns the total covered length.
int64_t merge_runs(Runs& runs) {
  std::sort(runs.begin(), runs.end());
  int64_t total = 0;
  std::size_t out = 0;
  for (std::size_t i = 0; i < runs.size();) {
    int32_t lo = runs[i].first;
    int32_t hi = runs[i].second;
    std::size_t j = i + 1;
    while (j < runs.size() && runs[j].first <= hi) {
      hi = std::max(hi, runs[j].second);
      ++j;
    }
    runs[out++] = {lo, hi};
    total += hi - lo;
    i = j;
  }
  runs.resize(out);
  return total;
}

// Expand a set's rows by an integer grid refinement factor: cell c becomes
// the block f*c + [0,f)^n.
std::vector<VoxelRow> expanded_rows(const VoxelSet& s, int32_t f) {
  std::vector<VoxelRow> rows = voxel_rows(s);
  if (f == 1) return rows;
  const int np = s.dim() - 1;
  std::vector<VoxelRow> out;
  std::vector<int32_t> offsets(np, 0);
  for (const auto& row : rows) {
    Runs scaled;
    scaled.reserve(row.runs.size());
    for (auto [lo, hi] : row.runs) scaled.emplace_back(lo * f, hi * f);
    std::fill(offsets.begin(), offsets.end(), 0);
    while (true) {
      VoxelRow r;
      for (int k = 0; k < np; ++k) r.prefix[k] = row.prefix[k] * f + offsets[k];
      r.runs = scaled;
      out.push_back(std::move(r));
      int k = 0;
      for (; k < np; ++k) {
        if (++offsets[k] < f) break;
        offsets[k] = 0;
      }
      if (k == np) break;
    }
  }
  return out;
}

VoxelSet cells_from_rowmap(int dim, double h, const Vec& origin, RowMap& rows) {
  std::vector<Cell> cells;
  for (auto& [prefix, runs] : rows) {
    merge_runs(runs);
    for (auto [lo, hi] : runs)
      for (int32_t x = lo; x < hi; ++x) {
        Cell c{};
        for (int k = 0; k + 1 < kMaxVoxelDim; ++k) c[k] = prefix[k];
        c[dim - 1] = x;
        cells.push_back(c);
      }
  }
  return VoxelSet(dim, h, origin, std::move(cells));
}

// Dilated row sum of two expanded row sets on a common grid. In the leading
// dim-1 axes a cell-plus-cell sum spans two cells, hence the {0,1} offsets.
RowMap row_minkowski_map(int dim, const std::vector<VoxelRow>& ra,
                         const std::vector<VoxelRow>& rb) {
  RowMap acc;
  const int np = dim - 1;
  const int spread = 1 << np;
  for (const auto& a : ra)
    for (const auto& b : rb) {
      Prefix base{};
      for (int k = 0; k < np; ++k) base[k] = a.prefix[k] + b.prefix[k];
      for (int m = 0; m < spread; ++m) {
        Prefix p = base;
        for (int k = 0; k < np; ++k) p[k] += (m >> k) & 1;
        Runs& runs = acc[p];
        for (auto [la, ha] : a.runs)
          for (auto [lb, hb] : b.runs) runs.emplace_back(la + lb, ha + hb);
      }
    }
  return acc;
}

VoxelSet row_minkowski(int dim, double h, const Vec& origin,
                       const std::vector<VoxelRow>& ra,
                       const std::vector<VoxelRow>& rb) {
  RowMap acc = row_minkowski_map(dim, ra, rb);
  return cells_from_rowmap(dim, h, origin, acc);
}

double row_minkowski_volume(int dim, double h,
                            const std::vector<VoxelRow>& ra,
                            const std::vector<VoxelRow>& rb) {
  RowMap acc = row_minkowski_map(dim, ra, rb);
  int64_t cells = 0;
  for (auto& [prefix, runs] : acc) cells += merge_runs(runs);
  return std::pow(h, dim) * static_cast<double>(cells);
}

// Outer (cover=true) or inner (cover=false) approximation of s*X on a grid
// of spacing h anchored at s*origin(X).
std::vector<VoxelRow> resampled_rows(const VoxelSet& x, double s, double h,
                                     bool cover) {
  RowMap acc;
  const int d = x.dim();
  const double hs = x.spacing() * s;
  for (const auto& c : x.cells()) {
    int32_t lo[kMaxVoxelDim], hi[kMaxVoxelDim];
    bool empty = false;
    for (int k = 0; k < d; ++k) {
      const double a = hs * c[k] / h;
      const double b = hs * (c[k] + 1) / h;
      if (cover) {
        lo[k] = static_cast<int32_t>(std::floor(a + 1e-9));
        hi[k] = static_cast<int32_t>(std::ceil(b - 1e-9));
      } else {
        lo[k] = static_cast<int32_t>(std::ceil(a - 1e-9));
        hi[k] = static_cast<int32_t>(std::floor(b + 1e-9));
      }
      if (hi[k] <= lo[k]) empty = true;
    }
    if (empty) continue;
    Prefix p{};
    std::vector<int32_t> idx(d > 1 ? d - 1 : 0);
    for (int k = 0; k + 1 < d; ++k) idx[k] = lo[k];
    while (true) {
      for (int k = 0; k + 1 < d; ++k) p[k] = idx[k];
      acc[p].emplace_back(lo[d - 1], hi[d - 1]);
      int k = 0;
      for (; k + 1 < d; ++k) {
        if (++idx[k] < hi[k]) break;
        idx[k] = lo[k];
      }
      if (k + 1 >= d) break;
    }
  }
  std::vector<VoxelRow> rows;
  for (auto& [prefix, runs] : acc) {
    merge_runs(runs);
    rows.push_back(VoxelRow{prefix, std::move(runs)});
  }
  return rows;
}

std::size_t boundary_cell_count(const VoxelSet& s) {
  std::size_t n = 0;
  for (const auto& c : s.cells()) {
    bool boundary = false;
    for (int k = 0; k < s.dim() && !boundary; ++k) {
      Cell nb = c;
      nb[k] = c[k] - 1;
      if (!s.contains_cell(nb)) { boundary = true; break; }
      nb[k] = c[k] + 1;
      if (!s.contains_cell(nb)) boundary = true;
    }
    if (boundary) ++n;
  }
  return n;
}

}  // namespace

namespace {

struct MinkowskiPlan {
  bool commensurable = false;
  int qa = 1, qb = 1;
  double h = 0.0;
  Vec origin;
};

MinkowskiPlan plan_minkowski(const VoxelSet& a, const VoxelSet& b, double t) {
  if (a.dim() != b.dim())
    throw PreconditionError("minkowski_combine: dimension mismatch");
  if (!(t > 0.0) || t > 1.0)
    throw PreconditionError("minkowski_combine: t must be in (0,1]");
  if (a.empty() || b.empty())
    throw PreconditionError("minkowski_combine: empty input set");
  MinkowskiPlan plan;
  plan.origin = t * a.origin() + (1.0 - t) * b.origin();
  const double sa = t * a.spacing();
  const double sb = (1.0 - t) * b.spacing();
  // Cap the refinement factors; past that the expansion cost outweighs the
  // exactness and the certified resampling path takes over.
  for (int qa = 1; qa <= 16; ++qa) {
    const double h = sa / qa;
    const double qb_real = sb / h;
    const double qb = std::round(qb_real);
    if (qb < 1 || qb > 16) continue;
    if (std::abs(qb_real - qb) > 1e-9 * std::max(1.0, qb)) continue;
    plan.commensurable = true;
    plan.qa = qa;
    plan.qb = static_cast<int>(qb);
    plan.h = h;
    return plan;
  }
  plan.h = std::min(sa, sb) / 2.0;
  return plan;
}

}  // namespace

MinkowskiResult minkowski_combine(const VoxelSet& a, const VoxelSet& b,
                                  double t) {
  if (a.dim() == b.dim() && t == 1.0) {
    if (a.empty() || b.empty())
      throw PreconditionError("minkowski_combine: empty input set");
    return MinkowskiResult{a, a.volume(), 0.0, false};
  }
  MinkowskiPlan plan = plan_minkowski(a, b, t);
  const int d = a.dim();
  if (plan.commensurable) {
    auto ra = expanded_rows(a, plan.qa);
    auto rb = expanded_rows(b, plan.qb);
    VoxelSet sum = row_minkowski(d, plan.h, plan.origin, ra, rb);
    MinkowskiResult r{std::move(sum), 0.0, 0.0, false};
    r.volume = r.sum.volume();
    return r;
  }
  // Conservative resampling: outer covers give the reported set, an inner
  // approximation certifies the volume error.
  auto ra_out = resampled_rows(a, t, plan.h, true);
  auto rb_out = resampled_rows(b, 1.0 - t, plan.h, true);
  auto ra_in = resampled_rows(a, t, plan.h, false);
  auto rb_in = resampled_rows(b, 1.0 - t, plan.h, false);
  VoxelSet outer = row_minkowski(d, plan.h, plan.origin, ra_out, rb_out);
  double inner_vol = 0.0;
  if (!ra_in.empty() && !rb_in.empty())
    inner_vol = row_minkowski_volume(d, plan.h, ra_in, rb_in);
  MinkowskiResult r{std::move(outer), 0.0, 0.0, true};
  r.volume = r.sum.volume();
  r.error_bound = r.volume - inner_vol;
  return r;
}

Measured minkowski_volume(const VoxelSet& a, const VoxelSet& b, double t) {
  if (a.dim() == b.dim() && t == 1.0) {
    if (a.empty() || b.empty())
      throw PreconditionError("minkowski_combine: empty input set");
    return Measured{a.volume(), 0.0};
  }
  MinkowskiPlan plan = plan_minkowski(a, b, t);
  const int d = a.dim();
  if (plan.commensurable) {
    auto ra = expanded_rows(a, plan.qa);
    auto rb = expanded_rows(b, plan.qb);
    return Measured{row_minkowski_volume(d, plan.h, ra, rb), 0.0};
  }
  auto ra_out = resampled_rows(a, t, plan.h, true);
  auto rb_out = resampled_rows(b, 1.0 - t, plan.h, true);
  auto ra_in = resampled_rows(a, t, plan.h, false);
  auto rb_in = resampled_rows(b, 1.0 - t, plan.h, false);
  const double outer = row_minkowski_volume(d, plan.h, ra_out, rb_out);
  double inner = 0.0;
  if (!ra_in.empty() && !rb_in.empty())
    inner = row_minkowski_volume(d, plan.h, ra_in, rb_in);
  return Measured{outer, outer - inner};
}

Measured bm_deficit(const VoxelSet& a, const VoxelSet& b, double t) {
  if (!(t > 0.0) || t > 0.5)
    throw PreconditionError("bm_deficit: t must be in (0, 1/2]");
  const double va = a.volume();
  const double vb = b.volume();
  if (std::abs(va - vb) > 1e-9 * std::max(va, vb))
    throw PreconditionError("bm_deficit: volumes differ beyond tolerance");
  Measured mk = minkowski_volume(a, b, t);
  return Measured{mk.value / va - 1.0, mk.error / va};
}

Measured hull_gap(const VoxelSet& a) {
  if (a.empty()) throw PreconditionError("hull_gap: empty set");
  const double va = a.volume();
  const double vh = convex_hull(a).volume();
  // The hull of a voxel set is the hull of its corner points, so the gap is
  // exact up to floating point roundoff.
  return Measured{(vh - va) / va, 1e-12 * std::max(1.0, vh / va)};
}

SymDiffResult sym_diff_min_translation(const VoxelSet& a, const VoxelSet& b) {
  if (a.dim() != b.dim())
    throw PreconditionError("sym_diff: dimension mismatch");
  if (std::abs(a.spacing() - b.spacing()) > 1e-9 * a.spacing())
    throw PreconditionError("sym_diff: spacings differ");
  const int d = a.dim();
  const double h = a.spacing();

  if (a.empty() || b.empty()) {
    SymDiffResult r;
    r.translation = Vec::Zero(d);
    r.value = a.volume() + b.volume();
    r.error = 0.0;
    return r;
  }

  RowMap bmap;
  for (const auto& row : voxel_rows(b)) bmap[row.prefix] = row.runs;
  const auto arows = voxel_rows(a);

  auto overlap = [&](const std::array<int64_t, kMaxVoxelDim>& k) -> int64_t {
    int64_t count = 0;
    Prefix p{};
    for (const auto& row : arows) {
      p = row.prefix;
      for (int i = 0; i + 1 < d; ++i)
        p[i] = static_cast<int32_t>(row.prefix[i] + k[i]);
      auto it = bmap.find(p);
      if (it == bmap.end()) continue;
      const Runs& rb = it->second;
      const int32_t shift = static_cast<int32_t>(k[d - 1]);
      std::size_t i = 0, j = 0;
      while (i < row.runs.size() && j < rb.size()) {
        const int32_t lo = std::max(row.runs[i].first + shift, rb[j].first);
        const int32_t hi = std::min(row.runs[i].second + shift, rb[j].second);
        if (hi > lo) count += hi - lo;
        if (row.runs[i].second + shift < rb[j].second) ++i;
        else ++j;
      }
    }
    return count;
  };

  const Vec delta = b.origin() - a.origin();
  const Vec ca = a.centroid();
  const Vec cb = b.centroid();
  std::array<int64_t, kMaxVoxelDim> best{};
  for (int k = 0; k < d; ++k)
    best[k] = llround((cb[k] - ca[k] - delta[k]) / h);
  int64_t best_ov = overlap(best);

  // Coarse-to-fine windows, then greedy lattice descent.
  for (int64_t step : {16, 4, 1}) {
    std::array<int64_t, kMaxVoxelDim> center = best;
    std::array<int64_t, kMaxVoxelDim> off{};
    for (int k = 0; k < d; ++k) off[k] = -3;
    while (true) {
      std::array<int64_t, kMaxVoxelDim> cand = center;
      for (int k = 0; k < d; ++k) cand[k] += step * off[k];
      const int64_t ov = overlap(cand);
      if (ov > best_ov) { best_ov = ov; best = cand; }
      int k = 0;
      for (; k < d; ++k) {
        if (++off[k] <= 3) break;
        off[k] = -3;
      }
      if (k == d) break;
    }
  }
  bool improved = true;
  while (improved) {
    improved = false;
    for (int k = 0; k < d && !improved; ++k)
      for (int s : {-1, 1}) {
        auto cand = best;
        cand[k] += s;
        const int64_t ov = overlap(cand);
        if (ov > best_ov) {
          best_ov = ov;
          best = cand;
          improved = true;
          break;
        }
      }
  }

  SymDiffResult r;
  r.translation = delta;
  for (int k = 0; k < d; ++k) r.translation[k] += h * best[k];
  const double hn = std::pow(h, d);
  r.value = hn * (static_cast<double>(a.cell_count()) +
                  static_cast<double>(b.cell_count()) - 2.0 * best_ov);
  r.error = hn * static_cast<double>(boundary_cell_count(a) +
                                     boundary_cell_count(b));
  return r;
}

double volume(const VoxelSet& x) { return x.volume(); }
double volume(const Polytope& p) { return p.volume(); }

}  // namespace bmstab
