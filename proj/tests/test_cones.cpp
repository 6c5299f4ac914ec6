#include <doctest.h>

#include <cmath>

#include "bmstab/cones.hpp"
#include "bmstab/rng.hpp"
#include "bmstab/set_arith.hpp"

using namespace bmstab;

namespace {

VoxelSet voxel_box(int dim, const std::vector<int>& lo,
                   const std::vector<int>& hi, double h) {
  std::vector<Cell> cells;
  std::vector<int> idx(lo.begin(), lo.end());
  while (true) {
    Cell c{};
    for (int k = 0; k < dim; ++k) c[k] = idx[k];
    cells.push_back(c);
    int k = 0;
    for (; k < dim; ++k) {
      if (++idx[k] < hi[k]) break;
      idx[k] = lo[k];
    }
    if (k == dim) break;
  }
  return VoxelSet::from_cells(dim, h, std::move(cells));
}

VoxelSet random_blob(int dim, int want, double h, uint64_t seed) {
  Rng rng(seed);
  const int box = (dim == 1) ? 4 * want : 24;
  const int offset = -box / 2;
  std::vector<Cell> cells;
  while (static_cast<int>(cells.size()) < want) {
    Cell c{};
    for (int k = 0; k < dim; ++k)
      c[k] = static_cast<int32_t>(rng.below(box)) + offset;
    cells.push_back(c);
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  }
  return VoxelSet::from_cells(dim, h, std::move(cells));
}

}  // namespace

TEST_CASE("regular simplex frames") {
  for (int n = 1; n <= 5; ++n) {
    SimplexFrame f = regular_simplex(n);
    REQUIRE(static_cast<int>(f.vertices.size()) == n + 1);

    Vec sum = Vec::Zero(n);
    for (const auto& v : f.vertices) sum += v;
    CHECK(sum.norm() <= 1e-9);

    // All pairwise distances equal; all pairwise inner products equal.
    const double d0 = (f.vertices[0] - f.vertices[1]).norm();
    const double ip0 = f.vertices[0].dot(f.vertices[1]);
    for (int i = 0; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) {
        CHECK((f.vertices[i] - f.vertices[j]).norm() ==
              doctest::Approx(d0).epsilon(1e-9));
        CHECK(f.vertices[i].dot(f.vertices[j]) ==
              doctest::Approx(ip0).epsilon(1e-9));
      }

    CHECK(f.polytope().volume() == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(regular_simplex(0), PreconditionError);
}

TEST_CASE("simplex frame in 1d is the centered unit interval") {
  SimplexFrame f = regular_simplex(1);
  const double a = f.vertices[0][0];
  const double b = f.vertices[1][0];
  CHECK(std::abs(a) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a * b < 0);
}

TEST_CASE("unit area equilateral triangle side length") {
  SimplexFrame f = regular_simplex(2);
  const double side = (f.vertices[0] - f.vertices[1]).norm();
  // sqrt(3)/4 s^2 = 1.
  CHECK(std::sqrt(3.0) / 4.0 * side * side == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cones essentially partition space") {
  for (int n : {1, 2, 3}) {
    ConeFamily fam(regular_simplex(n));
    Rng rng(100 + n);
    int multi_hits_off_boundary = 0;
    for (int trial = 0; trial < 100000; ++trial) {
      Vec p = rng.gaussian_vector(n);
      int hits = 0;
      for (int i = 0; i < fam.count(); ++i)
        if (fam.in_cone(i, p, 1e-12)) ++hits;
      CHECK(hits >= 1);
      if (hits > 1) {
        // Allowed only within 1e-9 of a shared facet plane.
        double near = std::numeric_limits<double>::infinity();
        for (int i = 0; i < fam.count(); ++i)
          for (const auto& h : fam.cone_halfspaces(i))
            near = std::min(near, std::abs(h.normal.dot(p)));
        if (near > 1e-9 * std::max(1.0, p.norm())) ++multi_hits_off_boundary;
      }
    }
    CHECK(multi_hits_off_boundary == 0);
  }
}

TEST_CASE("membership picks the smallest containing index") {
  ConeFamily fam(regular_simplex(2));
  // Facet centroid opposite e_0 generates cone 0.
  Vec c = 0.5 * (fam.frame().vertices[1] + fam.frame().vertices[2]);
  CHECK(fam.membership(c) == 0);
  CHECK(fam.membership(Vec::Zero(2)) == 0);

  ConeFamily fam1(regular_simplex(1));
  Vec p(1);
  p << 0.7;
  const int side = fam1.membership(p);
  p << -0.7;
  CHECK(fam1.membership(p) != side);
}

TEST_CASE("membership agrees with brute-force cone scan") {
  ConeFamily fam(regular_simplex(3));
  Rng rng(7);
  for (int trial = 0; trial < 10000; ++trial) {
    Vec p = rng.gaussian_vector(3);
    const int m = fam.membership(p);
    int first = -1;
    for (int i = 0; i < fam.count(); ++i)
      if (fam.in_cone(i, p)) { first = i; break; }
    CHECK(m == first);
  }
}

TEST_CASE("exact cone masses sum to the set volume") {
  for (int n : {1, 2, 3}) {
    ConeFamily fam(regular_simplex(n));
    VoxelSet s = random_blob(n, n == 1 ? 60 : 300, 0.21, 55 + n);
    Rng rng(77);
    Vec shift = 0.3 * rng.gaussian_vector(n);
    std::vector<double> m = cone_masses(s, fam, shift);
    double total = 0;
    for (double v : m) total += v;
    CHECK(total == doctest::Approx(s.volume()).epsilon(1e-9));
  }
}

TEST_CASE("cone masses match a subdivision estimate") {
  ConeFamily fam(regular_simplex(2));
  VoxelSet s = voxel_box(2, {-3, -2}, {4, 5}, 0.5);
  Vec shift(2);
  shift << 0.17, -0.42;
  std::vector<double> exact = cone_masses(s, fam, shift);
  // Refined center-rule estimate: each cell split 32x32.
  std::vector<double> est(fam.count(), 0.0);
  const int sub = 32;
  const double w = s.volume() / (s.cell_count() * sub * sub);
  for (const auto& c : s.cells())
    for (int i = 0; i < sub; ++i)
      for (int j = 0; j < sub; ++j) {
        Vec p(2);
        p << s.origin()[0] + s.spacing() * (c[0] + (i + 0.5) / sub),
            s.origin()[1] + s.spacing() * (c[1] + (j + 0.5) / sub);
        est[fam.membership(p + shift)] += w;
      }
  for (int i = 0; i < fam.count(); ++i)
    CHECK(exact[i] == doctest::Approx(est[i]).epsilon(0.02));
}

TEST_CASE("balancing translation: identical sets return zero") {
  ConeFamily fam(regular_simplex(2));
  VoxelSet a = random_blob(2, 150, 0.3, 5);
  BalanceResult r = balancing_translation(a, a, fam);
  CHECK(r.v.norm() == 0.0);
  CHECK(r.residual <= 1e-12);
}

TEST_CASE("balancing translation: 1d shifted intervals") {
  // A = [-1,1], B = [-2,0]; equal cone masses force v = 1.
  ConeFamily fam(regular_simplex(1));
  VoxelSet a = VoxelSet::interval_union_1d(0.01, {{-100, 100}});
  VoxelSet b = VoxelSet::interval_union_1d(0.01, {{-200, 0}});
  BalanceResult r = balancing_translation(a, b, fam);
  CHECK(r.v[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.residual <= 1e-6 * a.volume());
}

TEST_CASE("balancing translation on random equal-volume pairs") {
  for (int n : {1, 2}) {
    ConeFamily fam(regular_simplex(n));
    for (uint64_t seed = 0; seed < 3; ++seed) {
      VoxelSet a = random_blob(n, n == 1 ? 80 : 220, 0.25, 900 + seed);
      VoxelSet b = random_blob(n, n == 1 ? 80 : 220, 0.25, 800 + seed);
      BalanceResult r = balancing_translation(a, b, fam);
      CHECK(r.residual <= 1e-6 * a.volume());
      // Solver self-check: recomputing masses at the solution agrees.
      std::vector<double> mb = cone_masses(b, fam, r.v);
      for (int i = 0; i < fam.count(); ++i)
        CHECK(std::abs(mb[i] - r.masses_a[i]) <= 1e-6 * a.volume() + 1e-12);
    }
  }
}

TEST_CASE("accepted residuals decrease monotonically") {
  ConeFamily fam(regular_simplex(2));
  VoxelSet a = random_blob(2, 200, 0.25, 42);
  VoxelSet b = random_blob(2, 200, 0.25, 24);
  BalanceResult r = balancing_translation(a, b, fam);
  for (std::size_t i = 1; i < r.accepted_residuals.size(); ++i)
    CHECK(r.accepted_residuals[i] <= r.accepted_residuals[i - 1]);
}

TEST_CASE("cone split deficits") {
  ConeFamily fam(regular_simplex(2));

  // Convex symmetric set: all per-cone deficits at grid-noise scale.
  VoxelSet sq = voxel_box(2, {-8, -8}, {8, 8}, 0.125);
  ConeSplitResult r = cone_split_deficits(sq, sq, fam, 0.5);
  CHECK(r.w_n == doctest::Approx(3.0 * std::pow(32.0, 2)));
  for (const auto& row : r.rows) {
    CHECK(row.volume_a == doctest::Approx(row.volume_b).epsilon(1e-12));
    CHECK(row.deficit >= -1e-12);
    CHECK(row.deficit <= 0.2);  // staircase noise on cone slices
  }
  // Superadditivity against the global sum.
  CHECK(r.sum_of_parts <= r.global_sum_volume + r.overlap_allowance + 1e-12);

  // n=1 split of an interval into two rays.
  ConeFamily fam1(regular_simplex(1));
  VoxelSet iv = VoxelSet::interval_union_1d(0.01, {{-100, 100}});
  ConeSplitResult r1 = cone_split_deficits(iv, iv, fam1, 0.5);
  for (const auto& row : r1.rows) CHECK(row.deficit == doctest::Approx(0.0));

  // Random balanced pairs keep superadditivity.
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    VoxelSet a = random_blob(2, 240, 0.2, seed * 13);
    VoxelSet b = random_blob(2, 240, 0.2, seed * 31);
    BalanceResult bal = balancing_translation(a, b, fam);
    VoxelSet bs = b.translated(bal.v);
    ConeSplitResult rs = cone_split_deficits(a, bs, fam, 0.5, 0.05);
    CHECK(rs.sum_of_parts <= rs.global_sum_volume + rs.overlap_allowance + 1e-12);
  }
}

TEST_CASE("cone split json report carries one row per cone") {
  ConeFamily fam(regular_simplex(2));
  VoxelSet sq = voxel_box(2, {-6, -6}, {6, 6}, 0.125);
  ConeSplitResult r = cone_split_deficits(sq, sq, fam, 0.5);
  const std::string j = cone_split_to_json(r);
  CHECK(j.find("\"cone_index\": 0") != std::string::npos);
  CHECK(j.find("\"cone_index\": 2") != std::string::npos);
  CHECK(j.find("\"volume_A\"") != std::string::npos);
  CHECK(j.find("\"grid_error\"") != std::string::npos);
}

TEST_CASE("cone split rejects unbalanced masses") {
  ConeFamily fam(regular_simplex(2));
  VoxelSet a = voxel_box(2, {-8, -8}, {8, 8}, 0.125);
  VoxelSet b = a.translated_cells(Cell{30, 0, 0, 0});
  CHECK_THROWS_AS(cone_split_deficits(a, b, fam, 0.5, 1e-3), PreconditionError);
}
