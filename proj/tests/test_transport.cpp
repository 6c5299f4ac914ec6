#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "bmstab/rng.hpp"
#include "bmstab/transport.hpp"

using namespace bmstab;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

DiscreteMeasure measure_from(std::vector<Vec> pts) {
  DiscreteMeasure m;
  m.weights.assign(pts.size(), 1.0 / pts.size());
  m.points = std::move(pts);
  return m;
}

// Exhaustive assignment oracle for equal-weight measures of size <= 8.
double brute_force_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const int n = static_cast<int>(mu.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (int i = 0; i < n; ++i)
      c += (mu.points[i] - nu.points[perm[i]]).squaredNorm();
    best = std::min(best, c / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("self transport is the diagonal") {
  Rng rng(3);
  std::vector<Vec> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(v2(rng.uniform01(), rng.uniform01()));
  DiscreteMeasure mu = measure_from(pts);
  TransportPlan plan = solve_ot(mu, mu);
  CHECK(plan.cost == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(plan.marginal_residual() <= 1e-9);
  for (const auto& e : plan.entries) CHECK(e.i == e.j);

  TransportMap map = barycentric_map(plan);
  for (std::size_t i = 0; i < map.images.size(); ++i)
    CHECK((map.images[i] - mu.points[i]).norm() <= 1e-9);
}

TEST_CASE("optimal cost matches the exhaustive oracle on tiny instances") {
  Rng rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(6));
    std::vector<Vec> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(v2(rng.normal(), rng.normal()));
      b.push_back(v2(rng.normal(), rng.normal()));
    }
    DiscreteMeasure mu = measure_from(a), nu = measure_from(b);
    TransportPlan plan = solve_ot(mu, nu);
    CHECK(plan.cost == doctest::Approx(brute_force_cost(mu, nu)).epsilon(1e-9));
    CHECK(plan.marginal_residual() <= 1e-9);
    CHECK(plan.entries.size() <= mu.size() + nu.size() - 1);
  }
}

TEST_CASE("translation gives identity matching at cost |v|^2") {
  Rng rng(5);
  std::vector<Vec> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(v2(rng.uniform01(), rng.uniform01()));
  Vec v = v2(2.0, -1.0);
  std::vector<Vec> moved;
  for (const auto& p : pts) moved.push_back(p + v);
  TransportPlan plan = solve_ot(measure_from(pts), measure_from(moved));
  CHECK(plan.cost == doctest::Approx(v.squaredNorm()).epsilon(1e-9));
  for (const auto& e : plan.entries) CHECK(e.i == e.j);
}

TEST_CASE("1d equal-weight plans are the sorted matching") {
  Rng rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 40 + static_cast<int>(rng.below(80));
    std::vector<Vec> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(Vec::Constant(1, rng.normal()));
      b.push_back(Vec::Constant(1, 3.0 * rng.uniform01()));
    }
    DiscreteMeasure mu = measure_from(a), nu = measure_from(b);
    TransportPlan plan = solve_ot(mu, nu);

    std::vector<int> ra(n), rb(n);
    std::iota(ra.begin(), ra.end(), 0);
    std::iota(rb.begin(), rb.end(), 0);
    std::sort(ra.begin(), ra.end(),
              [&](int i, int j) { return a[i][0] < a[j][0]; });
    std::sort(rb.begin(), rb.end(),
              [&](int i, int j) { return b[i][0] < b[j][0]; });
    std::vector<int> match(n);
    for (int k = 0; k < n; ++k) match[ra[k]] = rb[k];
    REQUIRE(plan.entries.size() == static_cast<std::size_t>(n));
    for (const auto& e : plan.entries) CHECK(e.j == match[e.i]);
  }
}

TEST_CASE("exact plans have no cyclical monotonicity violations") {
  Rng rng(11);
  std::vector<Vec> a, b;
  for (int i = 0; i < 150; ++i) {
    a.push_back(v2(rng.normal(), rng.normal()));
    b.push_back(v2(1.0 + 0.5 * rng.normal(), rng.normal()));
  }
  TransportPlan plan = solve_ot(measure_from(a), measure_from(b));
  CHECK(cyclical_monotonicity_check(plan, 20000, 1) == 0);
  CHECK(cyclical_monotonicity_check(plan, 20000, 999) == 0);

  // A deliberately swapped pair in a 1D monotone plan must violate.
  std::vector<Vec> xs, ys;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(Vec::Constant(1, static_cast<double>(i)));
    ys.push_back(Vec::Constant(1, static_cast<double>(i) + 0.25));
  }
  TransportPlan swapped = solve_ot(measure_from(xs), measure_from(ys));
  for (auto& e : swapped.entries) {
    if (e.i == 3) e.j = 7;
    else if (e.i == 7) e.j = 3;
  }
  CHECK(cyclical_monotonicity_check(swapped, 5000, 7) >= 1);
}

TEST_CASE("complementary slackness on exact plans") {
  Rng rng(31);
  std::vector<Vec> a, b;
  for (int i = 0; i < 80; ++i) {
    a.push_back(v2(rng.normal(), rng.normal()));
    b.push_back(v2(rng.normal() + 0.3, rng.normal() - 0.1));
  }
  TransportPlan plan = solve_ot(measure_from(a), measure_from(b));
  for (const auto& e : plan.entries) {
    const double c = (a[e.i] - b[e.j]).squaredNorm();
    CHECK(std::abs(plan.potentials.phi[e.i] + plan.potentials.psi[e.j] - c) <=
          1e-9);
  }
  // Dual feasibility: phi_i + psi_j <= c_ij everywhere.
  for (int i = 0; i < 80; ++i)
    for (int j = 0; j < 80; ++j)
      CHECK(plan.potentials.phi[i] + plan.potentials.psi[j] <=
            (a[i] - b[j]).squaredNorm() + 1e-8);
}

TEST_CASE("entropic mode approximates the exact cost") {
  Rng rng(23);
  std::vector<Vec> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back(v2(rng.uniform01(), rng.uniform01()));
    b.push_back(v2(rng.uniform01() + 0.5, rng.uniform01()));
  }
  DiscreteMeasure mu = measure_from(a), nu = measure_from(b);
  TransportPlan exact = solve_ot(mu, nu);
  TransportPlan ent = solve_ot(mu, nu, OtMode::entropic, 0.01);
  CHECK(ent.entropic.marginal_residual <= 1e-6);
  CHECK(ent.cost >= exact.cost - 1e-9);
  CHECK(ent.cost <= exact.cost + 0.15);
  CHECK(ent.entropic.duality_gap >= -1e-6);
}

TEST_CASE("discretize_uniform places sites inside with the right centroid") {
  Polytope tri = Polytope::hull_of_points(
      2, {v2(0, 0), v2(2, 0), v2(0, 3)});
  DiscreteMeasure m = discretize_uniform(tri, 800, 42);
  CHECK(m.size() == 800);
  m.validate();
  Vec mean = Vec::Zero(2);
  for (const auto& p : m.points) {
    CHECK(tri.contains(p, 1e-9));
    mean += p;
  }
  mean /= 800.0;
  // True centroid (2/3, 1) within 3 sigma ~ 3 * diam/sqrt(12 N).
  const Vec c = tri.centroid();
  CHECK((mean - c).norm() <= 3.0 * 3.6 / std::sqrt(12.0 * 800));

  DiscreteMeasure one = discretize_uniform(tri, 1, 7);
  CHECK(one.size() == 1);
  CHECK(one.weights[0] == 1.0);
}

TEST_CASE("barycentric images stay in the hull of target sites") {
  Rng rng(67);
  std::vector<Vec> a, b;
  for (int i = 0; i < 120; ++i) {
    a.push_back(v2(rng.normal(), rng.normal()));
    b.push_back(v2(rng.normal(), rng.normal()));
  }
  TransportMap map = barycentric_map(solve_ot(measure_from(a), measure_from(b)));
  Polytope hull = Polytope::hull_of_points(2, b);
  for (const auto& img : map.images) CHECK(hull.contains(img, 1e-9));
}

TEST_CASE("plan and map csv exports") {
  Rng rng(44);
  std::vector<Vec> a, b;
  for (int i = 0; i < 30; ++i) {
    a.push_back(v2(rng.normal(), rng.normal()));
    b.push_back(v2(rng.normal() + 1.0, rng.normal()));
  }
  TransportMap map = barycentric_map(solve_ot(measure_from(a), measure_from(b)));
  export_plan_csv(map.plan, "plan_test.csv");
  export_map_csv(map, "map_test.csv");
  std::ifstream pf("plan_test.csv");
  std::string header;
  std::getline(pf, header);
  CHECK(header == "i,j,mass,cost_ij");
  int lines = 0;
  for (std::string line; std::getline(pf, line);) ++lines;
  CHECK(lines == static_cast<int>(map.plan.entries.size()));
  std::ifstream mf("map_test.csv");
  std::getline(mf, header);
  CHECK(header.rfind("x0,x1,image0,image1", 0) == 0);
  std::remove("plan_test.csv");
  std::remove("map_test.csv");
}

TEST_CASE("exact budget and degenerate inputs are refused") {
  std::vector<Vec> big;
  for (int i = 0; i < kExactSiteBudget + 1; ++i)
    big.push_back(v2(i, 0.5 * i));
  DiscreteMeasure mu = measure_from(big);
  CHECK_THROWS_AS(solve_ot(mu, mu), PreconditionError);

  DiscreteMeasure dup;
  dup.points = {v2(0, 0), v2(0, 0)};
  dup.weights = {0.5, 0.5};
  CHECK_THROWS_AS(dup.validate(), PreconditionError);
}
