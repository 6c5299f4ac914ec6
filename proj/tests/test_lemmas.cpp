#include <doctest.h>

#include <cmath>

#include "bmstab/lemmas.hpp"
#include "bmstab/rng.hpp"

using namespace bmstab;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// Random polytope sandwiched between B(o,1/ell) and B(o,ell).
Polytope random_sandwich_polytope(int n, double ell, uint64_t seed) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 50; ++attempt) {
    const int pts = (n == 2 ? 14 : 30) + static_cast<int>(rng.below(10));
    std::vector<Vec> cloud;
    for (int i = 0; i < pts; ++i)
      cloud.push_back(rng.unit_vector(n) *
                      rng.uniform(0.75 * ell, 0.95 * ell));
    Polytope p = Polytope::hull_of_points(n, cloud);
    if (!p.is_degenerate() && ball_sandwich_check(p, ell)) return p;
  }
  throw std::runtime_error("random_sandwich_polytope: no luck");
}

}  // namespace

TEST_CASE("lambda bound constants") {
  CHECK(LambdaBoundConstants::make(2).alpha_n == doctest::Approx(std::pow(2.0, -22.0)));
  CHECK(LambdaBoundConstants::make(6).alpha_n == doctest::Approx(std::pow(2.0, -30.0)));
}

TEST_CASE("lambda bound direct evaluations") {
  // All-ones spectrum: both sides vanish.
  LambdaBoundCheck c1 = check_lambdabound(3, 0.31, {1.0, 1.0, 1.0});
  CHECK(c1.pass);
  CHECK(c1.slack == doctest::Approx(0.0));

  // n=2, t=1/2, spectrum (2, 1/2): RHS = 2*0.125 + 16*0.125^2 = 0.5.
  LambdaBoundCheck c2 = check_lambdabound(2, 0.5, {2.0, 0.5});
  CHECK(c2.pass);
  const double lhs = std::pow(2.0, -22.0) * 1.0;
  CHECK(c2.slack == doctest::Approx(0.5 - lhs).epsilon(1e-12));

  LambdaBoundCheck c3 = check_lambdabound(3, 0.05, {10.0, 1.0, 0.1});
  CHECK(c3.pass);
  CHECK(c3.slack > 0);

  // Case-split corner: lambda at the t/2 boundary.
  LambdaBoundCheck c4 = check_lambdabound(2, 0.5, {0.25, 4.0});
  CHECK(c4.pass);

  CHECK_THROWS_AS(check_lambdabound(2, 0.5, {1.0, -1.0}), PreconditionError);
  CHECK_THROWS_AS(check_lambdabound(2, 0.7, {1.0, 1.0}), PreconditionError);
}

TEST_CASE("lambda bound scan is clean and the control fails") {
  LambdaScanReport rep = scan_lambdabound(6, 100000, 2024);
  CHECK(rep.violations == 0);
  CHECK(rep.min_slack >= 0);

  LambdaScanReport control = scan_lambdabound(2, 20000, 2024, 1.0);
  CHECK(control.violations > 0);
}

TEST_CASE("probabilistic lemma parameters recompute bit for bit") {
  for (int n : {1, 2, 3, 5}) {
    for (double ell : {1.5, 3.0, 10.0}) {
      ProbLemParams a = ProbLemParams::compute(n, ell);
      ProbLemParams b = ProbLemParams::compute(n, ell);
      CHECK(a.psi == 0.1);
      CHECK(a.phi == 1.0 / (4.0 * ell));
      CHECK(a.xi == b.xi);
      CHECK(a.theta == b.theta);
      CHECK(a.zeta == b.zeta);
      CHECK(a.alpha == b.alpha);
      CHECK(a.eta == b.eta);
      CHECK(a.alpha <= 0.5);
      CHECK(a.theta == 2.0 * ell * ell / (a.xi * a.xi));
    }
  }
}

TEST_CASE("pointwise ray claim") {
  Polytope ball1 = Polytope::regular_polygon(128, 1.0);
  const double ell = 2.0;

  // X = Y: vacuous.
  Vec x = ball1.vertices()[0];
  RayCheck self = check_pointwise_ray(x, ball1, ball1, ell);
  CHECK(self.pass);
  CHECK(self.vacuous);

  // Concentric balls: |x - y_x| = s = d(x, Y), ratio = 1/ell^2.
  const double s = 0.15;
  Polytope ball2 = ball1.scaled(1.0 - s);
  RayCheck conc = check_pointwise_ray(x, ball1, ball2, ell);
  CHECK(conc.pass);
  CHECK(conc.segment == doctest::Approx(s).epsilon(5e-3));
  CHECK(conc.ratio == doctest::Approx(1.0 / (ell * ell)).epsilon(2e-2));

  // Random sandwich-compliant pairs, many boundary samples.
  Rng rng(31);
  for (int pair = 0; pair < 6; ++pair) {
    const int n = (pair % 2) ? 3 : 2;
    Polytope X = random_sandwich_polytope(n, 2.0, 100 + pair);
    Polytope Y = random_sandwich_polytope(n, 2.0, 200 + pair);
    BoundaryMesh mesh = boundary_quadrature(X, 8);
    for (int t = 0; t < 80; ++t) {
      const auto& f = mesh.facets[rng.below(mesh.facets.size())];
      Vec bc(f.verts.size());
      double tot = 0;
      for (int k = 0; k < bc.size(); ++k) {
        bc[k] = -std::log(std::max(1e-300, rng.uniform01()));
        tot += bc[k];
      }
      Vec p = Vec::Zero(n);
      for (std::size_t k = 0; k < f.verts.size(); ++k)
        p += (bc[k] / tot) * f.verts[k];
      RayCheck chk = check_pointwise_ray(p, X, Y, 2.0);
      CHECK(chk.pass);
    }
  }
}

TEST_CASE("symmetric difference versus boundary distance integral") {
  Polytope sq = Polytope::box(v2(-1, -1), v2(1, 1));
  const double ell = 2.0;

  SdVsDistance self = check_sd_vs_distance(sq, sq, ell, 8);
  CHECK(self.undefined);

  auto rotated = [&](double rho) {
    Mat r(2, 2);
    r << std::cos(rho), -std::sin(rho), std::sin(rho), std::cos(rho);
    return sq.affine_image(r, Vec::Zero(2));
  };
  SdVsDistance d1 = check_sd_vs_distance(sq, rotated(0.10), ell, 16);
  SdVsDistance d2 = check_sd_vs_distance(sq, rotated(0.05), ell, 16);
  CHECK(!d1.undefined);
  CHECK(!d2.undefined);
  CHECK(d1.ratio > 0);
  // Both sides are Theta(rho): the ratio is stable within a factor 2.
  CHECK(d2.ratio / d1.ratio > 0.5);
  CHECK(d2.ratio / d1.ratio < 2.0);
}

TEST_CASE("simplex normal separation") {
  SimplexFrame f2 = regular_simplex(2);
  SimplexNormalsReport r2 = check_simplex_normals(f2.vertices, 2.5);
  CHECK(r2.pass);
  CHECK(r2.sigma > 0.05);

  SimplexFrame f1 = regular_simplex(1);
  SimplexNormalsReport r1 = check_simplex_normals(f1.vertices, 4.1);
  CHECK(r1.sigma == doctest::Approx(1.0));

  SimplexFrame f3 = regular_simplex(3);
  SimplexNormalsReport r3 = check_simplex_normals(f3.vertices, 3.0);
  CHECK(r3.pass);
  CHECK(r3.sigma > 0.01);

  // A simplex violating the ball sandwich is refused.
  std::vector<Vec> thin = {v2(0, 0), v2(1, 0), v2(0.5, 1e-4)};
  CHECK_THROWS_AS(check_simplex_normals(thin, 3.0), PreconditionError);
}

TEST_CASE("simplex normal separation reaches the analytic values") {
  // Regular 2-simplex: the two active inward normals sit 120 degrees
  // apart, and min over unit v of max |<f_i, v>| equals cos(60) = 1/2.
  SimplexFrame f2 = regular_simplex(2);
  SimplexNormalsReport r2 = check_simplex_normals(f2.vertices, 2.5);
  CHECK(r2.sigma == doctest::Approx(0.5).epsilon(1e-6));

  // Regular 3-simplex: the three active normals have pairwise dot -1/3
  // and the symmetric direction attains sigma = 1/3.
  SimplexFrame f3 = regular_simplex(3);
  SimplexNormalsReport r3 = check_simplex_normals(f3.vertices, 3.0);
  CHECK(r3.sigma == doctest::Approx(1.0 / 3.0).epsilon(5e-3));

  // Deterministic for a fixed seed.
  SimplexNormalsReport again = check_simplex_normals(f3.vertices, 3.0);
  CHECK(again.sigma == r3.sigma);
}

TEST_CASE("conelike ball construction") {
  const int n = 3;
  Rng rng(7);
  // w in the hyperplane through the origin with normal f.
  Vec f = rng.unit_vector(n);
  Vec w = rng.gaussian_vector(n);
  w -= f * f.dot(w);
  const double r = std::max(2.0, w.norm() * 1.25);
  w *= std::min(1.0, 0.8 * r / std::max(1e-9, w.norm()));

  SUBCASE("aligned directions pass all four properties") {
    ConelikeBallReport rep =
        construct_conelike_ball(w, f, r, 0.5, f, f, 10000, 5);
    CHECK(rep.all_pass());
    CHECK(rep.worst_distance >= 1.0 / (4.0 * r) - 1e-12);
  }

  SUBCASE("orthogonal y1 still passes the half-mass bound") {
    Vec y1 = rng.unit_vector(n);
    y1 -= f * f.dot(y1);
    ConelikeBallReport rep =
        construct_conelike_ball(w, f, r, 0.4, y1, f, 10000, 6);
    CHECK(rep.half_mass_pass);
    CHECK(rep.half_mass_fraction >= 0.5 - 3.0 * std::sqrt(0.25 / 10000));
  }

  SUBCASE("y2 below the sigma threshold is a precondition error") {
    Vec y2 = rng.unit_vector(n);
    y2 -= f * f.dot(y2);  // cosine 0 < sigma
    CHECK_THROWS_AS(construct_conelike_ball(w, f, r, 0.5, f, y2, 100, 7),
                    PreconditionError);
  }

  SUBCASE("random qualifying inputs pass") {
    for (int rep_i = 0; rep_i < 10; ++rep_i) {
      Rng rr(500 + rep_i);
      Vec ff = rr.unit_vector(n);
      Vec ww = rr.gaussian_vector(n);
      ww -= ff * ff.dot(ww);
      const double rr_r = 1.5 + rr.uniform01() * 3.0;
      if (ww.norm() > rr_r) ww *= 0.9 * rr_r / ww.norm();
      const double sigma = 0.1 + 0.8 * rr.uniform01();
      // y1: nonnegative cosine with f; y2: cosine at least sigma.
      Vec y1 = (rr.unit_vector(n) + ff).normalized();
      if (y1.dot(ff) < 0) y1 = ff;
      Vec tang = rr.unit_vector(n);
      tang -= ff * ff.dot(tang);
      if (tang.norm() > 1e-9) tang.normalize();
      const double c = std::min(1.0, sigma + (1 - sigma) * rr.uniform01());
      Vec y2 = c * ff + std::sqrt(std::max(0.0, 1 - c * c)) * tang;
      ConelikeBallReport rep =
          construct_conelike_ball(ww, ff, rr_r, sigma, y1, y2, 10000, 11 + rep_i);
      CHECK(rep.all_pass());
    }
  }
}

TEST_CASE("facet touch point") {
  SimplexFrame f3 = regular_simplex(3);
  FacetTouchReport rep = facet_touch_point(f3.vertices, 0, 3.0, 4000, 3);
  CHECK(rep.all_pass());

  SimplexFrame f2 = regular_simplex(2);
  for (int facet = 0; facet < 3; ++facet) {
    FacetTouchReport r = facet_touch_point(f2.vertices, facet, 2.5, 4000, 4);
    CHECK(r.all_pass());
  }

  // A stretched simplex still at its sandwich margin passes.
  std::vector<Vec> stretched;
  for (const auto& v : f2.vertices) {
    Vec s = v;
    s[0] *= 1.6;
    stretched.push_back(s);
  }
  FacetTouchReport r = facet_touch_point(stretched, 1, 4.0, 4000, 5);
  CHECK(r.all_pass());

  // r too small violates the sandwich precondition.
  CHECK_THROWS_AS(facet_touch_point(f2.vertices, 0, 1.01, 100, 6),
                  PreconditionError);
}

TEST_CASE("filling lemma") {
  // Convex box: A = C_A = K with mu = 0 holds exactly.
  Polytope k = Polytope::box(v2(-0.6, -0.5), v2(0.5, 0.6));
  VoxelSet a = rasterize_polytope(k, 0.05, /*outer=*/true);
  Polytope c_a = convex_hull(a);
  FillingReport rep = check_filling(a, a, c_a, c_a, k, Vec::Zero(2),
                                    Vec::Zero(2), 0.5, 0.4, 3.0, 0.0);
  CHECK(rep.pass);
  CHECK(rep.escaped_fraction == 0.0);

  // mu inflated far beyond the solved bound: precondition error.
  CHECK_THROWS_AS(check_filling(a, a, c_a, c_a, k, Vec::Zero(2), Vec::Zero(2),
                                0.5, 0.4, 3.0, 10.0 * rep.mu_max),
                  PreconditionError);

  // The solved mu satisfies the scalar constraint and 10x does not.
  auto mu = max_filling_mu(0.5, 0.4, 3.0);
  REQUIRE(mu.has_value());
  const double q = 1.0 / (1.0 / 9.0 + 1.0);
  const double s = 0.5 * 0.4 / 4.0;
  auto ok = [&](double m) {
    return q * (1 + m) <= (1.0 / s) * (s * (1 + m) - m) + 1e-12;
  };
  CHECK(ok(*mu));
  CHECK(!ok(*mu * 10.0));

  // A conelike-style pair from a polygon body.
  Polytope body = Polytope::regular_polygon(10, 1.0);
  VoxelSet av = rasterize_polytope(body, 0.02, /*outer=*/true);
  Polytope hull = convex_hull(av);
  FillingReport rep2 = check_filling(av, av, hull, hull, body, Vec::Zero(2),
                                     Vec::Zero(2), 0.5, 0.4, 3.0, 0.9 * *mu);
  CHECK(rep2.pass);
}
