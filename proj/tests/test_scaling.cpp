#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bmstab/random_scaling.hpp"
#include "bmstab/rng.hpp"

using namespace bmstab;

TEST_CASE("random scalings are orthonormal with uniform stretches") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    RandomScaling q = sample_random_scaling(3, 4.0, seed);
    const Mat res = q.basis * q.basis.transpose() - Mat::Identity(3, 3);
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(q.determinant() >= std::pow(4.0, -3.0) - 1e-12);
    CHECK(q.determinant() <= std::pow(4.0, 3.0) + 1e-12);
    for (int i = 0; i < 3; ++i) {
      CHECK(q.diag[i] >= 0.25 - 1e-12);
      CHECK(q.diag[i] <= 4.0 + 1e-12);
    }
  }
}

TEST_CASE("diagonal marginals pass a KS uniformity test") {
  const int m = 10000;
  const double theta = 3.0;
  for (int coord = 0; coord < 3; ++coord) {
    std::vector<double> xs;
    for (int i = 0; i < m; ++i)
      xs.push_back(sample_random_scaling(3, theta, 40000 + i).diag[coord]);
    std::sort(xs.begin(), xs.end());
    double d = 0;
    const double lo = 1.0 / theta, hi = theta;
    for (int i = 0; i < m; ++i) {
      const double cdf = (xs[i] - lo) / (hi - lo);
      d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / m));
      d = std::max(d, std::abs(cdf - static_cast<double>(i) / m));
    }
    // 1% critical value of the Kolmogorov statistic.
    CHECK(d <= 1.628 / std::sqrt(static_cast<double>(m)));
  }
}

TEST_CASE("theta = 1 scalings act as the identity") {
  RandomScaling q = sample_random_scaling(2, 1.0, 5);
  const Mat m = q.matrix() - Mat::Identity(2, 2);
  CHECK(m.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("probabilistic bound: trivial cases") {
  Polytope c = Polytope::regular_polygon(24, 1.0);
  const double ell = 3.0;

  // x inside C_B: d = 0, any nonnegative estimate passes.
  Vec inside(2);
  inside << 0.2, 0.1;
  auto ident = [](const Mat&, const Vec& qx) { return qx; };
  ProbBoundEstimate e0 =
      mc_probabilistic_bound(c, c, ell, inside, 500, 3, ident);
  CHECK(e0.distance == 0.0);
  CHECK(e0.estimate >= 0.0);

  // C_B = C_A with the identity map: integrand zero.
  Vec x = c.vertices()[0];
  ProbBoundEstimate e1 = mc_probabilistic_bound(c, c, ell, x, 500, 3, ident);
  CHECK(e1.estimate == 0.0);
  CHECK(e1.distance == 0.0);
}

TEST_CASE("probabilistic bound with the radial projection provider") {
  Polytope c_a = Polytope::regular_polygon(24, 1.0);
  Polytope c_b = c_a.scaled(0.9);
  const double ell = 3.0;
  MapProvider radial = radial_projection_provider(c_b);

  Rng rng(1);
  for (int k = 0; k < 5; ++k) {
    const std::size_t vi = rng.below(c_a.vertices().size());
    const Vec x = c_a.vertices()[vi];
    ProbBoundEstimate est =
        mc_probabilistic_bound(c_a, c_b, ell, x, 4000, 70 + k, radial);
    CHECK(est.distance > 0);
    CHECK(est.estimate >= 0);
    CHECK(est.estimate > 0);
    // Bootstrap the batch means: the 2.5% quantile stays positive.
    Rng boot(9);
    double q_low = std::numeric_limits<double>::infinity();
    std::vector<double> means;
    for (int b = 0; b < 200; ++b) {
      double m = 0;
      for (std::size_t i = 0; i < est.batch_means.size(); ++i)
        m += est.batch_means[boot.below(est.batch_means.size())];
      means.push_back(m / est.batch_means.size());
    }
    std::sort(means.begin(), means.end());
    q_low = means[4];  // 2.5% of 200
    CHECK(q_low > 0);
  }
}

TEST_CASE("provider containment is enforced") {
  Polytope c_a = Polytope::regular_polygon(12, 1.0);
  Polytope c_b = c_a.scaled(0.8);
  auto bad = [](const Mat&, const Vec& qx) -> Vec { return 50.0 * qx; };
  Vec x = c_a.vertices()[0];
  CHECK_THROWS_AS(mc_probabilistic_bound(c_a, c_b, 3.0, x, 50, 4, bad),
                  PreconditionError);
}

TEST_CASE("ball sandwich preconditions are enforced") {
  Polytope tiny = Polytope::regular_polygon(12, 0.05);
  Vec x = tiny.vertices()[0];
  auto ident = [](const Mat&, const Vec& qx) { return qx; };
  CHECK_THROWS_AS(mc_probabilistic_bound(tiny, tiny, 3.0, x, 10, 4, ident),
                  PreconditionError);
}
