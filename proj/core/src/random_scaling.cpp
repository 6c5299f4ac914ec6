#include "bmstab/random_scaling.hpp"

#include <cmath>

#include "bmstab/rng.hpp"

namespace bmstab {

RandomScaling sample_random_scaling(int n, double theta, uint64_t seed) {
  if (n < 1) throw PreconditionError("random scaling: n >= 1");
  if (!(theta >= 1)) throw PreconditionError("random scaling: theta >= 1");
  Rng rng(seed);
  RandomScaling q;
  q.seed = seed;
  q.basis = rng.orthonormal_basis(n);
  q.diag = Vec(n);
  for (int i = 0; i < n; ++i) q.diag[i] = rng.uniform(1.0 / theta, theta);
  return q;
}

MapProvider radial_projection_provider(const Polytope& c_b) {
  // Capture the halfspaces by value; all offsets must be positive.
  std::vector<Halfspace> hs = c_b.halfspaces();
  for (const auto& h : hs)
    if (!(h.offset > 0))
      throw PreconditionError("radial projection: origin must be interior");
  return [hs](const Mat& q, const Vec& qx) -> Vec {
    // s* = sup { s : s qx in Q(C_B) } = radial gauge of C_B at Q^{-1} qx.
    const Vec back = q.fullPivLu().solve(qx);
    double s = std::numeric_limits<double>::infinity();
    for (const auto& h : hs) {
      const double d = h.normal.dot(back);
      if (d > 0) s = std::min(s, h.offset / d);
    }
    const double scale = std::min(1.0, s * (1.0 - 1e-12));
    return scale * qx;
  };
}

ProbBoundEstimate mc_probabilistic_bound(const Polytope& c_a,
                                         const Polytope& c_b, double ell,
                                         const Vec& x, int trials,
                                         uint64_t seed,
                                         const MapProvider& provider,
                                         int batches) {
  if (!(ell > 1)) throw PreconditionError("mc_probabilistic_bound: ell > 1");
  const int n = static_cast<int>(x.size());
  // B(o,1/ell) in C_A/2, C_B/2 in B(o,ell).
  for (const Polytope* p : {&c_a, &c_b}) {
    for (const auto& h : p->halfspaces())
      if (h.offset < 2.0 / ell - 1e-9)
        throw PreconditionError("mc_probabilistic_bound: inner ball violated");
    for (const auto& v : p->vertices())
      if (v.norm() > 2.0 * ell + 1e-9)
        throw PreconditionError("mc_probabilistic_bound: outer ball violated");
  }

  ProbBoundEstimate out;
  out.params = ProbLemParams::compute(n, ell);
  out.distance = dist_to_convex(x, c_b);
  out.trials = trials;
  const double theta = out.params.theta;

  batches = std::max(1, std::min(batches, trials));
  out.batch_means.assign(batches, 0.0);
  std::vector<int> batch_count(batches, 0);

  double sum = 0, sum2 = 0;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng = Rng::derived(seed, static_cast<uint64_t>(tr));
    RandomScaling q = sample_random_scaling(n, theta, rng.u64());
    const Mat qm = q.matrix();
    const Vec o_prime = rng.in_ball(n, 1.0 / ell);
    const Vec qx = qm * x;
    const Vec tqx = provider(qm, qx);
    // The provider must stay inside Q(C_B).
    const Vec back = q.inverse() * tqx;
    if (c_b.signed_violation(back) > 1e-6)
      throw PreconditionError(
          "mc_probabilistic_bound: provider left Q(C_B)");
    const Vec qo = qm * o_prime;
    const Vec dir = qx - qo;
    const double len = dir.norm();
    double val = 0.0;
    if (len > 1e-300) val = std::max(0.0, (qx - tqx).dot(dir) / len);
    sum += val;
    sum2 += val * val;
    const int bi = tr % batches;
    out.batch_means[bi] += val;
    batch_count[bi] += 1;
  }
  for (int b = 0; b < batches; ++b)
    if (batch_count[b] > 0) out.batch_means[b] /= batch_count[b];
  out.estimate = sum / trials;
  const double var = std::max(0.0, sum2 / trials - out.estimate * out.estimate);
  out.std_error = std::sqrt(var / trials);
  return out;
}

}  // namespace bmstab
