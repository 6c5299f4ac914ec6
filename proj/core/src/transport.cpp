#include "bmstab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "bmstab/io_util.hpp"
#include "bmstab/rng.hpp"

namespace bmstab {

void DiscreteMeasure::validate() const {
  if (points.empty()) throw PreconditionError("measure: no sites");
  double sum = 0;
  for (double w : weights) {
    if (w < 0) throw PreconditionError("measure: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw PreconditionError("measure: weights must sum to 1");
  if (points.size() != weights.size())
    throw PreconditionError("measure: size mismatch");
  std::vector<const Vec*> ptrs;
  for (const auto& p : points) ptrs.push_back(&p);
  std::sort(ptrs.begin(), ptrs.end(), [](const Vec* a, const Vec* b) {
    for (int k = 0; k < a->size(); ++k) {
      if ((*a)[k] < (*b)[k]) return true;
      if ((*a)[k] > (*b)[k]) return false;
    }
    return false;
  });
  for (std::size_t i = 1; i < ptrs.size(); ++i)
    if (*ptrs[i] == *ptrs[i - 1])
      throw PreconditionError("measure: duplicate sites");
}

DiscreteMeasure discretize_uniform(const Polytope& p, int n_sites,
                                   uint64_t seed) {
  if (n_sites < 1) throw PreconditionError("discretize: need at least 1 site");
  if (p.is_degenerate())
    throw PreconditionError("discretize: degenerate polytope");
  const int n = p.dim();
  Vec lo = p.vertices()[0], hi = lo;
  for (const auto& v : p.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  // Stratified rejection: one jittered candidate per stratum per sweep.
  const int per_axis = std::max(
      1, static_cast<int>(std::ceil(std::pow(2.0 * n_sites, 1.0 / n))));
  Rng rng(seed);
  DiscreteMeasure out;
  std::vector<int> idx(n, 0);
  int sweeps = 0;
  while (static_cast<int>(out.points.size()) < n_sites) {
    if (++sweeps > 1000)
      throw SolverError("discretize: rejection sampling stalled",
                        static_cast<double>(out.points.size()));
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      Vec q(n);
      for (int k = 0; k < n; ++k) {
        const double u = (idx[k] + rng.uniform01()) / per_axis;
        q[k] = lo[k] + (hi[k] - lo[k]) * u;
      }
      if (p.contains(q, -1e-12) &&
          static_cast<int>(out.points.size()) < n_sites)
        out.points.push_back(std::move(q));
      int k = 0;
      for (; k < n; ++k) {
        if (++idx[k] < per_axis) break;
        idx[k] = 0;
      }
      if (k == n) break;
    }
  }
  out.weights.assign(out.points.size(), 1.0 / n_sites);
  return out;
}

double TransportPlan::marginal_residual() const {
  std::vector<double> row(source.size(), 0.0), col(target.size(), 0.0);
  for (const auto& e : entries) {
    row[e.i] += e.mass;
    col[e.j] += e.mass;
  }
  double r = 0;
  for (std::size_t i = 0; i < row.size(); ++i)
    r = std::max(r, std::abs(row[i] - source.weights[i]));
  for (std::size_t j = 0; j < col.size(); ++j)
    r = std::max(r, std::abs(col[j] - target.weights[j]));
  return r;
}

namespace {

double sq_dist(const Vec& a, const Vec& b) { return (a - b).squaredNorm(); }

TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       double epsilon) {
  const int ns = static_cast<int>(mu.size());
  const int nt = static_cast<int>(nu.size());
  Mat c(ns, nt);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) c(i, j) = sq_dist(mu.points[i], nu.points[j]);
  if (epsilon <= 0) epsilon = 1e-3 * c.maxCoeff();

  Vec f = Vec::Zero(ns), g = Vec::Zero(nt);
  Vec log_a(ns), log_b(nt);
  for (int i = 0; i < ns; ++i) log_a[i] = std::log(mu.weights[i]);
  for (int j = 0; j < nt; ++j) log_b[j] = std::log(nu.weights[j]);

  auto lse_row = [&](int i) {
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < nt; ++j)
      m = std::max(m, log_b[j] + (g[j] - c(i, j)) / epsilon);
    double s = 0;
    for (int j = 0; j < nt; ++j)
      s += std::exp(log_b[j] + (g[j] - c(i, j)) / epsilon - m);
    return m + std::log(s);
  };
  auto lse_col = [&](int j) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < ns; ++i)
      m = std::max(m, log_a[i] + (f[i] - c(i, j)) / epsilon);
    double s = 0;
    for (int i = 0; i < ns; ++i)
      s += std::exp(log_a[i] + (f[i] - c(i, j)) / epsilon - m);
    return m + std::log(s);
  };

  const int max_iters = 20000;
  const double tol = 1e-9;
  int it = 0;
  double residual = std::numeric_limits<double>::infinity();
  for (; it < max_iters; ++it) {
    for (int i = 0; i < ns; ++i) f[i] = -epsilon * lse_row(i);
    for (int j = 0; j < nt; ++j) g[j] = -epsilon * lse_col(j);
    if (it % 10 == 9 || it + 1 == max_iters) {
      residual = 0;
      for (int i = 0; i < ns; ++i) {
        double rowsum = 0;
        for (int j = 0; j < nt; ++j)
          rowsum += mu.weights[i] * nu.weights[j] *
                    std::exp((f[i] + g[j] - c(i, j)) / epsilon);
        residual = std::max(residual, std::abs(rowsum - mu.weights[i]));
      }
      if (residual < tol) break;
    }
  }

  TransportPlan plan;
  plan.source = mu;
  plan.target = nu;
  plan.mode = OtMode::entropic;
  double primal = 0, entropy = 0;
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) {
      const double m = mu.weights[i] * nu.weights[j] *
                       std::exp((f[i] + g[j] - c(i, j)) / epsilon);
      if (m > 1e-15) {
        plan.entries.push_back(PlanEntry{i, j, m});
        primal += m * c(i, j);
        entropy += m * std::log(m / (mu.weights[i] * nu.weights[j]));
      }
    }
  plan.cost = primal;
  double dual = 0;
  for (int i = 0; i < ns; ++i) dual += mu.weights[i] * f[i];
  for (int j = 0; j < nt; ++j) dual += nu.weights[j] * g[j];
  plan.entropic.epsilon = epsilon;
  plan.entropic.iterations = it + 1;
  plan.entropic.marginal_residual = residual;
  plan.entropic.duality_gap = (primal + epsilon * entropy) - dual;
  plan.potentials.phi = std::vector<double>(f.data(), f.data() + ns);
  plan.potentials.psi = std::vector<double>(g.data(), g.data() + nt);
  if (residual >= 1e-6)
    throw SolverError("sinkhorn: marginals did not converge", residual);
  return plan;
}

}  // namespace

TransportPlan solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       OtMode mode, double epsilon) {
  mu.validate();
  nu.validate();
  if (mu.dim() != nu.dim())
    throw PreconditionError("solve_ot: dimension mismatch");
  if (mode == OtMode::entropic) return sinkhorn(mu, nu, epsilon);
  if (static_cast<int>(mu.size()) > kExactSiteBudget ||
      static_cast<int>(nu.size()) > kExactSiteBudget)
    throw PreconditionError("solve_ot: exact budget exceeded, use entropic");

  auto cost = [&](int i, int j) {
    return sq_dist(mu.points[i], nu.points[j]);
  };
  TransportSolveResult res =
      NetworkSimplexEngine::solve(mu.weights, nu.weights, cost);

  TransportPlan plan;
  plan.source = mu;
  plan.target = nu;
  plan.mode = OtMode::exact;
  plan.entries = std::move(res.entries);
  plan.cost = res.cost;
  plan.iterations = res.iterations;
  plan.potentials.phi = std::move(res.potential_source);
  plan.potentials.psi = std::move(res.potential_target);
  return plan;
}

int cyclical_monotonicity_check(const TransportPlan& plan, int samples,
                                uint64_t seed) {
  if (plan.entries.empty()) throw PreconditionError("empty plan");
  Rng rng(seed);
  int violations = 0;
  const std::size_t m = plan.entries.size();
  for (int s = 0; s < samples; ++s) {
    const auto& e1 = plan.entries[rng.below(m)];
    const auto& e2 = plan.entries[rng.below(m)];
    const Vec dx = plan.source.points[e1.i] - plan.source.points[e2.i];
    const Vec dy = plan.target.points[e1.j] - plan.target.points[e2.j];
    if (dx.dot(dy) < -1e-9) ++violations;
  }
  return violations;
}

TransportMap barycentric_map(TransportPlan plan) {
  TransportMap map;
  map.images.assign(plan.source.size(), Vec::Zero(plan.source.dim()));
  std::vector<double> mass(plan.source.size(), 0.0);
  for (const auto& e : plan.entries) {
    map.images[e.i] += e.mass * plan.target.points[e.j];
    mass[e.i] += e.mass;
  }
  for (std::size_t i = 0; i < map.images.size(); ++i) {
    if (mass[i] > 0) map.images[i] /= mass[i];
    else map.images[i] = plan.source.points[i];
  }
  map.plan = std::move(plan);
  return map;
}

Vec map_at(const TransportMap& map, const Vec& x, double* nearest_dist) {
  const auto& sites = map.plan.source.points;
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double d = (sites[i] - x).squaredNorm();
    if (d < bd) { bd = d; best = i; }
  }
  if (nearest_dist) *nearest_dist = std::sqrt(bd);
  // Shift by the site displacement so the extension is exact for
  // translations and continuous across sites.
  return x + (map.images[best] - sites[best]);
}

void export_plan_csv(const TransportPlan& plan, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "i,j,mass,cost_ij\n";
  for (const auto& e : plan.entries) {
    const double c =
        (plan.source.points[e.i] - plan.target.points[e.j]).squaredNorm();
    f << e.i << ',' << e.j << ',' << fmt_double(e.mass) << ','
      << fmt_double(c) << '\n';
  }
}

void export_map_csv(const TransportMap& map, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  const int n = map.plan.source.dim();
  for (int k = 0; k < n; ++k) f << (k ? "," : "") << "x" << k;
  for (int k = 0; k < n; ++k) f << ",image" << k;
  for (int k = 0; k < n; ++k) f << ",eig" << k;
  f << '\n';
  for (std::size_t i = 0; i < map.images.size(); ++i) {
    for (int k = 0; k < n; ++k)
      f << (k ? "," : "") << fmt_double(map.plan.source.points[i][k]);
    for (int k = 0; k < n; ++k) f << ',' << fmt_double(map.images[i][k]);
    if (i < map.jacobian_eigs.size() && map.jacobian_valid[i])
      for (int k = 0; k < n; ++k)
        f << ',' << fmt_double(map.jacobian_eigs[i][k]);
    f << '\n';
  }
}

}  // namespace bmstab
