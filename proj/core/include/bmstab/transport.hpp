#pragma once

#include <string>
#include <vector>

#include "bmstab/network_simplex.hpp"
#include "bmstab/polytope.hpp"

namespace bmstab {

struct DiscreteMeasure {
  std::vector<Vec> points;
  std::vector<double> weights;

  int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
  std::size_t size() const { return points.size(); }
  void validate() const;  // normalization within 1e-12, distinct sites
};

// N quasi-uniform sites in P with equal weights 1/N, by stratified
// rejection from the bounding box.
DiscreteMeasure discretize_uniform(const Polytope& p, int n_sites,
                                   uint64_t seed);

enum class OtMode { exact, entropic };

struct EntropicReport {
  double epsilon = 0.0;
  int iterations = 0;
  double marginal_residual = 0.0;
  double duality_gap = 0.0;
};

struct PotentialField {
  std::vector<double> phi;  // source duals
  std::vector<double> psi;  // target duals
};

struct TransportPlan {
  DiscreteMeasure source, target;
  std::vector<PlanEntry> entries;
  double cost = 0.0;
  OtMode mode = OtMode::exact;
  PotentialField potentials;
  EntropicReport entropic;
  long iterations = 0;

  // max L-inf violation over row and column sums.
  double marginal_residual() const;
};

inline constexpr int kExactSiteBudget = 5000;

// Optimal coupling for squared Euclidean cost. Exact mode runs the network
// simplex (site budget kExactSiteBudget per side); entropic mode runs
// log-domain Sinkhorn with the given epsilon (default 1e-3 * diameter^2).
TransportPlan solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       OtMode mode = OtMode::exact, double epsilon = 0.0);

// Counts sampled support pairs with <x1-x2, y1-y2> < -1e-9.
int cyclical_monotonicity_check(const TransportPlan& plan, int samples,
                                uint64_t seed);

struct TransportMap {
  TransportPlan plan;
  std::vector<Vec> images;  // barycentric image per source site

  // Filled by compute_jacobians.
  std::vector<Mat> jacobians;
  std::vector<Vec> jacobian_eigs;
  std::vector<double> jacobian_residuals;
  std::vector<char> jacobian_valid;

  const std::vector<Vec>& sites() const { return plan.source.points; }
};

TransportMap barycentric_map(TransportPlan plan);

// Nearest-site extension of the barycentric map; optionally reports the
// distance to the site used.
Vec map_at(const TransportMap& map, const Vec& x,
           double* nearest_dist = nullptr);

void export_plan_csv(const TransportPlan& plan, const std::string& path);
void export_map_csv(const TransportMap& map, const std::string& path);

}  // namespace bmstab
