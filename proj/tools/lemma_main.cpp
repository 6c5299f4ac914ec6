#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmstab/lemmas.hpp"
#include "bmstab/random_scaling.hpp"
#include "bmstab/rng.hpp"

using namespace bmstab;
using ojson = nlohmann::ordered_json;

namespace {

int emit(const ojson& j, long violations) {
  std::cout << j.dump(2) << "\n";
  return violations == 0 ? 0 : 1;
}

int run_lambdabound(int n, long samples, uint64_t seed, double alpha) {
  LambdaScanReport rep = scan_lambdabound(n, samples, seed, alpha);
  ojson j;
  j["lemma"] = "lambdabound";
  j["params"] = {{"n_max", n},
                 {"alpha_override", alpha},
                 {"alpha_n_at_n_max", LambdaBoundConstants::make(n).alpha_n},
                 {"seed", seed}};
  j["samples"] = rep.samples;
  j["violations"] = rep.violations;
  j["worst_slack"] = rep.violations ? rep.worst_slack : rep.min_slack;
  return emit(j, rep.violations);
}

int run_ray(int instances, double ell, uint64_t seed) {
  long samples = 0, violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int inst = 0; inst < instances; ++inst) {
    const int n = (inst % 2) ? 3 : 2;
    Polytope x_body, y_body;
    bool built = false;
    for (int attempt = 0; attempt < 60 && !built; ++attempt) {
      std::vector<Vec> cx, cy;
      const int pts = n == 2 ? 16 : 34;
      for (int i = 0; i < pts; ++i) {
        cx.push_back(rng.unit_vector(n) * rng.uniform(0.75 * ell, 0.95 * ell));
        cy.push_back(rng.unit_vector(n) * rng.uniform(0.75 * ell, 0.95 * ell));
      }
      Polytope px = Polytope::hull_of_points(n, cx);
      Polytope py = Polytope::hull_of_points(n, cy);
      if (!px.is_degenerate() && !py.is_degenerate() &&
          ball_sandwich_check(px, ell) && ball_sandwich_check(py, ell)) {
        x_body = px;
        y_body = py;
        built = true;
      }
    }
    if (!built) continue;
    BoundaryMesh mesh = boundary_quadrature(x_body, 6);
    for (int s = 0; s < 50; ++s) {
      const auto& f = mesh.facets[rng.below(mesh.facets.size())];
      Vec p = Vec::Zero(n);
      double tot = 0;
      for (std::size_t k = 0; k < f.verts.size(); ++k) {
        const double wgt = -std::log(std::max(1e-300, rng.uniform01()));
        p += wgt * f.verts[k];
        tot += wgt;
      }
      p /= tot;
      RayCheck chk = check_pointwise_ray(p, x_body, y_body, ell);
      ++samples;
      if (!chk.pass) ++violations;
      if (!chk.vacuous) worst = std::min(worst, 1.0 - chk.ratio);
    }
  }
  ojson j;
  j["lemma"] = "ray";
  j["params"] = {{"instances", instances}, {"ell", ell}, {"seed", seed}};
  j["samples"] = samples;
  j["violations"] = violations;
  j["worst_slack"] = worst;
  return emit(j, violations);
}

int run_prob(double ell, int trials, int points, uint64_t seed) {
  Polytope c_a = Polytope::regular_polygon(24, 1.0);
  Polytope c_b = c_a.scaled(0.9);
  MapProvider radial = radial_projection_provider(c_b);
  ProbLemParams params = ProbLemParams::compute(2, ell);

  BoundaryMesh mesh = boundary_quadrature(c_a, 4);
  Rng rng(seed);
  long violations = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int pt = 0; pt < points; ++pt) {
    const auto& f = mesh.facets[rng.below(mesh.facets.size())];
    const Vec x = 0.5 * (f.verts[0] + f.verts[1]);
    ProbBoundEstimate est = mc_probabilistic_bound(
        c_a, c_b, ell, x, trials, seed * 1000 + pt, radial);
    if (est.estimate < 0) ++violations;
    if (est.distance > 0)
      min_ratio = std::min(min_ratio, est.estimate / est.distance);
  }
  ojson j;
  j["lemma"] = "prob";
  j["params"] = {{"ell", ell},
                 {"theta", params.theta},
                 {"trials", trials},
                 {"points", points},
                 {"seed", seed}};
  j["samples"] = static_cast<long>(trials) * points;
  j["violations"] = violations;
  j["worst_slack"] = min_ratio;
  return emit(j, violations + (min_ratio > 0 ? 0 : 1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numeric verifiers for the stability lemmas"};
  app.require_subcommand(1);

  auto* lb = app.add_subcommand("lambdabound", "eigenvalue inequality scan");
  int n = 6;
  long samples = 1000000;
  uint64_t seed = 7;
  double alpha = -1.0;
  lb->add_option("--n", n, "max dimension");
  lb->add_option("--samples", samples, "random tuples");
  lb->add_option("--seed", seed, "seed");
  lb->add_option("--alpha", alpha, "override the constant (negative control)");

  auto* ray = app.add_subcommand("ray", "pointwise ray claim sampler");
  int instances = 100;
  double ell = 2.0;
  uint64_t rseed = 11;
  ray->add_option("--instances", instances, "random body pairs");
  ray->add_option("--ell", ell, "ball sandwich parameter");
  ray->add_option("--seed", rseed, "seed");

  auto* prob = app.add_subcommand("prob", "random-scaling expectation bound");
  double pell = 3.0;
  int trials = 100000, points = 50;
  uint64_t pseed = 5;
  prob->add_option("--ell", pell, "ball sandwich parameter");
  prob->add_option("--trials", trials, "Monte Carlo trials per point");
  prob->add_option("--points", points, "boundary points");
  prob->add_option("--seed", pseed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (lb->parsed()) return run_lambdabound(n, samples, seed, alpha);
    if (ray->parsed()) return run_ray(instances, ell, rseed);
    if (prob->parsed()) return run_prob(pell, trials, points, pseed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
