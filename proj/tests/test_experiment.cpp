#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bmstab/experiment.hpp"
#include "bmstab/io_util.hpp"
#include "bmstab/set_arith.hpp"

using namespace bmstab;

namespace {

ScenarioSpec spec_of(ScenarioFamily fam, int dim, double t, double p,
                     double h, uint64_t seed) {
  ScenarioSpec s;
  s.family = fam;
  s.dim = dim;
  s.t = t;
  s.perturbation = p;
  s.h = h;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("scenario generation balances volumes exactly") {
  for (auto fam : {ScenarioFamily::ellipsoid_pair, ScenarioFamily::sheared_polytope,
                   ScenarioFamily::dented_convex, ScenarioFamily::conelike_pair}) {
    const int dim = 2;
    ScenarioData d = generate_scenario(spec_of(fam, dim, 0.5, 0.1, 0.02, 3));
    CHECK(d.a.cell_count() == d.b.cell_count());
    CHECK(d.a.volume() == doctest::Approx(d.b.volume()).epsilon(1e-12));
  }
  ScenarioData iv = generate_scenario(
      spec_of(ScenarioFamily::interval_union_1d, 1, 0.5, 0.25, 1e-3, 1));
  CHECK(iv.a.volume() == doctest::Approx(iv.b.volume()).epsilon(1e-12));
}

TEST_CASE("unperturbed ellipsoid pair has near-zero deficit") {
  ScenarioData d = generate_scenario(
      spec_of(ScenarioFamily::ellipsoid_pair, 2, 0.5, 0.0, 0.01, 5));
  Measured def = bm_deficit(d.a, d.b, 0.5);
  CHECK(def.value >= -1e-12);
  CHECK(def.value <= 10 * 0.01);  // staircase noise only
  CHECK(d.design_delta == 0.0);
}

TEST_CASE("interval union deficit matches its closed form") {
  const double g = 0.128;
  ScenarioSpec s = spec_of(ScenarioFamily::interval_union_1d, 1, 0.5, g, 1e-3, 2);
  ScenarioData d = generate_scenario(s);
  Measured def = bm_deficit(d.a, d.b, s.t);
  CHECK(def.value == doctest::Approx(d.design_delta).epsilon(1e-2));
}

TEST_CASE("dented scenario produces the designed hull gap") {
  const double rho = 0.07;
  ScenarioData d = generate_scenario(
      spec_of(ScenarioFamily::dented_convex, 2, 0.5, rho, 0.008, 4));
  Measured gap = hull_gap(d.a);
  // gamma = |co(A)\A| / |A| with |A| = (1-rho)|base|.
  CHECK(gap.value == doctest::Approx(rho / (1 - rho)).epsilon(0.12));
}

TEST_CASE("experiment runner produces ordered deterministic reports") {
  ExperimentConfig cfg;
  for (uint64_t s = 0; s < 3; ++s) {
    cfg.scenarios.push_back(
        spec_of(ScenarioFamily::ellipsoid_pair, 2, 0.5, 0.05 + 0.05 * s, 0.02, s));
    cfg.scenarios.push_back(
        spec_of(ScenarioFamily::interval_union_1d, 1, 0.25, 0.1 + 0.1 * s, 1e-3, s));
  }
  ExperimentReport r1 = run_stability_experiment(cfg, 99, 1);
  ExperimentReport r2 = run_stability_experiment(cfg, 99, 2);
  CHECK(!r1.any_errors());
  CHECK(r1.to_csv() == r2.to_csv());
  CHECK(r1.to_json() == r2.to_json());
  for (std::size_t i = 1; i < r1.rows.size(); ++i)
    CHECK(r1.rows[i - 1].key <= r1.rows[i].key);
  // A different seed changes sampled content but stays valid.
  ExperimentReport r3 = run_stability_experiment(cfg, 100, 1);
  CHECK(!r3.any_errors());
}

TEST_CASE("failed rows are flagged and the run continues") {
  ExperimentConfig cfg;
  cfg.scenarios.push_back(
      spec_of(ScenarioFamily::ellipsoid_pair, 2, 0.5, 0.02, 0.02, 1));
  // Dent fraction >= 0.5 cannot balance.
  cfg.scenarios.push_back(
      spec_of(ScenarioFamily::dented_convex, 2, 0.5, 0.7, 0.02, 1));
  ExperimentReport r = run_stability_experiment(cfg, 7, 1);
  CHECK(r.any_errors());
  int ok = 0, bad = 0;
  for (const auto& row : r.rows) (row.ok ? ok : bad)++;
  CHECK(ok == 1);
  CHECK(bad == 1);
}

TEST_CASE("fit recovers an exact square root law") {
  ExperimentReport r;
  for (int i = 0; i < 12; ++i) {
    ExperimentRow row;
    row.ok = true;
    row.delta = std::pow(10.0, -4.0 + 0.25 * i);
    row.delta_err = 0.0;
    row.symdiff_rel = std::sqrt(row.delta);
    row.key = "row" + std::to_string(i);
    r.rows.push_back(row);
  }
  FitResult fit = fit_scaling_exponent(r, "delta", "symdiff_rel");
  CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.ci_lo == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fit.ci_hi == doctest::Approx(0.5).epsilon(1e-9));

  // Constant y: slope 0.
  for (auto& row : r.rows) row.symdiff_rel = 2.0;
  FitResult flat = fit_scaling_exponent(r, "delta", "symdiff_rel");
  CHECK(flat.slope == doctest::Approx(0.0).epsilon(1e-12));

  // Too few rows is an error.
  ExperimentReport tiny;
  tiny.rows.assign(r.rows.begin(), r.rows.begin() + 3);
  CHECK_THROWS_AS(fit_scaling_exponent(tiny, "delta", "symdiff_rel"),
                  PreconditionError);
}

TEST_CASE("rows with dominant grid error are excluded from delta fits") {
  ExperimentReport r;
  for (int i = 0; i < 10; ++i) {
    ExperimentRow row;
    row.ok = true;
    row.delta = std::pow(10.0, -3.0 + 0.3 * i);
    row.delta_err = (i < 2) ? row.delta : 0.0;  // first two rows too noisy
    row.symdiff_rel = std::sqrt(row.delta);
    row.key = "row" + std::to_string(i);
    r.rows.push_back(row);
  }
  FitResult fit = fit_scaling_exponent(r, "delta", "symdiff_rel");
  CHECK(fit.rows_used == 8);
}

TEST_CASE("plot emission writes every file the manifest names") {
  ExperimentConfig cfg;
  for (uint64_t s = 0; s < 3; ++s)
    cfg.scenarios.push_back(
        spec_of(ScenarioFamily::ellipsoid_pair, 2, 0.5, 0.08 + 0.04 * s, 0.02, s));
  ExperimentReport r = run_stability_experiment(cfg, 5, 1);
  const std::string dir = "plot_test_out";
  emit_plot_data(r, dir);
  const std::string manifest = read_text_file(dir + "/manifest.json");
  CHECK(manifest.find("symdiff_vs_delta.csv") != std::string::npos);
  for (const auto& name :
       {"symdiff_vs_delta.csv", "symdiff_vs_delta_plus_gamma.csv",
        "ratio_vs_delta.csv"}) {
    CHECK(std::filesystem::exists(dir + "/" + std::string(name)));
  }
  std::filesystem::remove_all(dir);

  ExperimentReport empty;
  CHECK_THROWS_AS(emit_plot_data(empty, dir), PreconditionError);
}

TEST_CASE("convex-pair batch keeps the stability ratio bounded") {
  ExperimentConfig cfg;
  for (int i = 0; i < 6; ++i) {
    ScenarioSpec s = spec_of(ScenarioFamily::ellipsoid_pair, 2, 0.5,
                             0.04 + 0.05 * i, 0.01, 50 + i);
    cfg.scenarios.push_back(s);
  }
  ExperimentReport r = run_stability_experiment(cfg, 11, 1);
  CHECK(!r.any_errors());
  for (const auto& row : r.rows) {
    if (row.ratio_vacuous) continue;
    CHECK(std::isfinite(row.ratio));
    CHECK(row.ratio > 0);
    CHECK(row.ratio < 50.0);
  }
}

TEST_CASE("config json round trip") {
  const std::string text = R"({
    "diagnostics": false,
    "transport_sites": 300,
    "scenarios": [
      {"family": "ellipsoid-pair", "dim": 2, "t": 0.5,
       "perturbation": 0.1, "h": 0.02, "seed": 3},
      {"family": "interval-union-1d", "dim": 1, "t": 0.25,
       "perturbation": 0.2, "h": 0.001}
    ]
  })";
  ExperimentConfig cfg = ExperimentConfig::from_json(text);
  CHECK(cfg.scenarios.size() == 2);
  CHECK(cfg.transport_sites == 300);
  CHECK(cfg.scenarios[0].family == ScenarioFamily::ellipsoid_pair);
  CHECK(cfg.scenarios[1].t == 0.25);
}
