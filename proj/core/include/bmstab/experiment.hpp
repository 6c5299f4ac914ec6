#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bmstab/diagnostics.hpp"
#include "bmstab/scenario.hpp"

namespace bmstab {

struct ExperimentRow {
  std::string key;
  ScenarioSpec spec;
  bool ok = false;
  std::string error;

  double delta = 0, delta_err = 0;
  double gamma = 0, gamma_err = 0;
  double design_delta = 0;
  double symdiff_rel = 0;  // min_x |(A+x) xor B| / |A|
  double symdiff_err = 0;
  Vec translation;
  double ratio = 0;  // symdiff_rel / sqrt((delta+gamma)/t)
  bool ratio_vacuous = false;
  double volume = 0;

  bool has_diagnostics = false;
  std::string diag_note;  // reason when diagnostics were requested but skipped
  MainPropDiagnostics diag;
  double wall_seconds = 0;
};

struct ExperimentConfig {
  std::vector<ScenarioSpec> scenarios;
  bool diagnostics = false;
  int transport_sites = 600;
  double diag_eps = 0.4;
  double diag_ell = 6.0;
  // n = 4 runs are expensive; they must be opted into explicitly.
  bool allow_dim4 = false;

  static ExperimentConfig from_json(const std::string& text);
};

struct FitResult {
  double slope = 0, intercept = 0;
  double ci_lo = 0, ci_hi = 0;  // bootstrap 95% interval for the slope
  int rows_used = 0;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;  // sorted by key
  uint64_t seed = 0;
  std::vector<std::pair<std::string, FitResult>> fits;

  std::string to_csv() const;
  std::string to_json() const;
  bool any_errors() const;
};

ExperimentReport run_stability_experiment(const ExperimentConfig& config,
                                          uint64_t seed, int threads = 1);

// Log-log least squares of y against x over rows with positive fields;
// 200 seeded bootstrap resamples give the 95% CI. Rows where the grid
// error exceeds 20% of the measured deficit are excluded when fitting
// against "delta". Known fields: delta, design_delta, gamma,
// delta_plus_gamma, symdiff_rel, ratio.
FitResult fit_scaling_exponent(const ExperimentReport& report,
                               const std::string& x_field,
                               const std::string& y_field,
                               uint64_t seed = 1234);

double row_field(const ExperimentRow& row, const std::string& field);

// Writes per-plot CSV files (x, y, series) plus manifest.json naming the
// axes and the scaling law each plot exercises.
void emit_plot_data(const ExperimentReport& report, const std::string& dir);

}  // namespace bmstab
