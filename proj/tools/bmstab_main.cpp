#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "bmstab/experiment.hpp"
#include "bmstab/io_util.hpp"

using namespace bmstab;

namespace {

int run_experiment(const std::string& config_path, const std::string& out_dir,
                   uint64_t seed, int threads) {
  ExperimentConfig cfg = ExperimentConfig::from_json(read_text_file(config_path));
  ExperimentReport report = run_stability_experiment(cfg, seed, threads);

  // Standard fits; individual fits may be unavailable on small runs.
  for (const auto& [x, y] :
       {std::pair<std::string, std::string>{"delta", "symdiff_rel"},
        {"design_delta", "symdiff_rel"},
        {"delta_plus_gamma", "symdiff_rel"}}) {
    try {
      report.fits.emplace_back(x + "->" + y,
                               fit_scaling_exponent(report, x, y, seed));
    } catch (const PreconditionError&) {
    }
  }

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  write_text_file(out_dir + "/report.csv", report.to_csv());
  write_text_file(out_dir + "/report.json", report.to_json());
  emit_plot_data(report, out_dir + "/plots");

  // Wall times live outside the deterministic report files.
  std::string timings = "key,wall_seconds\n";
  for (const auto& row : report.rows)
    timings += row.key + "," + fmt_double(row.wall_seconds) + "\n";
  write_text_file(out_dir + "/timings.csv", timings);

  int failures = 0;
  for (const auto& row : report.rows) {
    if (!row.ok) {
      ++failures;
      std::cerr << "row failed: " << row.key << ": " << row.error << "\n";
    }
  }
  std::cout << "rows: " << report.rows.size() << ", failed: " << failures
            << ", output: " << out_dir << "\n";
  return failures == 0 ? 0 : 1;
}

int generate_voxels(const std::string& family, int dim, double t, double p,
                    double h, uint64_t seed, const std::string& out_a,
                    const std::string& out_b) {
  ScenarioSpec spec;
  spec.family = family_from_string(family);
  spec.dim = dim;
  spec.t = t;
  spec.perturbation = p;
  spec.h = h;
  spec.seed = seed;
  ScenarioData data = generate_scenario(spec);
  data.a.save(out_a);
  data.b.save(out_b);
  std::cout << "wrote " << out_a << " (" << data.a.cell_count() << " cells), "
            << out_b << " (" << data.b.cell_count() << " cells)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brunn-Minkowski stability laboratory"};
  app.require_subcommand(1);

  auto* experiment = app.add_subcommand("experiment", "stability experiments");
  experiment->require_subcommand(1);
  auto* run = experiment->add_subcommand("run", "run a config of scenarios");
  std::string config_path, out_dir = "out";
  uint64_t seed = 1;
  int threads = 1;
  run->add_option("--config", config_path, "JSON config")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "global seed");
  run->add_option("--threads", threads, "worker threads");

  auto* scenario = app.add_subcommand("scenario", "scenario utilities");
  auto* gen = scenario->add_subcommand("gen", "write a voxel pair to disk");
  std::string family = "ellipsoid-pair", out_a = "a.voxels", out_b = "b.voxels";
  int dim = 2;
  double t = 0.5, p = 0.1, h = 0.01;
  uint64_t gseed = 1;
  gen->add_option("--family", family, "scenario family");
  gen->add_option("--dim", dim, "dimension");
  gen->add_option("--t", t, "interpolation weight");
  gen->add_option("--perturbation", p, "perturbation level");
  gen->add_option("--spacing", h, "grid spacing");
  gen->add_option("--seed", gseed, "seed");
  gen->add_option("--out-a", out_a, "output path for A");
  gen->add_option("--out-b", out_b, "output path for B");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_experiment(config_path, out_dir, seed, threads);
    if (gen->parsed())
      return generate_voxels(family, dim, t, p, h, gseed, out_a, out_b);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
