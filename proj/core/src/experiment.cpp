#include "bmstab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "bmstab/io_util.hpp"
#include "bmstab/rng.hpp"

namespace bmstab {

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("diagnostics")) cfg.diagnostics = j["diagnostics"].get<bool>();
  if (j.contains("allow_dim4")) cfg.allow_dim4 = j["allow_dim4"].get<bool>();
  if (j.contains("transport_sites"))
    cfg.transport_sites = j["transport_sites"].get<int>();
  if (j.contains("diag_eps")) cfg.diag_eps = j["diag_eps"].get<double>();
  if (j.contains("diag_ell")) cfg.diag_ell = j["diag_ell"].get<double>();
  for (const auto& row : j.at("scenarios")) {
    ScenarioSpec s;
    s.family = family_from_string(row.at("family").get<std::string>());
    s.dim = row.at("dim").get<int>();
    s.t = row.at("t").get<double>();
    s.perturbation = row.at("perturbation").get<double>();
    s.h = row.at("h").get<double>();
    s.seed = row.value("seed", 0ull);
    s.validate();
    cfg.scenarios.push_back(s);
  }
  return cfg;
}

namespace {

ExperimentRow run_row(const ScenarioSpec& spec, const ExperimentConfig& cfg,
                      uint64_t global_seed) {
  ExperimentRow row;
  row.spec = spec;
  row.key = spec.key();
  const auto start = std::chrono::steady_clock::now();
  try {
    if (spec.dim >= 4 && !cfg.allow_dim4)
      throw PreconditionError("dim-4 scenarios need the allow_dim4 budget flag");
    ScenarioSpec seeded = spec;
    seeded.seed = spec.seed ^ (global_seed * 0x9e3779b97f4a7c15ull);
    ScenarioData data = generate_scenario(seeded);
    row.volume = data.a.volume();
    row.design_delta = data.design_delta;

    Measured d = bm_deficit(data.a, data.b, spec.t);
    row.delta = d.value;
    row.delta_err = d.error;
    Measured ga = hull_gap(data.a);
    Measured gb = hull_gap(data.b);
    row.gamma = ga.value + gb.value;
    row.gamma_err = ga.error + gb.error;

    SymDiffResult sd = sym_diff_min_translation(data.a, data.b);
    row.symdiff_rel = sd.value / row.volume;
    row.symdiff_err = sd.error / row.volume;
    row.translation = sd.translation;

    const double dg = row.delta + row.gamma;
    if (dg > std::max(row.delta_err + row.gamma_err, 1e-15)) {
      row.ratio = row.symdiff_rel / std::sqrt(dg / spec.t);
    } else {
      row.ratio_vacuous = true;
      row.ratio = 0.0;
    }

    if (cfg.diagnostics) {
      try {
        Polytope c_a = convex_hull(data.a);
        Polytope c_b = convex_hull(data.b);
        // Center at the hull centroid and equalize hull volumes so that
        // |C_A| = |C_B| = (1+gamma)|A| up to the grid.
        const Vec center = c_a.centroid();
        VoxelSet a2 = data.a.translated(-center);
        VoxelSet b2 = data.b.translated(-center);
        c_a = c_a.translated(-center);
        c_b = c_b.translated(-center);
        const double scale =
            std::pow(c_a.volume() / c_b.volume(), 1.0 / spec.dim);
        c_b = c_b.affine_image(Mat::Identity(spec.dim, spec.dim) * scale,
                               Vec::Zero(spec.dim));
        row.diag = mainprop_diagnostics(a2, b2, c_a, c_b, spec.t,
                                        cfg.diag_eps, cfg.diag_ell,
                                        cfg.transport_sites,
                                        seeded.seed ^ 0xabcdu);
        row.has_diagnostics = true;
      } catch (const std::exception& e) {
        row.has_diagnostics = false;
        row.diag_note = e.what();
      }
    }
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return row;
}

}  // namespace

ExperimentReport run_stability_experiment(const ExperimentConfig& config,
                                          uint64_t seed, int threads) {
  ExperimentReport report;
  report.seed = seed;
  report.rows.resize(config.scenarios.size());
  threads = std::max(1, threads);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config.scenarios.size()) break;
      report.rows[i] = run_row(config.scenarios[i], config, seed);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const ExperimentRow& a, const ExperimentRow& b) {
              return a.key < b.key;
            });
  return report;
}

double row_field(const ExperimentRow& row, const std::string& field) {
  if (field == "delta") return row.delta;
  if (field == "design_delta") return row.design_delta;
  if (field == "gamma") return row.gamma;
  if (field == "delta_plus_gamma") return row.delta + row.gamma;
  if (field == "symdiff_rel") return row.symdiff_rel;
  if (field == "ratio") return row.ratio;
  throw PreconditionError("unknown report field: " + field);
}

FitResult fit_scaling_exponent(const ExperimentReport& report,
                               const std::string& x_field,
                               const std::string& y_field, uint64_t seed) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : report.rows) {
    if (!row.ok) continue;
    const double x = row_field(row, x_field);
    const double y = row_field(row, y_field);
    if (!(x > 0) || !(y > 0)) continue;
    // Discretization noise gate on the measured deficit.
    if (x_field == "delta" && row.delta_err > 0.2 * row.delta) continue;
    pts.emplace_back(std::log(x), std::log(y));
  }
  if (pts.size() < 5)
    throw PreconditionError("fit_scaling_exponent: fewer than 5 usable rows");

  auto fit = [](const std::vector<std::pair<double, double>>& p, double& a,
                double& b) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(p.size());
    for (auto [x, y] : p) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    a = (m * sxy - sx * sy) / denom;
    b = (sy - a * sx) / m;
  };

  FitResult out;
  out.rows_used = static_cast<int>(pts.size());
  fit(pts, out.slope, out.intercept);

  Rng rng(seed);
  std::vector<double> slopes;
  std::vector<std::pair<double, double>> sample(pts.size());
  for (int b = 0; b < 200; ++b) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      sample[i] = pts[rng.below(pts.size())];
    double s, ic;
    fit(sample, s, ic);
    if (std::isfinite(s)) slopes.push_back(s);
  }
  std::sort(slopes.begin(), slopes.end());
  out.ci_lo = slopes[static_cast<std::size_t>(0.025 * slopes.size())];
  out.ci_hi = slopes[std::min(slopes.size() - 1,
                              static_cast<std::size_t>(0.975 * slopes.size()))];
  return out;
}

bool ExperimentReport::any_errors() const {
  for (const auto& row : rows)
    if (!row.ok) return true;
  return false;
}

std::string ExperimentReport::to_csv() const {
  std::string out =
      "key,family,dim,t,perturbation,h,seed,ok,volume,delta,delta_err,gamma,"
      "gamma_err,design_delta,symdiff_rel,symdiff_err,translation,ratio,"
      "ratio_vacuous,diag_norm_opnorm_integral,diag_norm_boundary_integral,"
      "diag_norm_center_displacement,error\n";
  for (const auto& r : rows) {
    std::vector<std::string> f;
    f.push_back(r.key);
    f.push_back(to_string(r.spec.family));
    f.push_back(std::to_string(r.spec.dim));
    f.push_back(fmt_double(r.spec.t));
    f.push_back(fmt_double(r.spec.perturbation));
    f.push_back(fmt_double(r.spec.h));
    f.push_back(std::to_string(r.spec.seed));
    f.push_back(r.ok ? "1" : "0");
    f.push_back(fmt_double(r.volume));
    f.push_back(fmt_double(r.delta));
    f.push_back(fmt_double(r.delta_err));
    f.push_back(fmt_double(r.gamma));
    f.push_back(fmt_double(r.gamma_err));
    f.push_back(fmt_double(r.design_delta));
    f.push_back(fmt_double(r.symdiff_rel));
    f.push_back(fmt_double(r.symdiff_err));
    std::string tr;
    for (int k = 0; k < r.translation.size(); ++k)
      tr += (k ? ";" : "") + fmt_double(r.translation[k]);
    f.push_back(tr);
    f.push_back(fmt_double(r.ratio));
    f.push_back(r.ratio_vacuous ? "1" : "0");
    f.push_back(r.has_diagnostics ? fmt_double(r.diag.norm_opnorm_integral) : "");
    f.push_back(r.has_diagnostics ? fmt_double(r.diag.norm_boundary_integral) : "");
    f.push_back(r.has_diagnostics ? fmt_double(r.diag.norm_center_displacement)
                                  : "");
    f.push_back(r.error);
    out += join_csv(f) + "\n";
  }
  return out;
}

std::string ExperimentReport::to_json() const {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["seed"] = seed;
  j["rows"] = ojson::array();
  for (const auto& r : rows) {
    ojson row;
    row["key"] = r.key;
    row["family"] = to_string(r.spec.family);
    row["dim"] = r.spec.dim;
    row["t"] = r.spec.t;
    row["perturbation"] = r.spec.perturbation;
    row["h"] = r.spec.h;
    row["ok"] = r.ok;
    if (!r.ok) {
      row["error"] = r.error;
      j["rows"].push_back(std::move(row));
      continue;
    }
    row["volume"] = r.volume;
    row["delta"] = r.delta;
    row["delta_err"] = r.delta_err;
    row["gamma"] = r.gamma;
    row["gamma_err"] = r.gamma_err;
    row["design_delta"] = r.design_delta;
    row["symdiff_rel"] = r.symdiff_rel;
    row["symdiff_err"] = r.symdiff_err;
    row["ratio"] = r.ratio;
    row["ratio_vacuous"] = r.ratio_vacuous;
    if (r.has_diagnostics) {
      ojson d;
      d["delta"] = r.diag.delta;
      d["gamma"] = r.diag.gamma;
      d["eigen_deficit_integral"] = r.diag.eigen_deficit_integral;
      d["opnorm_integral"] = r.diag.opnorm_integral;
      d["opnorm_sup_inner"] = r.diag.opnorm_sup_inner;
      d["center_displacement"] = r.diag.center_displacement;
      d["boundary_integral_max"] = r.diag.boundary_integral_max;
      d["norm_eigen_integral"] = r.diag.norm_eigen_integral;
      d["norm_opnorm_integral"] = r.diag.norm_opnorm_integral;
      d["norm_opnorm_sup"] = r.diag.norm_opnorm_sup;
      d["norm_center_displacement"] = r.diag.norm_center_displacement;
      d["norm_boundary_integral"] = r.diag.norm_boundary_integral;
      d["e_fraction"] = r.diag.e_fraction;
      row["diagnostics"] = std::move(d);
    } else if (!r.diag_note.empty()) {
      row["diagnostics_skipped"] = r.diag_note;
    }
    j["rows"].push_back(std::move(row));
  }
  ojson fj = ojson::array();
  for (const auto& [name, fit] : fits) {
    ojson f;
    f["name"] = name;
    f["slope"] = fit.slope;
    f["intercept"] = fit.intercept;
    f["ci_lo"] = fit.ci_lo;
    f["ci_hi"] = fit.ci_hi;
    f["rows_used"] = fit.rows_used;
    fj.push_back(std::move(f));
  }
  j["fits"] = std::move(fj);
  return j.dump(2);
}

void emit_plot_data(const ExperimentReport& report, const std::string& dir) {
  if (report.rows.empty())
    throw PreconditionError("emit_plot_data: empty report");
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  struct PlotSpec {
    std::string file, x, y, law;
  };
  const std::vector<PlotSpec> plots = {
      {"symdiff_vs_delta.csv", "delta", "symdiff_rel",
       "convex stability: symmetric difference scales like sqrt(delta/t)"},
      {"symdiff_vs_delta_plus_gamma.csv", "delta_plus_gamma", "symdiff_rel",
       "nonconvex stability: symmetric difference scales like "
       "sqrt((delta+gamma)/t)"},
      {"ratio_vs_delta.csv", "delta", "ratio",
       "bounded stability ratio across the deficit range"},
  };
  using ojson = nlohmann::ordered_json;
  ojson manifest;
  manifest["plots"] = ojson::array();
  for (const auto& p : plots) {
    std::string csv = "x,y,series\n";
    for (const auto& row : report.rows) {
      if (!row.ok) continue;
      const double x = row_field(row, p.x);
      const double y = row_field(row, p.y);
      if (!(x > 0) || !(y > 0)) continue;
      csv += fmt_double(x) + "," + fmt_double(y) + "," +
             to_string(row.spec.family) + "\n";
    }
    write_text_file(dir + "/" + p.file, csv);
    ojson m;
    m["file"] = p.file;
    m["x_axis"] = p.x;
    m["y_axis"] = p.y;
    m["tests"] = p.law;
    manifest["plots"].push_back(std::move(m));
  }
  write_text_file(dir + "/manifest.json", manifest.dump(2));
}

}  // namespace bmstab
