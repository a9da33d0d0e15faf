// Command-line front end: simulate datasets, run single-frame (static) and
// temporal-filter analyses, and produce comparison diagnostics. All outputs
// are plot-ready CSV files; every command is deterministic given --seed.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "eitpn/runner.hpp"

using namespace eitpn;

namespace {

std::string lambda_tag(double lambda) {
  std::ostringstream out;
  out << "lambda" << lambda;
  std::string s = out.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

struct CliOptions {
  RunConfig config;
  std::vector<double> lambdas = {100.0};
  std::string data_path;
  std::string out_path = "dataset.csv";
  std::string out_prefix = "run";
  std::string reference_particles;
  std::vector<int> levels = {0, 1, 2};
  int frame = 1;
  bool per_frame_fields = false;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  RunConfig& c = opt.config;
  cmd->add_option("--seed", c.seed, "RNG master seed")->required();
  cmd->add_option("--phi-a", c.phi_a, "conductivity kernel variance")->check(CLI::PositiveNumber);
  cmd->add_option("--ell-a", c.ell_a, "conductivity kernel lengthscale")->check(CLI::PositiveNumber);
  cmd->add_option("--phi-u", c.phi_u, "potential kernel variance")->check(CLI::PositiveNumber);
  cmd->add_option("--ell-u", c.ell_u, "potential kernel lengthscale")->check(CLI::PositiveNumber);
  cmd->add_option("--sigma", c.sigma, "measurement noise std")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", opt.lambdas,
                  "Brownian coefficient-dynamics rate; repeat for a sweep")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tau", c.tau, "initial-time offset of the coefficient dynamics")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--kl-modes", c.n_kl, "truncation of the conductivity basis")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--particles", c.n_particles, "ensemble size")->check(CLI::PositiveNumber);
  cmd->add_option("--design-level", c.design_level, "collocation design level (0, 1, 2)")
      ->check(CLI::Range(0, 2));
  cmd->add_option("--design-total", c.design_total,
                  "explicit collocation point total (overrides --design-level)");
  cmd->add_option("--tempering-steps", c.tempering_steps, "inverse-temperature ladder length")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--moves-per-step", c.moves_per_step, "pCN moves after each resampling")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--pn,!--no-pn", c.pn, "marginalise discretisation error in the likelihood");
  cmd->add_option("--frames", c.n_frames, "number of measurement frames")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "worker thread cap")->check(CLI::PositiveNumber);
  cmd->add_option("--grid-res", c.grid_res, "per-axis resolution of field-summary grids")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--electrodes", c.m, "electrode count")->check(CLI::Range(2, 64));
  cmd->add_option("--electrode-half-width", c.electrode_half_width,
                  "electrode half-arc (radians)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--quad-nodes", c.quad_nodes, "Gauss nodes per electrode arc")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--dense-points", c.dense_points,
                  "reference / data-generation design size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--nystrom-per-axis", c.nystrom_per_axis,
                  "per-axis resolution of the eigenbasis grid")
      ->check(CLI::PositiveNumber);
  cmd->set_config("--config", "", "read options from an INI/TOML file");
}

void add_truth_flags(CLI::App* cmd, SyntheticTruth& t) {
  cmd->add_option("--amplitude", t.amplitude, "log-conductivity peak at injection");
  cmd->add_option("--width", t.width, "initial blob std")->check(CLI::PositiveNumber);
  cmd->add_option("--orbit-radius", t.orbit_radius, "blob centre distance from origin")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--initial-angle", t.initial_angle, "blob centre angle at injection");
  cmd->add_option("--angular-velocity", t.angular_velocity, "orbit rate (rad per unit time)");
  cmd->add_option("--diffusion-rate", t.diffusion_rate, "blob width growth per unit time")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--injection-frame", t.injection_frame, "last baseline frame (1-based)")
      ->check(CLI::PositiveNumber);
}

void write_evidence(const std::string& path, double log_evidence, double runtime) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "log_evidence,runtime_seconds\n" << log_evidence << "," << runtime << "\n";
}

int cmd_simulate(const CliOptions& opt) {
  RunConfig config = opt.config;
  RunContext ctx(config);
  CollocationDesign dense = concentric_design_total(config.dense_points, &ctx.electrodes);
  Dataset ds = simulate_dataset(config.truth, ctx.protocol, ctx.electrodes, dense,
                                ctx.kernel_u, regular_time_grid(config.n_frames), config.seed);
  write_dataset(ds, opt.out_path);
  std::cout << "wrote " << opt.out_path << ": " << ds.frames.size() << " frames, "
            << ds.n_measurements() << " measurements\n";
  return 0;
}

int cmd_static(const CliOptions& opt) {
  RunConfig config = opt.config;
  config.lambda = opt.lambdas.front();
  RunContext ctx(config);
  Dataset ds = read_dataset(opt.data_path);
  StaticRunResult r = run_static(config, ctx, ds, opt.frame);

  const std::string& p = opt.out_prefix;
  write_field_csv(r.field, p + "_field.csv");
  write_particles_csv(r.ensemble, p + "_particles.csv");
  write_diagnostics_csv({r.diagnostics}, p + "_diagnostics.csv");
  write_evidence(p + "_evidence.csv", r.log_evidence, r.runtime_seconds);
  if (!opt.reference_particles.empty()) {
    ParticleEnsemble ref = read_particles_csv(opt.reference_particles);
    write_pca_csv(ref, r.ensemble, p + "_pca.csv");
  }
  std::cout << "frame " << opt.frame << ": log evidence " << r.log_evidence
            << ", integrated std " << r.field.integrated_std << ", " << r.runtime_seconds
            << " s\n";
  return 0;
}

int cmd_filter(const CliOptions& opt) {
  Dataset ds = read_dataset(opt.data_path);
  for (double lambda : opt.lambdas) {
    RunConfig config = opt.config;
    config.lambda = lambda;
    config.n_frames = static_cast<int>(ds.frames.size());
    RunContext ctx(config);
    FilterRunResult r = run_filter(config, ctx, ds, opt.per_frame_fields);

    std::string p = opt.out_prefix;
    if (opt.lambdas.size() > 1) p += "_" + lambda_tag(lambda);
    write_particles_csv(r.ensemble, p + "_particles.csv");
    write_particles_csv(r.predictive_ensemble, p + "_predictive.csv");
    write_diagnostics_csv(r.diagnostics, p + "_diagnostics.csv");
    if (opt.per_frame_fields)
      for (size_t k = 0; k < r.per_frame.size(); ++k)
        write_field_csv(r.per_frame[k], p + "_frame" + std::to_string(k + 1) + "_field.csv");

    std::ofstream out(p + "_coeffs.csv");
    if (!out) throw std::runtime_error("cannot open " + p + "_coeffs.csv");
    out.precision(17);
    out << "frame,coefficient,mean,var\n";
    for (size_t k = 0; k < r.coeff_means.size(); ++k)
      for (int d = 0; d < r.coeff_means[k].size(); ++d)
        out << (k + 1) << "," << d << "," << r.coeff_means[k](d) << ","
            << r.coeff_vars[k](d) << "\n";
    std::cout << "lambda " << lambda << ": " << ds.frames.size() << " frames in "
              << r.runtime_seconds << " s -> " << p << "_*.csv\n";
  }
  return 0;
}

int cmd_diagnostics(const CliOptions& opt) {
  Dataset ds = read_dataset(opt.data_path);
  const std::string& p = opt.out_prefix;

  // Dense reference run (always with discretisation-error marginalisation).
  RunConfig ref_config = opt.config;
  ref_config.lambda = opt.lambdas.front();
  ref_config.design_total = ref_config.dense_points;
  ref_config.pn = true;
  RunContext ref_ctx(ref_config);
  StaticRunResult ref = run_static(ref_config, ref_ctx, ds, opt.frame);
  write_particles_csv(ref.ensemble, p + "_reference_particles.csv");

  std::ofstream table(p + "_levels.csv");
  if (!table) throw std::runtime_error("cannot open " + p + "_levels.csv");
  table.precision(17);
  table << "level,points,pn,integrated_std,runtime_seconds,runtime_ratio_vs_reference\n";
  for (int level : opt.levels) {
    for (bool pn : {true, false}) {
      RunConfig config = ref_config;
      config.design_total = -1;
      config.design_level = level;
      config.pn = pn;
      RunContext ctx(config);
      StaticRunResult r = run_static(config, ctx, ds, opt.frame);
      table << level << "," << ctx.design.total() << "," << (pn ? 1 : 0) << ","
            << r.field.integrated_std << "," << r.runtime_seconds << ","
            << r.runtime_seconds / ref.runtime_seconds << "\n";
      std::string tag = "_level" + std::to_string(level) + (pn ? "_pn" : "_nopn");
      write_pca_csv(ref.ensemble, r.ensemble, p + tag + "_pca.csv");
      std::cout << "level " << level << (pn ? " (pn)" : " (non-pn)") << ": integrated std "
                << r.field.integrated_std << ", " << r.runtime_seconds << " s\n";
    }
  }
  std::cout << "reference (" << ref_config.dense_points << " points): integrated std "
            << ref.field.integrated_std << ", " << ref.runtime_seconds << " s -> " << p
            << "_levels.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electrical impedance tomography with discretisation-aware inference"};
  app.require_subcommand(1);

  CliOptions opt;

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common_flags(simulate, opt);
  add_truth_flags(simulate, opt.config.truth);
  simulate->add_option("--out", opt.out_path, "dataset CSV path")->required();

  CLI::App* stat = app.add_subcommand("static", "single-frame posterior recovery");
  add_common_flags(stat, opt);
  stat->add_option("--data", opt.data_path, "dataset CSV path")->required();
  stat->add_option("--frame", opt.frame, "frame to analyse (1-based)")
      ->check(CLI::PositiveNumber)
      ->required();
  stat->add_option("--out-prefix", opt.out_prefix, "output file prefix");
  stat->add_option("--reference", opt.reference_particles,
                   "particle CSV of a reference run for PCA projections");

  CLI::App* filter = app.add_subcommand("filter", "temporal filtering over all frames");
  add_common_flags(filter, opt);
  filter->add_option("--data", opt.data_path, "dataset CSV path")->required();
  filter->add_option("--out-prefix", opt.out_prefix, "output file prefix");
  filter->add_flag("--per-frame-fields", opt.per_frame_fields,
                   "write a grid mean/std file for every frame");

  CLI::App* diag = app.add_subcommand("diagnostics",
                                      "level sweep vs a dense reference on one frame");
  add_common_flags(diag, opt);
  diag->add_option("--data", opt.data_path, "dataset CSV path")->required();
  diag->add_option("--frame", opt.frame, "frame to analyse (1-based)")
      ->check(CLI::PositiveNumber)
      ->required();
  diag->add_option("--levels", opt.levels, "design levels to sweep");
  diag->add_option("--out-prefix", opt.out_prefix, "output file prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (stat->parsed()) return cmd_static(opt);
    if (filter->parsed()) return cmd_filter(opt);
    return cmd_diagnostics(opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
