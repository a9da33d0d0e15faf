#include "eitpn/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace eitpn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

RunContext::RunContext(const RunConfig& config)
    : electrodes(build_electrodes(config.m, config.electrode_half_width, config.quad_nodes)),
      protocol(reference_protocol(config.m, config.sigma)),
      kernel_a(config.phi_a, config.ell_a),
      kernel_u(config.phi_u, config.ell_u),
      basis(nystrom_eigs(kernel_a, disc_lattice(config.nystrom_per_axis), config.n_kl)),
      temporal(config.lambda, config.tau, regular_time_grid(config.n_frames)),
      design(config.design_total > 0 ? concentric_design_total(config.design_total, &electrodes)
                                     : concentric_design(config.design_level, &electrodes)) {}

FieldSummary summarize_field(const KLBasis& basis, const std::vector<Eigen::VectorXd>& coeffs,
                             const Eigen::VectorXd& weights, int grid_res) {
  FieldSummary s;
  s.points = disc_lattice(grid_res);
  BasisTable table(basis, s.points);
  const int np = static_cast<int>(s.points.size());
  Eigen::VectorXd w = weights / weights.sum();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(np), m2 = Eigen::VectorXd::Zero(np);
  for (size_t i = 0; i < coeffs.size(); ++i) {
    Eigen::VectorXd a = table.theta(coeffs[i]).array().exp();
    m1 += w(i) * a;
    m2 += w(i) * a.cwiseProduct(a);
  }
  s.mean = m1;
  s.stddev = (m2 - m1.cwiseProduct(m1)).cwiseMax(0.0).cwiseSqrt();
  s.integrated_std = std::numbers::pi * s.stddev.mean();
  return s;
}

void coeff_moments(const std::vector<Eigen::VectorXd>& coeffs, const Eigen::VectorXd& weights,
                   Eigen::VectorXd& mean, Eigen::VectorXd& var) {
  Eigen::VectorXd w = weights / weights.sum();
  const int d = static_cast<int>(coeffs[0].size());
  mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
  for (size_t i = 0; i < coeffs.size(); ++i) {
    mean += w(i) * coeffs[i];
    m2 += w(i) * coeffs[i].cwiseProduct(coeffs[i]);
  }
  var = (m2 - mean.cwiseProduct(mean)).cwiseMax(0.0);
}

StaticRunResult run_static(const RunConfig& config, const RunContext& ctx,
                           const Dataset& dataset, int frame_index) {
  if (frame_index < 1 || frame_index > static_cast<int>(dataset.frames.size()))
    throw std::invalid_argument("run_static: frame index outside the dataset");
  auto start = Clock::now();

  DesignTables tables(ctx.design, ctx.electrodes, ctx.kernel_u);
  FieldTables field_tables(tables, ctx.basis);
  FrameLikelihood loglik(tables, field_tables, ctx.protocol, config.pn);
  loglik.set_frame(&dataset.frames[frame_index - 1]);

  const int n = config.n_particles;
  std::vector<Eigen::VectorXd> ancestors(n, Eigen::VectorXd::Zero(config.n_kl));
  std::vector<Eigen::VectorXd> deltas(n);
  for (int i = 0; i < n; ++i) {
    Rng rng = make_stream(config.seed, 1, 0x57a7, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal(0.0, 1.0);
    deltas[i].resize(config.n_kl);
    for (int d = 0; d < config.n_kl; ++d) deltas[i](d) = normal(rng);
  }
  Eigen::VectorXd logw = Eigen::VectorXd::Zero(n);

  TemperingLadder ladder{config.tempering_steps};
  PcnConfig pcn;
  pcn.moves_per_step = config.moves_per_step;
  std::uint64_t epoch = 2;
  AnnealResult ar = anneal(ancestors, deltas, logw, loglik, 1.0, ladder, pcn, config.seed,
                           epoch, config.threads);

  StaticRunResult result;
  result.ensemble.master_seed = config.seed;
  result.ensemble.rng_epoch = epoch;
  result.ensemble.frame_index = frame_index;
  result.ensemble.time = dataset.time_grid.at(frame_index - 1);
  result.ensemble.particles = std::move(deltas);
  result.ensemble.log_weights = logw;
  result.diagnostics = ar.diagnostics;
  result.log_evidence = ar.log_evidence;
  result.field = summarize_field(ctx.basis, result.ensemble.particles,
                                 result.ensemble.weights(), config.grid_res);
  result.runtime_seconds = seconds_since(start);
  return result;
}

FilterRunResult run_filter(const RunConfig& config, const RunContext& ctx,
                           const Dataset& dataset, bool summaries) {
  auto start = Clock::now();
  DesignTables tables(ctx.design, ctx.electrodes, ctx.kernel_u);
  FieldTables field_tables(tables, ctx.basis);
  FrameLikelihood loglik(tables, field_tables, ctx.protocol, config.pn);

  TemperingLadder ladder{config.tempering_steps};
  PcnConfig pcn;
  pcn.moves_per_step = config.moves_per_step;

  FilterRunResult result;
  ParticleEnsemble ensemble =
      init_ensemble(ctx.temporal, ctx.basis, config.n_particles, config.seed);
  for (const auto& frame : dataset.frames) {
    AnnealResult ar =
        filter_step(ensemble, frame, ctx.temporal, loglik, ladder, pcn, config.threads);
    result.diagnostics.push_back(ar.diagnostics);
    Eigen::VectorXd mean, var;
    coeff_moments(ensemble.particles, ensemble.weights(), mean, var);
    result.coeff_means.push_back(mean);
    result.coeff_vars.push_back(var);
    if (summaries)
      result.per_frame.push_back(summarize_field(ctx.basis, ensemble.particles,
                                                 ensemble.weights(), config.grid_res));
  }

  double horizon = ensemble.size() && !dataset.time_grid.empty()
                       ? dataset.time_grid.size() > 1
                             ? dataset.time_grid[1] - dataset.time_grid[0]
                             : dataset.time_grid[0]
                       : 0.0;
  result.predictive_ensemble = predictive(ensemble, ctx.temporal, horizon);
  result.ensemble = std::move(ensemble);
  result.runtime_seconds = seconds_since(start);
  return result;
}

void write_field_csv(const FieldSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  out.precision(17);
  out << "x,y,mean,std\n";
  for (size_t i = 0; i < summary.points.size(); ++i)
    out << summary.points[i].x() << "," << summary.points[i].y() << "," << summary.mean(i)
        << "," << summary.stddev(i) << "\n";
}

void write_particles_csv(const ParticleEnsemble& ensemble, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_particles_csv: cannot open " + path);
  out.precision(17);
  out << "# frame=" << ensemble.frame_index << "\n# time=" << ensemble.time << "\n";
  out << "weight";
  for (int d = 0; d < ensemble.particles[0].size(); ++d) out << ",c" << d;
  out << "\n";
  Eigen::VectorXd w = ensemble.weights();
  for (int i = 0; i < ensemble.size(); ++i) {
    out << w(i);
    for (int d = 0; d < ensemble.particles[i].size(); ++d)
      out << "," << ensemble.particles[i](d);
    out << "\n";
  }
}

ParticleEnsemble read_particles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_particles_csv: cannot open " + path);
  ParticleEnsemble e;
  std::string line;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> weights;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("weight", 0) == 0) {
      if (line.rfind("# frame=", 0) == 0) e.frame_index = std::stoi(line.substr(8));
      if (line.rfind("# time=", 0) == 0) e.time = std::stod(line.substr(7));
      continue;
    }
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    weights.push_back(vals.at(0));
    rows.emplace_back(Eigen::Map<Eigen::VectorXd>(vals.data() + 1, vals.size() - 1));
  }
  e.particles = std::move(rows);
  e.log_weights.resize(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) e.log_weights(i) = std::log(weights[i]);
  return e;
}

void write_diagnostics_csv(const std::vector<std::vector<AnnealDiag>>& per_frame,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_diagnostics_csv: cannot open " + path);
  out << "frame,step,temperature,ess,accept_rate,beta\n";
  for (size_t k = 0; k < per_frame.size(); ++k)
    for (const auto& d : per_frame[k])
      out << (k + 1) << "," << d.step << "," << d.temperature << "," << d.ess << ","
          << d.accept_rate << "," << d.beta << "\n";
}

void pca_axes(const ParticleEnsemble& ensemble, Eigen::VectorXd& mean, Eigen::MatrixXd& axes) {
  Eigen::VectorXd w = ensemble.weights();
  Eigen::VectorXd var;
  coeff_moments(ensemble.particles, w, mean, var);
  const int d = static_cast<int>(mean.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < ensemble.size(); ++i) {
    Eigen::VectorXd c = ensemble.particles[i] - mean;
    cov += w(i) * c * c.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  axes.resize(d, 2);
  axes.col(0) = es.eigenvectors().col(d - 1);
  axes.col(1) = es.eigenvectors().col(d - 2);
}

void write_pca_csv(const ParticleEnsemble& reference, const ParticleEnsemble& run,
                   const std::string& path) {
  Eigen::VectorXd mean;
  Eigen::MatrixXd axes;
  pca_axes(reference, mean, axes);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_pca_csv: cannot open " + path);
  out.precision(17);
  out << "set,pc1,pc2,weight\n";
  auto dump = [&](const ParticleEnsemble& e, const char* tag) {
    Eigen::VectorXd w = e.weights();
    for (int i = 0; i < e.size(); ++i) {
      Eigen::Vector2d p = axes.transpose() * (e.particles[i] - mean);
      out << tag << "," << p.x() << "," << p.y() << "," << w(i) << "\n";
    }
  };
  dump(reference, "ref");
  dump(run, "run");
}

}  // namespace eitpn
