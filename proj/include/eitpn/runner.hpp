#ifndef EITPN_RUNNER_HPP
#define EITPN_RUNNER_HPP

#include <string>
#include <vector>

#include "eitpn/data.hpp"
#include "eitpn/smc.hpp"

namespace eitpn {

/// Everything a run needs; defaults follow the reference configuration
/// (phi_a = 1, ell_a = 0.3, sigma = 1, phi_u = 100, ell_u = 0.211,
/// 100 tempering steps).
struct RunConfig {
  double phi_a = 1.0, ell_a = 0.3;      // conductivity prior kernel
  double phi_u = 100.0, ell_u = 0.211;  // potential prior kernel
  double sigma = 1.0;                   // measurement noise std
  double lambda = 100.0, tau = 0.0;     // Brownian coefficient dynamics
  int n_kl = 32;                        // KL truncation
  int n_particles = 200;
  int design_level = 0;
  int design_total = -1;                // > 0 overrides the level's point total
  int tempering_steps = 100;
  int moves_per_step = 5;
  bool pn = true;
  std::uint64_t seed = 0;
  int n_frames = 49;
  int threads = 1;
  int grid_res = 64;                    // output field-summary grid
  int m = 8;
  double electrode_half_width = 0.0667;
  int quad_nodes = 8;
  int dense_points = 1200;              // reference / data-generation design
  int nystrom_per_axis = 24;
  SyntheticTruth truth;
};

/// Shared per-run objects built once from a config.
struct RunContext {
  Electrodes electrodes;
  Protocol protocol;
  SEKernel kernel_a, kernel_u;
  KLBasis basis;
  TemporalModel temporal;
  CollocationDesign design;

  explicit RunContext(const RunConfig& config);
};

/// Weighted ensemble summaries of the conductivity field a = exp(theta) on a
/// grid over the disc.
struct FieldSummary {
  std::vector<Vec2> points;
  Eigen::VectorXd mean, stddev;  // of a(x), per grid point
  double integrated_std = 0.0;   // pi * average std over the disc
};

FieldSummary summarize_field(const KLBasis& basis, const std::vector<Eigen::VectorXd>& coeffs,
                             const Eigen::VectorXd& weights, int grid_res);

/// Weighted mean / variance per coefficient.
void coeff_moments(const std::vector<Eigen::VectorXd>& coeffs, const Eigen::VectorXd& weights,
                   Eigen::VectorXd& mean, Eigen::VectorXd& var);

struct StaticRunResult {
  ParticleEnsemble ensemble;      // posterior particles (frame_index = frame analysed)
  FieldSummary field;
  std::vector<AnnealDiag> diagnostics;
  double runtime_seconds = 0.0;
  double log_evidence = 0.0;
};

/// Tempered SMC from the static Gaussian prior (coefficients i.i.d. N(0,1) in
/// the scaled basis) to the single-frame posterior.
StaticRunResult run_static(const RunConfig& config, const RunContext& ctx,
                           const Dataset& dataset, int frame_index);

struct FilterRunResult {
  ParticleEnsemble ensemble;                 // final-frame posterior
  ParticleEnsemble predictive_ensemble;      // one step ahead
  std::vector<FieldSummary> per_frame;       // one summary per frame
  std::vector<Eigen::VectorXd> coeff_means;  // per frame
  std::vector<Eigen::VectorXd> coeff_vars;   // per frame
  std::vector<std::vector<AnnealDiag>> diagnostics;  // per frame
  double runtime_seconds = 0.0;
};

/// Full temporal filter over every frame of the dataset.
/// `summaries` toggles the (relatively costly) per-frame field grids.
FilterRunResult run_filter(const RunConfig& config, const RunContext& ctx,
                           const Dataset& dataset, bool summaries = true);

// ---- Plot-ready output files ----
void write_field_csv(const FieldSummary& summary, const std::string& path);
void write_particles_csv(const ParticleEnsemble& ensemble, const std::string& path);
ParticleEnsemble read_particles_csv(const std::string& path);
void write_diagnostics_csv(const std::vector<std::vector<AnnealDiag>>& per_frame,
                           const std::string& path);

/// Projections onto the first two principal components of the reference
/// ensemble's coefficient covariance. Rows: set{ref,run},pc1,pc2,weight.
void write_pca_csv(const ParticleEnsemble& reference, const ParticleEnsemble& run,
                   const std::string& path);

/// Top-2 principal directions (columns) of an ensemble's weighted coefficient
/// covariance, plus the weighted mean.
void pca_axes(const ParticleEnsemble& ensemble, Eigen::VectorXd& mean, Eigen::MatrixXd& axes);

}  // namespace eitpn

#endif
