#ifndef EITPN_SMC_HPP
#define EITPN_SMC_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eitpn/likelihood.hpp"
#include "eitpn/prior.hpp"

namespace eitpn {

/// Weighted particle approximation of the filtering posterior at one frame.
/// RNG bookkeeping: every stochastic phase derives fresh per-particle streams
/// from (master_seed, rng_epoch, particle), so runs are reproducible for any
/// thread count.
struct ParticleEnsemble {
  std::vector<Eigen::VectorXd> particles;
  Eigen::VectorXd log_weights;  // unnormalised
  int frame_index = 0;
  double time = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t rng_epoch = 0;

  int size() const { return static_cast<int>(particles.size()); }
  /// Normalised weights (sum to one).
  Eigen::VectorXd weights() const;
};

struct PcnConfig {
  double beta = 0.2;            // step size in (0,1)
  double accept_lo = 0.10;      // target acceptance band
  double accept_hi = 0.25;
  int moves_per_step = 5;
  double adapt_factor = 1.2;    // multiplicative step-size adaptation
};

struct TemperingLadder {
  int n_steps = 100;
  /// Linear inverse-temperature schedule 1/n, 2/n, ..., 1.
  std::vector<double> schedule() const;
};

/// Effective sample size 1 / sum w_i^2 of normalised weights.
double ess(const Eigen::VectorXd& weights);

/// Systematic resampling: offspring positions u, u+1/N, ... with a single
/// uniform offset u ~ U(0, 1/N). Offspring counts have expectation N * w_i.
std::vector<int> systematic_resample_indices(const Eigen::VectorXd& weights, Rng& rng);
void systematic_resample(ParticleEnsemble& ensemble, Rng& rng);

/// One preconditioned Crank-Nicolson step with zero-mean Gaussian reference
/// of coefficient std `prior_std`. `target_logratio` is log dPi/dPi0, i.e.
/// the (tempered) log-likelihood plus any non-reference prior terms.
bool pcn_move(Eigen::VectorXd& state,
              const std::function<double(const Eigen::VectorXd&)>& target_logratio,
              double prior_std, double beta, Rng& rng);

/// Per-tempering-step diagnostics, one row per intermediate distribution.
struct AnnealDiag {
  int step;
  double temperature;
  double ess;
  double accept_rate;  // NaN when no moves happened
  double beta;
};

struct AnnealResult {
  double log_evidence = 0.0;  // log of the product of incremental normalisers
  std::vector<AnnealDiag> diagnostics;
};

/// Core tempered SMC sweep. Particles are ancestor + delta with delta having
/// the zero-mean Gaussian reference used by the pCN proposal; the target at
/// temperature b is reference * exp(b * loglik(ancestor + delta)).
/// Resampling (systematic) triggers when ESS < N/2, followed by
/// `pcn.moves_per_step` pCN moves per particle; pcn.beta adapts between
/// steps toward the acceptance band. log_weights and loglik_cache are
/// updated in place.
AnnealResult anneal(std::vector<Eigen::VectorXd>& ancestors,
                    std::vector<Eigen::VectorXd>& deltas,
                    Eigen::VectorXd& log_weights,
                    const std::function<double(const Eigen::VectorXd&)>& loglik,
                    double prior_std, const TemperingLadder& ladder, PcnConfig& pcn,
                    std::uint64_t master_seed, std::uint64_t& rng_epoch, int n_threads);

/// Likelihood of one frame as a function of field coefficients: assemble the
/// collocation system, solve the PMM, marginalise discretisation error.
class FrameLikelihood {
 public:
  FrameLikelihood(const DesignTables& tables, const FieldTables& field_tables,
                  const Protocol& protocol, bool pn)
      : tables_(tables), field_tables_(field_tables), protocol_(protocol), pn_(pn) {}

  void set_frame(const Frame* frame) { frame_ = frame; }
  double operator()(const Eigen::VectorXd& coeffs) const;
  /// PMM posteriors for all patterns at one field (shared factorisation).
  std::vector<PMMResult> solve_all(const Eigen::VectorXd& coeffs) const;

 private:
  const DesignTables& tables_;
  const FieldTables& field_tables_;
  const Protocol& protocol_;
  bool pn_;
  const Frame* frame_ = nullptr;
};

/// Fresh ensemble of draws from the initial prior (frame 0 = "before data").
ParticleEnsemble init_ensemble(const TemporalModel& model, const KLBasis& basis, int n_particles,
                               std::uint64_t master_seed);

/// One assimilation step: propagate every particle by a prior increment over
/// t_k - t_{k-1}, then anneal the new frame's likelihood through the ladder.
AnnealResult filter_step(ParticleEnsemble& ensemble, const Frame& frame,
                         const TemporalModel& model, FrameLikelihood& likelihood,
                         const TemperingLadder& ladder, PcnConfig& pcn, int n_threads);

/// Posterior predictive at horizon s: convolve with a prior increment,
/// weights unchanged.
ParticleEnsemble predictive(const ParticleEnsemble& ensemble, const TemporalModel& model,
                            double s);

}  // namespace eitpn

#endif
