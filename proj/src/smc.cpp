#include "eitpn/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace eitpn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

void parallel_for(int n, int n_threads, const std::function<void(int)>& body) {
  if (n_threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  int workers = std::min(n_threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

Eigen::VectorXd ParticleEnsemble::weights() const {
  Eigen::VectorXd w = (log_weights.array() - logsumexp(log_weights)).exp();
  return w / w.sum();
}

std::vector<double> TemperingLadder::schedule() const {
  if (n_steps < 1) throw std::invalid_argument("TemperingLadder: n_steps >= 1");
  std::vector<double> s(n_steps);
  for (int i = 0; i < n_steps; ++i) s[i] = static_cast<double>(i + 1) / n_steps;
  return s;
}

double ess(const Eigen::VectorXd& weights) {
  double sum = weights.sum();
  if (sum <= 0.0) throw std::invalid_argument("ess: weights must have positive sum");
  Eigen::VectorXd w = weights / sum;
  return 1.0 / w.squaredNorm();
}

std::vector<int> systematic_resample_indices(const Eigen::VectorXd& weights, Rng& rng) {
  const int n = static_cast<int>(weights.size());
  Eigen::VectorXd w = weights / weights.sum();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng) / n;
  std::vector<int> idx(n);
  double cum = w(0);
  int j = 0;
  for (int i = 0; i < n; ++i) {
    double pos = u + static_cast<double>(i) / n;
    while (pos > cum && j < n - 1) cum += w(++j);
    idx[i] = j;
  }
  return idx;
}

void systematic_resample(ParticleEnsemble& ensemble, Rng& rng) {
  auto idx = systematic_resample_indices(ensemble.weights(), rng);
  std::vector<Eigen::VectorXd> next(ensemble.size());
  for (int i = 0; i < ensemble.size(); ++i) next[i] = ensemble.particles[idx[i]];
  ensemble.particles = std::move(next);
  ensemble.log_weights.setZero();
}

bool pcn_move(Eigen::VectorXd& state,
              const std::function<double(const Eigen::VectorXd&)>& target_logratio,
              double prior_std, double beta, Rng& rng) {
  std::normal_distribution<double> normal(0.0, prior_std);
  Eigen::VectorXd xi(state.size());
  for (int i = 0; i < state.size(); ++i) xi(i) = normal(rng);
  Eigen::VectorXd proposal = std::sqrt(1.0 - beta * beta) * state + beta * xi;
  double log_alpha = target_logratio(proposal) - target_logratio(state);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (std::log(unif(rng)) < log_alpha) {
    state = std::move(proposal);
    return true;
  }
  return false;
}

AnnealResult anneal(std::vector<Eigen::VectorXd>& ancestors,
                    std::vector<Eigen::VectorXd>& deltas,
                    Eigen::VectorXd& log_weights,
                    const std::function<double(const Eigen::VectorXd&)>& loglik,
                    double prior_std, const TemperingLadder& ladder, PcnConfig& pcn,
                    std::uint64_t master_seed, std::uint64_t& rng_epoch, int n_threads) {
  const int n = static_cast<int>(deltas.size());
  if (n < 2 || static_cast<int>(ancestors.size()) != n || log_weights.size() != n)
    throw std::invalid_argument("anneal: inconsistent ensemble sizes");

  Eigen::VectorXd ll(n);
  parallel_for(n, n_threads, [&](int i) { ll(i) = loglik(ancestors[i] + deltas[i]); });
  if (ll.maxCoeff() == kNegInf)
    throw std::runtime_error("anneal: every particle has -inf log-likelihood");

  AnnealResult result;
  double prev_beta = 0.0;
  const std::vector<double> schedule = ladder.schedule();
  for (int step = 1; step <= static_cast<int>(schedule.size()); ++step) {
    double b = schedule[step - 1];
    double db = b - prev_beta;

    double norm_before = logsumexp(log_weights);
    log_weights += db * ll;
    result.log_evidence += logsumexp(log_weights) - norm_before;

    Eigen::VectorXd w = (log_weights.array() - logsumexp(log_weights)).exp();
    w /= w.sum();
    double e = ess(w);
    double accept_rate = std::numeric_limits<double>::quiet_NaN();

    if (e < 0.5 * n) {
      Rng resample_rng = make_stream(master_seed, rng_epoch++, 0x5e5a);
      auto idx = systematic_resample_indices(w, resample_rng);
      std::vector<Eigen::VectorXd> anc(n), del(n);
      Eigen::VectorXd ll_next(n);
      for (int i = 0; i < n; ++i) {
        anc[i] = ancestors[idx[i]];
        del[i] = deltas[idx[i]];
        ll_next(i) = ll(idx[i]);
      }
      ancestors = std::move(anc);
      deltas = std::move(del);
      ll = ll_next;
      log_weights.setZero();

      std::uint64_t move_epoch = rng_epoch++;
      std::vector<int> accepted(n, 0);
      parallel_for(n, n_threads, [&](int i) {
        Rng rng = make_stream(master_seed, move_epoch, 0xac3d, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(0.0, prior_std);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int mv = 0; mv < pcn.moves_per_step; ++mv) {
          Eigen::VectorXd xi(deltas[i].size());
          for (int d = 0; d < xi.size(); ++d) xi(d) = normal(rng);
          Eigen::VectorXd proposal =
              std::sqrt(1.0 - pcn.beta * pcn.beta) * deltas[i] + pcn.beta * xi;
          double ll_prop = loglik(ancestors[i] + proposal);
          if (std::log(unif(rng)) < b * (ll_prop - ll(i))) {
            deltas[i] = std::move(proposal);
            ll(i) = ll_prop;
            ++accepted[i];
          }
        }
      });
      int total = 0;
      for (int a : accepted) total += a;
      accept_rate = static_cast<double>(total) / (n * std::max(1, pcn.moves_per_step));
      if (accept_rate > pcn.accept_hi)
        pcn.beta = std::min(pcn.beta * pcn.adapt_factor, 0.999);
      else if (accept_rate < pcn.accept_lo)
        pcn.beta = std::max(pcn.beta / pcn.adapt_factor, 1e-4);
      e = static_cast<double>(n);
    }

    result.diagnostics.push_back({step, b, e, accept_rate, pcn.beta});
    prev_beta = b;
  }
  return result;
}

double FrameLikelihood::operator()(const Eigen::VectorXd& coeffs) const {
  if (frame_ == nullptr) throw std::logic_error("FrameLikelihood: no frame set");
  try {
    return marginal_loglik(*frame_, solve_all(coeffs), protocol_, pn_);
  } catch (const std::runtime_error&) {
    return kNegInf;  // factorisation failure: particle is rejected by weighting
  }
}

std::vector<PMMResult> FrameLikelihood::solve_all(const Eigen::VectorXd& coeffs) const {
  OperatorSystem sys = assemble(tables_, field_tables_.sample(coeffs));
  PmmFactor factor(sys);
  std::vector<PMMResult> results(protocol_.n_patterns());
  for (int j = 0; j < protocol_.n_patterns(); ++j) {
    results[j].mean = factor.mean(protocol_.patterns[j]);
    results[j].cov = factor.cov();
  }
  return results;
}

ParticleEnsemble init_ensemble(const TemporalModel& model, const KLBasis& basis,
                               int n_particles, std::uint64_t master_seed) {
  (void)model;
  ParticleEnsemble e;
  e.master_seed = master_seed;
  e.frame_index = 0;
  e.time = 0.0;
  e.particles.assign(n_particles, Eigen::VectorXd::Zero(basis.n_modes()));
  e.log_weights = Eigen::VectorXd::Zero(n_particles);
  return e;
}

AnnealResult filter_step(ParticleEnsemble& ensemble, const Frame& frame,
                         const TemporalModel& model, FrameLikelihood& likelihood,
                         const TemperingLadder& ladder, PcnConfig& pcn, int n_threads) {
  if (frame.index != ensemble.frame_index + 1)
    throw std::invalid_argument("filter_step: frame index must follow the ensemble index");
  const int n = ensemble.size();
  const int n_coeffs = static_cast<int>(ensemble.particles[0].size());
  double t_new = model.time_grid.at(frame.index - 1);
  double span = t_new - ensemble.time;

  // Prior-increment propagation: the increment density cancels against the
  // proposal, leaving the tempered likelihood as the only weight factor.
  std::vector<Eigen::VectorXd> deltas(n);
  std::uint64_t prop_epoch = ensemble.rng_epoch++;
  for (int i = 0; i < n; ++i) {
    Rng rng = make_stream(ensemble.master_seed, prop_epoch, 0x9a0b, static_cast<std::uint64_t>(i));
    deltas[i] = sample_increment(model, n_coeffs, span, rng);
  }

  likelihood.set_frame(&frame);
  double prior_std = std::sqrt(model.increment_variance(span));
  AnnealResult result = anneal(ensemble.particles, deltas, ensemble.log_weights, likelihood,
                               prior_std, ladder, pcn, ensemble.master_seed,
                               ensemble.rng_epoch, n_threads);

  for (int i = 0; i < n; ++i) ensemble.particles[i] += deltas[i];
  ensemble.frame_index = frame.index;
  ensemble.time = t_new;
  return result;
}

ParticleEnsemble predictive(const ParticleEnsemble& ensemble, const TemporalModel& model,
                            double s) {
  if (s <= 0.0) throw std::invalid_argument("predictive: horizon must be > 0");
  ParticleEnsemble out = ensemble;
  std::uint64_t epoch = out.rng_epoch++;
  int n_coeffs = static_cast<int>(out.particles[0].size());
  for (int i = 0; i < out.size(); ++i) {
    Rng rng = make_stream(out.master_seed, epoch, 0x97ed, static_cast<std::uint64_t>(i));
    out.particles[i] += sample_increment(model, n_coeffs, s, rng);
  }
  out.time += s;
  return out;
}

}  // namespace eitpn
