#ifndef EITPN_PRIOR_HPP
#define EITPN_PRIOR_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "eitpn/kernel.hpp"

namespace eitpn {

using Rng = std::mt19937_64;

/// Deterministic per-(seed, stream ids) RNG so parallel execution stays
/// reproducible regardless of scheduling.
Rng make_stream(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b = 0,
                std::uint64_t c = 0);

/// Coefficients of the log-conductivity field theta in the scaled KL basis,
/// theta(x) = sum_i coeffs_i * sqrt(eigenvalue_i) * e_i(x), at one time.
struct ThetaState {
  Eigen::VectorXd coeffs;
  double time = 0.0;
};

/// Brownian coefficient dynamics: increments over a span s are i.i.d.
/// N(0, rate * (s + offset)) per coefficient.
struct TemporalModel {
  double rate = 100.0;    // variance growth per unit time
  double offset = 0.0;    // time offset, >= 0
  std::vector<double> time_grid;  // strictly increasing in (0, 1]

  TemporalModel() = default;
  TemporalModel(double rate_, double offset_, std::vector<double> grid);

  double increment_variance(double s) const { return rate * (s + offset); }
};

/// Regular grid t_k = k / n_frames, k = 1..n_frames.
std::vector<double> regular_time_grid(int n_frames);

/// theta(x) and its gradient for one state. Gradients come from the analytic
/// Nystrom-extension derivatives.
void theta_eval(const KLBasis& basis, const ThetaState& state, const Vec2& x,
                double& theta, Vec2& grad);

ThetaState sample_initial(const TemporalModel& model, const KLBasis& basis, Rng& rng);

/// i.i.d. N(0, rate*(s+offset)) coefficient increments. Throws if s <= 0.
Eigen::VectorXd sample_increment(const TemporalModel& model, int n_coeffs, double s, Rng& rng);

/// Log-density of an increment vector, normalising constant included. In the
/// scaled-coefficient representation the Cameron-Martin norm is the plain
/// Euclidean norm of the coefficient increment.
double increment_logdensity(const TemporalModel& model, const Eigen::VectorXd& delta, double s);

/// Basis evaluations frozen at a fixed point set: theta = E * coeffs,
/// grad via Gx, Gy. E columns already carry the sqrt(eigenvalue) scaling.
struct BasisTable {
  Eigen::MatrixXd E, Gx, Gy;  // n_points x n_modes

  BasisTable() = default;
  BasisTable(const KLBasis& basis, const std::vector<Vec2>& points);

  Eigen::VectorXd theta(const Eigen::VectorXd& coeffs) const { return E * coeffs; }
  Eigen::VectorXd dtheta_dx(const Eigen::VectorXd& coeffs) const { return Gx * coeffs; }
  Eigen::VectorXd dtheta_dy(const Eigen::VectorXd& coeffs) const { return Gy * coeffs; }
};

}  // namespace eitpn

#endif
