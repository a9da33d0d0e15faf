#include "eitpn/prior.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace eitpn {

Rng make_stream(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b,
                std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return Rng(seq);
}

TemporalModel::TemporalModel(double rate_, double offset_, std::vector<double> grid)
    : rate(rate_), offset(offset_), time_grid(std::move(grid)) {
  if (rate <= 0.0) throw std::invalid_argument("TemporalModel: rate must be > 0");
  if (offset < 0.0) throw std::invalid_argument("TemporalModel: offset must be >= 0");
  if (time_grid.empty()) throw std::invalid_argument("TemporalModel: empty time grid");
  if (time_grid.front() + offset <= 0.0)
    throw std::invalid_argument("TemporalModel: t_1 + offset must be > 0");
  for (size_t k = 1; k < time_grid.size(); ++k)
    if (time_grid[k] <= time_grid[k - 1])
      throw std::invalid_argument("TemporalModel: time grid must be strictly increasing");
}

std::vector<double> regular_time_grid(int n_frames) {
  std::vector<double> grid(n_frames);
  for (int k = 0; k < n_frames; ++k) grid[k] = static_cast<double>(k + 1) / n_frames;
  return grid;
}

void theta_eval(const KLBasis& basis, const ThetaState& state, const Vec2& x,
                double& theta, Vec2& grad) {
  Eigen::MatrixXd e = basis.extend({x});
  Eigen::MatrixXd gx, gy;
  basis.extend_grad({x}, gx, gy);
  Eigen::VectorXd scaled = basis.eigenvalues.cwiseSqrt().cwiseProduct(state.coeffs);
  theta = e.row(0).dot(scaled);
  grad = {gx.row(0).dot(scaled), gy.row(0).dot(scaled)};
}

ThetaState sample_initial(const TemporalModel& model, const KLBasis& basis, Rng& rng) {
  double t1 = model.time_grid.front();
  double sd = std::sqrt(model.increment_variance(t1));
  std::normal_distribution<double> normal(0.0, 1.0);
  ThetaState state;
  state.time = t1;
  state.coeffs.resize(basis.n_modes());
  for (int i = 0; i < basis.n_modes(); ++i) state.coeffs(i) = sd * normal(rng);
  return state;
}

Eigen::VectorXd sample_increment(const TemporalModel& model, int n_coeffs, double s, Rng& rng) {
  if (s <= 0.0) throw std::invalid_argument("sample_increment: span must be > 0");
  double sd = std::sqrt(model.increment_variance(s));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd delta(n_coeffs);
  for (int i = 0; i < n_coeffs; ++i) delta(i) = sd * normal(rng);
  return delta;
}

double increment_logdensity(const TemporalModel& model, const Eigen::VectorXd& delta, double s) {
  if (s <= 0.0) throw std::invalid_argument("increment_logdensity: span must be > 0");
  double var = model.increment_variance(s);
  double n = static_cast<double>(delta.size());
  return -0.5 * delta.squaredNorm() / var - 0.5 * n * std::log(2.0 * std::numbers::pi * var);
}

BasisTable::BasisTable(const KLBasis& basis, const std::vector<Vec2>& points) {
  Eigen::VectorXd scale = basis.eigenvalues.cwiseSqrt();
  E = basis.extend(points) * scale.asDiagonal();
  basis.extend_grad(points, Gx, Gy);
  Gx *= scale.asDiagonal();
  Gy *= scale.asDiagonal();
}

}  // namespace eitpn
