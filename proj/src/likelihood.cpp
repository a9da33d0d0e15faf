#include "eitpn/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace eitpn {

Protocol reference_protocol(int m, double sigma) {
  if (m < 2) throw std::invalid_argument("reference_protocol: need m >= 2");
  if (sigma <= 0.0) throw std::invalid_argument("reference_protocol: sigma must be > 0");
  Protocol p;
  p.sigma = sigma;
  p.patterns.resize(m - 1);
  for (int j = 0; j < m - 1; ++j) {
    Eigen::VectorXd currents = Eigen::VectorXd::Zero(m);
    currents(j + 1) = 1.0;
    currents(0) = -1.0;  // electrode 1 is the reference
    p.patterns[j].currents = currents;
  }
  p.difference_map = Eigen::MatrixXd::Zero(m - 1, m);
  for (int i = 0; i < m - 1; ++i) {
    p.difference_map(i, i + 1) = 1.0;
    p.difference_map(i, 0) = -1.0;
  }
  return p;
}

double gaussian_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                       const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gaussian_logpdf: covariance not positive definite");
  Eigen::VectorXd r = y - mean;
  Eigen::VectorXd z = llt.matrixL().solve(r);
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double n = static_cast<double>(y.size());
  return -0.5 * (z.squaredNorm() + logdet + n * std::log(2.0 * std::numbers::pi));
}

double marginal_loglik(const Frame& frame, const std::vector<PMMResult>& results,
                       const Protocol& protocol, bool pn) {
  const int J = protocol.n_patterns();
  const int m = protocol.n_electrodes();
  if (static_cast<int>(results.size()) != J)
    throw std::invalid_argument("marginal_loglik: one PMM result per pattern required");
  if (frame.voltages.rows() != J || frame.voltages.cols() != m - 1)
    throw std::invalid_argument("marginal_loglik: frame has wrong shape");

  const Eigen::MatrixXd& D = protocol.difference_map;
  double total = 0.0;
  for (int j = 0; j < J; ++j) {
    Eigen::VectorXd mean = D * results[j].mean;
    Eigen::MatrixXd cov =
        protocol.sigma * protocol.sigma * Eigen::MatrixXd::Identity(m - 1, m - 1);
    if (pn) cov += D * results[j].cov * D.transpose();
    total += gaussian_logpdf(frame.voltages.row(j).transpose(), mean, cov);
  }
  return total;
}

}  // namespace eitpn
