#ifndef EITPN_LIKELIHOOD_HPP
#define EITPN_LIKELIHOOD_HPP

#include <vector>

#include "eitpn/forward.hpp"

namespace eitpn {

/// Reference measurement protocol: J = m-1 drive patterns between electrode 1
/// and each other electrode, voltages reported relative to electrode 1.
struct Protocol {
  std::vector<StimulationPattern> patterns;  // size J
  Eigen::MatrixXd difference_map;            // (m-1) x m, u -> (u_2-u_1, ..., u_m-u_1)
  double sigma = 1.0;                        // measurement noise std

  int n_patterns() const { return static_cast<int>(patterns.size()); }
  int n_electrodes() const { return static_cast<int>(difference_map.cols()); }
};

/// One time frame of voltage data: row j holds the m-1 differenced voltages
/// under pattern j.
struct Frame {
  int index = 0;
  Eigen::MatrixXd voltages;  // J x (m-1)
};

Protocol reference_protocol(int m, double sigma);

/// Log-likelihood of a frame given the PMM posteriors for each pattern.
/// With pn = true the covariance is sigma^2 I + D Sigma_j D^T (discretisation
/// uncertainty marginalised out); with pn = false it is sigma^2 I.
double marginal_loglik(const Frame& frame, const std::vector<PMMResult>& results,
                       const Protocol& protocol, bool pn);

/// Gaussian log-density helper, N(y | mean, cov).
double gaussian_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                       const Eigen::MatrixXd& cov);

}  // namespace eitpn

#endif
