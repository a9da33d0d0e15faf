#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eitpn/likelihood.hpp"
#include "eitpn/prior.hpp"

using namespace eitpn;

namespace {

// Random mean / PSD covariance in m dimensions.
void random_gaussian(int m, Rng& rng, Eigen::VectorXd& mu, Eigen::MatrixXd& cov, double scale) {
  std::normal_distribution<double> gauss;
  mu = Eigen::VectorXd::NullaryExpr(m, [&](int) { return gauss(rng); });
  Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(m, m, [&](int, int) { return gauss(rng); });
  cov = scale * (A * A.transpose()) / m;
}

}  // namespace

TEST_CASE("reference protocol layout") {
  Protocol p = reference_protocol(8, 1.0);
  REQUIRE(p.n_patterns() == 7);
  REQUIRE(p.n_electrodes() == 8);
  CHECK(p.sigma == 1.0);
  // 7 patterns x 7 differenced voltages = 49 measurements per frame.
  CHECK(p.n_patterns() * (p.n_electrodes() - 1) == 49);
  for (int j = 0; j < 7; ++j) {
    const Eigen::VectorXd& I = p.patterns[j].currents;
    REQUIRE(I.size() == 8);
    CHECK(std::abs(I.sum()) < 1e-12);
    CHECK(I[0] == doctest::Approx(-1.0));
    CHECK(I[j + 1] == doctest::Approx(1.0));
  }
  // Difference map: row i sends u to u_{i+2} - u_1; kills constants.
  REQUIRE(p.difference_map.rows() == 7);
  REQUIRE(p.difference_map.cols() == 8);
  for (int i = 0; i < 7; ++i) {
    CHECK(p.difference_map(i, 0) == -1.0);
    CHECK(p.difference_map(i, i + 1) == 1.0);
    CHECK(p.difference_map.row(i).sum() == 0.0);
  }
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
  CHECK((p.difference_map * ones).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(reference_protocol(1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(reference_protocol(8, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian_logpdf matches the direct formula") {
  Rng rng = make_stream(3, 0);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 5; ++t) {
    int n = 4;
    Eigen::VectorXd mu, y;
    Eigen::MatrixXd cov;
    random_gaussian(n, rng, mu, cov, 1.0);
    cov.diagonal().array() += 0.5;
    y = Eigen::VectorXd::NullaryExpr(n, [&](int) { return gauss(rng); });
    Eigen::MatrixXd inv = cov.inverse();
    double direct = -0.5 * (n * std::log(2.0 * M_PI) + std::log(cov.determinant()) +
                            (y - mu).dot(inv * (y - mu)));
    CHECK(gaussian_logpdf(y, mu, cov) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("marginal likelihood over patterns") {
  int m = 8;
  Protocol protocol = reference_protocol(m, 1.0);
  int J = protocol.n_patterns();
  Rng rng = make_stream(9, 0);

  std::vector<PMMResult> results(J);
  for (int j = 0; j < J; ++j) {
    random_gaussian(m, rng, results[j].mean, results[j].cov, 0.3);
  }
  Frame frame;
  frame.index = 1;
  frame.voltages.resize(J, m - 1);
  std::normal_distribution<double> gauss;
  for (int j = 0; j < J; ++j)
    frame.voltages.row(j) =
        (protocol.difference_map * results[j].mean).transpose() +
        Eigen::RowVectorXd::NullaryExpr(m - 1, [&](int) { return gauss(rng); });

  SUBCASE("zero posterior covariance collapses pn onto non-pn") {
    std::vector<PMMResult> exact = results;
    for (auto& r : exact) r.cov.setZero();
    double a = marginal_loglik(frame, exact, protocol, true);
    double b = marginal_loglik(frame, exact, protocol, false);
    CHECK(a == doctest::Approx(b).epsilon(1e-13));
  }

  SUBCASE("the projected mean is the mode in y") {
    Frame at_mode = frame;
    for (int j = 0; j < J; ++j)
      at_mode.voltages.row(j) = (protocol.difference_map * results[j].mean).transpose();
    double peak = marginal_loglik(at_mode, results, protocol, true);
    Rng prng = make_stream(10, 0);
    for (int t = 0; t < 10; ++t) {
      Frame perturbed = at_mode;
      perturbed.voltages(t % J, (t * 3) % (m - 1)) += 0.5 + 0.1 * t;
      CHECK(marginal_loglik(perturbed, results, protocol, true) < peak);
    }
    // Inflated covariance lowers the peak relative to the non-pn density.
    CHECK(peak < marginal_loglik(at_mode, results, protocol, false));
  }

  SUBCASE("gauge invariance: shifting all potentials changes nothing") {
    std::vector<PMMResult> shifted = results;
    for (auto& r : shifted) r.mean.array() += 3.7;
    double a = marginal_loglik(frame, results, protocol, true);
    double b = marginal_loglik(frame, shifted, protocol, true);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }

  SUBCASE("matches a Monte Carlo marginalisation oracle") {
    // One pattern: integral of N(y | D P, sigma^2 I) over P ~ N(mu, Sigma).
    Protocol p1 = protocol;
    p1.patterns.resize(1);
    std::vector<PMMResult> r1 = {results[0]};
    Frame f1;
    f1.index = 0;
    f1.voltages = frame.voltages.topRows(1);
    double closed = marginal_loglik(f1, r1, p1, true);

    Eigen::LLT<Eigen::MatrixXd> llt(r1[0].cov +
                                    1e-12 * Eigen::MatrixXd::Identity(m, m));
    Eigen::MatrixXd L = llt.matrixL();
    Rng orng = make_stream(11, 0);
    std::normal_distribution<double> g;
    int n_samples = 200000;
    double max_term = -1e300;
    std::vector<double> terms(n_samples);
    Eigen::VectorXd y = f1.voltages.row(0).transpose();
    for (int i = 0; i < n_samples; ++i) {
      Eigen::VectorXd z = Eigen::VectorXd::NullaryExpr(m, [&](int) { return g(orng); });
      Eigen::VectorXd P = r1[0].mean + L * z;
      Eigen::VectorXd resid = y - p1.difference_map * P;
      terms[i] = -0.5 * ((m - 1) * std::log(2.0 * M_PI) + resid.squaredNorm());
      max_term = std::max(max_term, terms[i]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    double mc = max_term + std::log(acc / n_samples);
    // Compare densities (not logs): within 2% for 2e5 samples.
    CHECK(std::abs(std::exp(closed - mc) - 1.0) < 0.02);
  }
}
