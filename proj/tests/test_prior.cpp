#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eitpn/prior.hpp"

using namespace eitpn;

namespace {
KLBasis test_basis() { return nystrom_eigs(SEKernel(1.0, 0.3), disc_lattice(14), 16); }
}  // namespace

TEST_CASE("rng streams are deterministic and id-sensitive") {
  Rng a = make_stream(42, 1, 2, 3);
  Rng b = make_stream(42, 1, 2, 3);
  CHECK(a() == b());
  CHECK(a() == b());
  for (auto ids : {std::array<std::uint64_t, 3>{2, 2, 3},
                   std::array<std::uint64_t, 3>{1, 3, 3},
                   std::array<std::uint64_t, 3>{1, 2, 4}}) {
    Rng c = make_stream(42, ids[0], ids[1], ids[2]);
    Rng d = make_stream(42, 1, 2, 3);
    CHECK(c() != d());
  }
  Rng e = make_stream(43, 1, 2, 3);
  Rng f = make_stream(42, 1, 2, 3);
  CHECK(e() != f());
}

TEST_CASE("temporal model validation") {
  std::vector<double> grid = regular_time_grid(49);
  REQUIRE(grid.size() == 49);
  CHECK(grid[0] == doctest::Approx(1.0 / 49));
  CHECK(grid[48] == doctest::Approx(1.0));
  CHECK_NOTHROW(TemporalModel(100.0, 0.0, grid));
  CHECK_THROWS_AS(TemporalModel(-1.0, 0.0, grid), std::invalid_argument);
  CHECK_THROWS_AS(TemporalModel(100.0, -0.1, grid), std::invalid_argument);
  CHECK_THROWS_AS(TemporalModel(100.0, 0.0, std::vector<double>{0.2, 0.1}), std::invalid_argument);
  // t1 + offset must be positive.
  CHECK_THROWS_AS(TemporalModel(100.0, 0.0, std::vector<double>{0.0, 0.1}), std::invalid_argument);
  TemporalModel m(100.0, 0.05, grid);
  CHECK(m.increment_variance(0.02) == doctest::Approx(100.0 * 0.07));
}

TEST_CASE("theta evaluation") {
  KLBasis basis = test_basis();
  int n = basis.n_modes();

  SUBCASE("zero coefficients give the unit conductivity") {
    ThetaState s{Eigen::VectorXd::Zero(n), 0.1};
    double th;
    Vec2 g;
    theta_eval(basis, s, Vec2(0.2, -0.3), th, g);
    CHECK(th == 0.0);
    CHECK(g.norm() == 0.0);
  }

  SUBCASE("one-hot coefficient picks out a scaled mode") {
    ThetaState s{Eigen::VectorXd::Zero(n), 0.0};
    s.coeffs[0] = 1.0;
    Vec2 x(0.4, 0.1);
    double th;
    Vec2 g;
    theta_eval(basis, s, x, th, g);
    double e1 = basis.extend({x})(0, 0);
    CHECK(th == doctest::Approx(std::sqrt(basis.eigenvalues[0]) * e1).epsilon(1e-12));
  }

  SUBCASE("gradient matches finite differences") {
    Rng rng = make_stream(5, 0);
    std::normal_distribution<double> gauss;
    ThetaState s{Eigen::VectorXd::NullaryExpr(n, [&](int) { return gauss(rng); }), 0.0};
    std::uniform_real_distribution<double> unif(-0.6, 0.6);
    double h = 1e-6;
    for (int t = 0; t < 20; ++t) {
      Vec2 x(unif(rng), unif(rng));
      double th;
      Vec2 g;
      theta_eval(basis, s, x, th, g);
      double tp, tm;
      Vec2 dummy;
      theta_eval(basis, s, x + Vec2(h, 0), tp, dummy);
      theta_eval(basis, s, x - Vec2(h, 0), tm, dummy);
      CHECK(g[0] == doctest::Approx((tp - tm) / (2 * h)).epsilon(1e-5));
      theta_eval(basis, s, x + Vec2(0, h), tp, dummy);
      theta_eval(basis, s, x - Vec2(0, h), tm, dummy);
      CHECK(g[1] == doctest::Approx((tp - tm) / (2 * h)).epsilon(1e-5));
    }
  }

  SUBCASE("linear in coefficients") {
    Rng rng = make_stream(6, 0);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd c1 = Eigen::VectorXd::NullaryExpr(n, [&](int) { return gauss(rng); });
    Eigen::VectorXd c2 = Eigen::VectorXd::NullaryExpr(n, [&](int) { return gauss(rng); });
    Vec2 x(0.3, 0.3);
    double t1, t2, t12;
    Vec2 g;
    theta_eval(basis, {c1, 0.0}, x, t1, g);
    theta_eval(basis, {c2, 0.0}, x, t2, g);
    theta_eval(basis, {c1 + c2, 0.0}, x, t12, g);
    CHECK(t12 == doctest::Approx(t1 + t2).epsilon(1e-12));
  }
}

TEST_CASE("initial state sampling") {
  KLBasis basis = test_basis();
  std::vector<double> grid = regular_time_grid(49);
  TemporalModel model(100.0, 0.0, grid);
  Rng rng = make_stream(17, 0);

  // Coefficient variance lambda * t1 = 100/49 = 2.041.
  int draws = 100000 / basis.n_modes() + 1;
  double ss = 0.0;
  long count = 0;
  double t_check = -1.0;
  for (int i = 0; i < draws; ++i) {
    ThetaState s = sample_initial(model, basis, rng);
    t_check = s.time;
    ss += s.coeffs.squaredNorm();
    count += s.coeffs.size();
  }
  double var = ss / count;
  CHECK(t_check == doctest::Approx(1.0 / 49));
  CHECK(var == doctest::Approx(100.0 / 49).epsilon(0.03));

  // Tiny rate collapses the prior.
  TemporalModel small(1e-12, 0.0, grid);
  ThetaState s = sample_initial(small, basis, rng);
  CHECK(s.coeffs.cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("initial theta covariance matches the kernel reconstruction") {
  KLBasis basis = test_basis();
  TemporalModel model(100.0, 0.0, regular_time_grid(49));
  std::vector<Vec2> pts = {{0.0, 0.0}, {0.3, 0.1}, {-0.4, 0.2}, {0.1, -0.5}, {0.6, 0.3}};
  Eigen::MatrixXd E = basis.extend(pts);
  int np = static_cast<int>(pts.size());

  // Monte Carlo covariance of theta at the probe points.
  Rng rng = make_stream(23, 0);
  int draws = 200000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(np, np);
  Eigen::VectorXd sq = basis.eigenvalues.cwiseSqrt();
  for (int i = 0; i < draws; ++i) {
    ThetaState s = sample_initial(model, basis, rng);
    Eigen::VectorXd th = E * sq.cwiseProduct(s.coeffs);
    acc += th * th.transpose();
  }
  acc /= draws;

  // Expected: lambda*t1 times the truncated kernel reconstruction.
  Eigen::MatrixXd R(np, np);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j) {
      double s = 0.0;
      for (int q = 0; q < basis.n_modes(); ++q)
        s += basis.eigenvalues[q] * E(i, q) * E(j, q);
      R(i, j) = (100.0 / 49) * s;
    }
  CHECK((acc - R).norm() / R.norm() < 0.02);
}

TEST_CASE("increment sampling") {
  TemporalModel model(100.0, 0.0, regular_time_grid(49));
  Rng rng = make_stream(31, 0);
  CHECK_THROWS_AS(sample_increment(model, 4, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_increment(model, 4, -0.1, rng), std::invalid_argument);

  // Sample variance tracks the closed form lambda*(s+tau).
  {
    double s = 1.0 / 49;
    long total = 100000;
    int dim = 8;
    double ss = 0.0;
    for (long i = 0; i < total / dim; ++i) ss += sample_increment(model, dim, s, rng).squaredNorm();
    double var = ss / ((total / dim) * dim);
    CHECK(var == doctest::Approx(model.increment_variance(s)).epsilon(0.03));
  }

  // Disjoint-interval increments are uncorrelated.
  {
    double s = 0.02;
    int n = 50000;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
      double a = sample_increment(model, 1, s, rng)[0];
      double b = sample_increment(model, 1, s, rng)[0];
      sxy += a * b;
      sxx += a * a;
      syy += b * b;
    }
    double rho = sxy / std::sqrt(sxx * syy);
    CHECK(std::abs(rho) < 0.02);
  }

  // Markov composition: var of the sum of two increments is lambda*(s+s').
  {
    double s1 = 0.01, s2 = 0.03;
    long n = 100000;
    double ss = 0.0;
    for (long i = 0; i < n; ++i) {
      double d = sample_increment(model, 1, s1, rng)[0] + sample_increment(model, 1, s2, rng)[0];
      ss += d * d;
    }
    CHECK(ss / n == doctest::Approx(100.0 * (s1 + s2)).epsilon(0.03));
  }
}

TEST_CASE("increment log-density") {
  TemporalModel model(100.0, 0.0, regular_time_grid(49));
  double s = 0.05;
  double v = model.increment_variance(s);
  int n = 6;

  SUBCASE("maximum at zero with the closed-form constant") {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    double at0 = increment_logdensity(model, zero, s);
    CHECK(at0 == doctest::Approx(-(n / 2.0) * std::log(2.0 * M_PI * v)).epsilon(1e-12));
    Rng rng = make_stream(37, 0);
    for (int t = 0; t < 10; ++t) {
      Eigen::VectorXd d = sample_increment(model, n, s, rng);
      CHECK(increment_logdensity(model, d, s) < at0);
    }
  }

  SUBCASE("matches a direct multivariate-normal oracle") {
    Rng rng = make_stream(41, 0);
    Eigen::MatrixXd cov = v * Eigen::MatrixXd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    for (int t = 0; t < 10; ++t) {
      Eigen::VectorXd d = sample_increment(model, n, s, rng);
      double quad = d.dot(llt.solve(d));
      double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
      double oracle = -0.5 * (n * std::log(2.0 * M_PI) + logdet + quad);
      CHECK(increment_logdensity(model, d, s) == doctest::Approx(oracle).epsilon(1e-10));
    }
  }

  SUBCASE("density ratios are Gaussian") {
    Eigen::VectorXd d1 = Eigen::VectorXd::Constant(n, 0.7);
    Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, -0.2);
    double lr = increment_logdensity(model, d1, s) - increment_logdensity(model, d2, s);
    CHECK(lr == doctest::Approx(-(d1.squaredNorm() - d2.squaredNorm()) / (2.0 * v)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(increment_logdensity(model, Eigen::VectorXd::Zero(n), 0.0),
                  std::invalid_argument);
}

TEST_CASE("basis tables agree with direct evaluation") {
  KLBasis basis = test_basis();
  std::vector<Vec2> pts = {{0.1, 0.2}, {-0.3, 0.4}, {0.0, -0.6}};
  BasisTable table(basis, pts);
  Rng rng = make_stream(43, 0);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd c =
      Eigen::VectorXd::NullaryExpr(basis.n_modes(), [&](int) { return gauss(rng); });
  Eigen::VectorXd th = table.theta(c);
  Eigen::VectorXd tx = table.dtheta_dx(c);
  Eigen::VectorXd ty = table.dtheta_dy(c);
  for (size_t i = 0; i < pts.size(); ++i) {
    double t;
    Vec2 g;
    theta_eval(basis, {c, 0.0}, pts[i], t, g);
    CHECK(th[i] == doctest::Approx(t).epsilon(1e-12));
    CHECK(tx[i] == doctest::Approx(g[0]).epsilon(1e-12));
    CHECK(ty[i] == doctest::Approx(g[1]).epsilon(1e-12));
  }
}
