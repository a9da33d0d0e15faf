#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "eitpn/data.hpp"
#include "eitpn/prior.hpp"

using namespace eitpn;

namespace {

std::string temp_path(const std::string& stem) {
  return std::string("/tmp/eitpn_data_") + stem + ".csv";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("synthetic truth: baseline, decay and rotation") {
  SyntheticTruth truth;
  truth.injection_frame = 10;
  std::vector<double> grid = regular_time_grid(49);
  double t_inj = grid[truth.injection_frame - 1];

  SUBCASE("zero before and at the injection frame") {
    for (int k = 1; k <= truth.injection_frame; ++k)
      CHECK(synthetic_truth_eval(truth, Vec2(0.3, -0.2), grid[k - 1], grid) == 0.0);
    // ... and the field function is unit conductivity there.
    auto [a, ga] = synthetic_truth_field(truth, t_inj, grid)(Vec2(0.5, 0.1));
    CHECK(a == 1.0);
    CHECK(ga.norm() == 0.0);
  }

  SUBCASE("blob centre follows the orbit and the peak decays") {
    double dt = 0.25;
    double angle = truth.initial_angle - truth.angular_velocity * dt;
    Vec2 centre = truth.orbit_radius * Vec2(std::cos(angle), std::sin(angle));
    double w = truth.width + truth.diffusion_rate * dt;
    double peak = truth.amplitude * (truth.width / w) * (truth.width / w);
    CHECK(synthetic_truth_eval(truth, centre, t_inj + dt, grid) == doctest::Approx(peak));
    // Off-centre values follow the Gaussian profile.
    Vec2 off = centre + Vec2(w, 0.0);
    CHECK(synthetic_truth_eval(truth, off, t_inj + dt, grid) ==
          doctest::Approx(peak * std::exp(-0.5)));
    // The peak decays monotonically after injection.
    double prev = truth.amplitude;
    for (double d : {0.1, 0.3, 0.6, 1.0}) {
      double ang = truth.initial_angle - truth.angular_velocity * d;
      Vec2 c = truth.orbit_radius * Vec2(std::cos(ang), std::sin(ang));
      double v = synthetic_truth_eval(truth, c, t_inj + d, grid);
      CHECK(v < prev);
      prev = v;
    }
  }

  SUBCASE("field function matches eval and its finite-difference gradient") {
    double t = t_inj + 0.3;
    FieldFn f = synthetic_truth_field(truth, t, grid);
    for (Vec2 x : {Vec2(0.2, 0.4), Vec2(-0.5, 0.1), Vec2(0.0, -0.3)}) {
      auto [a, ga] = f(x);
      double theta = synthetic_truth_eval(truth, x, t, grid);
      CHECK(a == doctest::Approx(std::exp(theta)).epsilon(1e-12));
      double h = 1e-6;
      for (int d = 0; d < 2; ++d) {
        Vec2 xp = x, xm = x;
        xp[d] += h;
        xm[d] -= h;
        double fd = (std::exp(synthetic_truth_eval(truth, xp, t, grid)) -
                     std::exp(synthetic_truth_eval(truth, xm, t, grid))) /
                    (2.0 * h);
        CHECK(ga[d] == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }

  SUBCASE("injection frame must lie on the time grid") {
    SyntheticTruth bad = truth;
    bad.injection_frame = 100;
    CHECK_THROWS_AS(synthetic_truth_eval(bad, Vec2(0, 0), 0.5, grid), std::invalid_argument);
    bad.injection_frame = 0;
    CHECK_THROWS_AS(synthetic_truth_eval(bad, Vec2(0, 0), 0.5, grid), std::invalid_argument);
  }
}

TEST_CASE("dataset bookkeeping") {
  Dataset ds;
  ds.m = 8;
  ds.J = 7;
  ds.frames.resize(49);
  CHECK(ds.n_measurements() == 2401);
}

TEST_CASE("simulated datasets: determinism and noise calibration") {
  Electrodes electrodes = build_electrodes(8, 0.0667, 8);
  SEKernel kernel(100.0, 0.211);
  CollocationDesign dense = concentric_design_total(1000, &electrodes);
  std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  SyntheticTruth truth;
  truth.injection_frame = 2;

  SUBCASE("dense design size is validated") {
    Protocol p = reference_protocol(8, 1.0);
    CollocationDesign coarse = concentric_design(0, &electrodes);
    CHECK_THROWS_AS(simulate_dataset(truth, p, electrodes, coarse, kernel, grid, 1),
                    std::invalid_argument);
  }

  SUBCASE("simulation is reproducible and noise has the stated scale") {
    // The protocol requires sigma > 0; a negligible value stands in for a
    // noise-free reference.
    Protocol clean = reference_protocol(8, 1e-12);
    Dataset d0 = simulate_dataset(truth, clean, electrodes, dense, kernel, grid, 7);
    Dataset d0b = simulate_dataset(truth, clean, electrodes, dense, kernel, grid, 99);
    REQUIRE(d0.frames.size() == grid.size());
    CHECK(d0.n_measurements() == 6 * 7 * 7);
    // Negligible noise: the seed is (numerically) irrelevant.
    for (size_t k = 0; k < d0.frames.size(); ++k)
      CHECK((d0.frames[k].voltages - d0b.frames[k].voltages).cwiseAbs().maxCoeff() < 1e-10);
    // Baseline frames (before injection) all see the same unit conductivity.
    CHECK((d0.frames[0].voltages - d0.frames[1].voltages).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((d0.frames[2].voltages - d0.frames[1].voltages).cwiseAbs().maxCoeff() > 1e-4);

    double sigma = 0.05;
    Protocol noisy = reference_protocol(8, sigma);
    Dataset d1 = simulate_dataset(truth, noisy, electrodes, dense, kernel, grid, 7);
    Dataset d1b = simulate_dataset(truth, noisy, electrodes, dense, kernel, grid, 7);
    Dataset d2 = simulate_dataset(truth, noisy, electrodes, dense, kernel, grid, 8);
    double ss = 0.0;
    int n = 0;
    bool seeds_differ = false;
    for (size_t k = 0; k < d1.frames.size(); ++k) {
      CHECK((d1.frames[k].voltages - d1b.frames[k].voltages).cwiseAbs().maxCoeff() == 0.0);
      Eigen::MatrixXd resid = d1.frames[k].voltages - d0.frames[k].voltages;
      ss += resid.squaredNorm();
      n += static_cast<int>(resid.size());
      if ((d2.frames[k].voltages - d1.frames[k].voltages).cwiseAbs().maxCoeff() > 0.0)
        seeds_differ = true;
    }
    CHECK(seeds_differ);
    double sd = std::sqrt(ss / n);
    CHECK(sd == doctest::Approx(sigma).epsilon(0.15));

    SUBCASE("CSV round-trip preserves every field") {
      std::string path = temp_path("roundtrip");
      write_dataset(d1, path);
      Dataset r = read_dataset(path);
      CHECK(r.m == d1.m);
      CHECK(r.J == d1.J);
      CHECK(r.sigma == d1.sigma);
      REQUIRE(r.time_grid.size() == d1.time_grid.size());
      for (size_t k = 0; k < grid.size(); ++k)
        CHECK(r.time_grid[k] == d1.time_grid[k]);
      REQUIRE(r.frames.size() == d1.frames.size());
      for (size_t k = 0; k < r.frames.size(); ++k) {
        CHECK(r.frames[k].index == d1.frames[k].index);
        CHECK((r.frames[k].voltages - d1.frames[k].voltages).cwiseAbs().maxCoeff() == 0.0);
      }
      REQUIRE(r.truth.has_value());
      CHECK(r.truth->amplitude == truth.amplitude);
      CHECK(r.truth->orbit_radius == truth.orbit_radius);
      CHECK(r.truth->injection_frame == truth.injection_frame);
      std::remove(path.c_str());
    }
  }
}

TEST_CASE("dataset reader rejects malformed files") {
  const std::string header =
      "# m=2\n# J=1\n# frames=1\n# sigma=0\n# times=1\nframe,pattern,electrode,voltage\n";

  SUBCASE("valid minimal file parses") {
    std::string path = temp_path("minimal");
    write_text(path, header + "1,1,2,0.5\n");
    Dataset ds = read_dataset(path);
    CHECK(ds.frames.at(0).voltages(0, 0) == 0.5);
    CHECK(!ds.truth.has_value());
    std::remove(path.c_str());
  }

  auto expect_error = [](const std::string& stem, const std::string& text,
                         const std::string& needle) {
    std::string path = temp_path(stem);
    write_text(path, text);
    bool threw = false;
    try {
      read_dataset(path);
    } catch (const std::runtime_error& e) {
      threw = true;
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
    CHECK(threw);
    std::remove(path.c_str());
  };

  SUBCASE("errors carry the offending line number") {
    expect_error("badrow", header + "1,1,2\n", "line 7");
    expect_error("nonnum", header + "1,1,2,abc\n", "line 7");
    expect_error("range", header + "1,1,9,0.5\n", "electrode index out of range");
    expect_error("frame_range", header + "2,1,2,0.5\n", "frame index out of range");
    expect_error("noheader", "# m=2\n1,1,2,0.5\n", "missing column header");
    expect_error("badmeta", "# hello\n", "malformed header");
    expect_error("nocols",
                 "# m=2\n# J=1\n# frames=1\n# sigma=0\n# times=1\nvolt,age\n1,1,2,0.5\n",
                 "missing column header");
  }

  SUBCASE("incomplete datasets are rejected") {
    expect_error("missing", header, "missing measurements");
    expect_error("times",
                 "# m=2\n# J=1\n# frames=2\n# sigma=0\n# times=1\n"
                 "frame,pattern,electrode,voltage\n1,1,2,0.5\n2,1,2,0.5\n",
                 "time grid length");
    expect_error("nofile_section", "# m=2\n# J=1\n", "no data section");
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_dataset("/tmp/eitpn_no_such_file.csv"), std::runtime_error);
  }
}
