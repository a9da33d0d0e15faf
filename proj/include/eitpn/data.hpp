#ifndef EITPN_DATA_HPP
#define EITPN_DATA_HPP

#include <optional>
#include <string>
#include <vector>

#include "eitpn/likelihood.hpp"

namespace eitpn {

/// Synthetic ground-truth log-conductivity: zero (tap-water baseline) before
/// the injection frame; afterwards a Gaussian blob that orbits the origin and
/// diffuses, its amplitude decaying so the field tends to spatially uniform.
///
/// The blob centre angle at time t is
///   initial_angle - angular_velocity * (t - t_injection),
/// so a negative angular_velocity rotates counter-clockwise.
struct SyntheticTruth {
  double amplitude = 2.0;          // log-conductivity peak at injection
  double width = 0.18;             // initial blob std (length units)
  double orbit_radius = 0.5;       // distance of blob centre from origin
  double initial_angle = 0.0;      // radians
  double angular_velocity = -6.0;  // rad per unit time; negative = counter-clockwise
  double diffusion_rate = 0.35;    // width growth per unit time
  int injection_frame = 10;        // last baseline frame (1-based)
};

double synthetic_truth_eval(const SyntheticTruth& truth, const Vec2& x, double t,
                            const std::vector<double>& time_grid);

/// Conductivity evaluator a = exp(theta), grad a = a grad theta at time t.
FieldFn synthetic_truth_field(const SyntheticTruth& truth, double t,
                              const std::vector<double>& time_grid);

struct Dataset {
  std::vector<Frame> frames;
  int m = 0;  // electrode count
  int J = 0;  // patterns per frame
  double sigma = 0.0;
  std::vector<double> time_grid;
  std::optional<SyntheticTruth> truth;  // provenance when synthetic

  int n_measurements() const {
    return static_cast<int>(frames.size()) * J * (m - 1);
  }
};

/// Simulate a full experiment: per frame and pattern, differenced reference
/// voltages plus i.i.d. N(0, sigma^2) noise. Frames use deterministic
/// per-frame RNG streams.
Dataset simulate_dataset(const SyntheticTruth& truth, const Protocol& protocol,
                         const Electrodes& electrodes, const CollocationDesign& dense_design,
                         const SEKernel& kernel, const std::vector<double>& time_grid,
                         std::uint64_t seed);

void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

}  // namespace eitpn

#endif
