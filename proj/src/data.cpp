#include "eitpn/data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eitpn {

namespace {

double injection_time(const SyntheticTruth& truth, const std::vector<double>& grid) {
  if (truth.injection_frame < 1 || truth.injection_frame > static_cast<int>(grid.size()))
    throw std::invalid_argument("SyntheticTruth: injection frame outside the time grid");
  return grid[truth.injection_frame - 1];
}

}  // namespace

double synthetic_truth_eval(const SyntheticTruth& truth, const Vec2& x, double t,
                            const std::vector<double>& time_grid) {
  double t_inj = injection_time(truth, time_grid);
  if (t <= t_inj) return 0.0;
  double dt = t - t_inj;
  double w = truth.width + truth.diffusion_rate * dt;
  double amp = truth.amplitude * (truth.width / w) * (truth.width / w);
  double angle = truth.initial_angle - truth.angular_velocity * dt;
  Vec2 centre = truth.orbit_radius * Vec2{std::cos(angle), std::sin(angle)};
  return amp * std::exp(-(x - centre).squaredNorm() / (2.0 * w * w));
}

FieldFn synthetic_truth_field(const SyntheticTruth& truth, double t,
                              const std::vector<double>& time_grid) {
  double t_inj = injection_time(truth, time_grid);
  return [truth, t, t_inj](const Vec2& x) -> std::pair<double, Vec2> {
    if (t <= t_inj) return {1.0, Vec2::Zero()};
    double dt = t - t_inj;
    double w = truth.width + truth.diffusion_rate * dt;
    double amp = truth.amplitude * (truth.width / w) * (truth.width / w);
    double angle = truth.initial_angle - truth.angular_velocity * dt;
    Vec2 centre = truth.orbit_radius * Vec2{std::cos(angle), std::sin(angle)};
    double theta = amp * std::exp(-(x - centre).squaredNorm() / (2.0 * w * w));
    Vec2 grad_theta = -theta / (w * w) * (x - centre);
    double a = std::exp(theta);
    return {a, a * grad_theta};
  };
}

Dataset simulate_dataset(const SyntheticTruth& truth, const Protocol& protocol,
                         const Electrodes& electrodes, const CollocationDesign& dense_design,
                         const SEKernel& kernel, const std::vector<double>& time_grid,
                         std::uint64_t seed) {
  if (dense_design.total() < 1000)
    throw std::invalid_argument("simulate_dataset: dense design needs >= 1000 points");

  Dataset ds;
  ds.m = protocol.n_electrodes();
  ds.J = protocol.n_patterns();
  ds.sigma = protocol.sigma;
  ds.time_grid = time_grid;
  ds.truth = truth;

  DesignTables tables(dense_design, electrodes, kernel);
  const Eigen::MatrixXd& D = protocol.difference_map;

  for (int k = 1; k <= static_cast<int>(time_grid.size()); ++k) {
    FieldFn field = synthetic_truth_field(truth, time_grid[k - 1], time_grid);
    OperatorSystem sys = assemble(tables, sample_field(tables, field));
    PmmFactor factor(sys);

    Frame frame;
    frame.index = k;
    frame.voltages.resize(ds.J, ds.m - 1);
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(k), 0xda7a);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = 0; j < ds.J; ++j) {
      Eigen::VectorXd v = D * factor.mean(protocol.patterns[j]);
      for (int i = 0; i < ds.m - 1; ++i)
        frame.voltages(j, i) = v(i) + ds.sigma * normal(rng);
    }
    ds.frames.push_back(std::move(frame));
  }
  return ds;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  out.precision(17);
  out << "# m=" << dataset.m << "\n"
      << "# J=" << dataset.J << "\n"
      << "# frames=" << dataset.frames.size() << "\n"
      << "# sigma=" << dataset.sigma << "\n";
  out << "# times=";
  for (size_t k = 0; k < dataset.time_grid.size(); ++k)
    out << (k ? "," : "") << dataset.time_grid[k];
  out << "\n";
  if (dataset.truth) {
    const auto& t = *dataset.truth;
    out << "# truth=" << t.amplitude << "," << t.width << "," << t.orbit_radius << ","
        << t.initial_angle << "," << t.angular_velocity << "," << t.diffusion_rate << ","
        << t.injection_frame << "\n";
  }
  out << "frame,pattern,electrode,voltage\n";
  for (const auto& frame : dataset.frames)
    for (int j = 0; j < dataset.J; ++j)
      for (int i = 0; i < dataset.m - 1; ++i)
        out << frame.index << "," << (j + 1) << "," << (i + 2) << ","
            << frame.voltages(j, i) << "\n";
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
  Dataset ds;
  int n_frames = -1;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("read_dataset: " + msg + " at line " + std::to_string(line_no));
  };

  bool header_done = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) fail("malformed header");
      std::string key = line.substr(2, eq - 2);
      std::string val = line.substr(eq + 1);
      if (key == "m") ds.m = std::stoi(val);
      else if (key == "J") ds.J = std::stoi(val);
      else if (key == "frames") n_frames = std::stoi(val);
      else if (key == "sigma") ds.sigma = std::stod(val);
      else if (key == "times") {
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ',')) ds.time_grid.push_back(std::stod(tok));
      } else if (key == "truth") {
        std::stringstream ss(val);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() != 7) fail("truth header needs 7 fields");
        SyntheticTruth t;
        t.amplitude = vals[0];
        t.width = vals[1];
        t.orbit_radius = vals[2];
        t.initial_angle = vals[3];
        t.angular_velocity = vals[4];
        t.diffusion_rate = vals[5];
        t.injection_frame = static_cast<int>(vals[6]);
        ds.truth = t;
      }
      continue;
    }
    if (!header_done) {
      if (line != "frame,pattern,electrode,voltage") fail("missing column header");
      if (ds.m < 2 || ds.J < 1 || n_frames < 1) fail("incomplete metadata before data rows");
      ds.frames.resize(n_frames);
      for (int k = 0; k < n_frames; ++k) {
        ds.frames[k].index = k + 1;
        ds.frames[k].voltages.setConstant(ds.J, ds.m - 1,
                                          std::numeric_limits<double>::quiet_NaN());
      }
      header_done = true;
      continue;
    }
    std::stringstream ss(line);
    std::string fs, ps, es, vs;
    if (!std::getline(ss, fs, ',') || !std::getline(ss, ps, ',') ||
        !std::getline(ss, es, ',') || !std::getline(ss, vs, ','))
      fail("malformed data row");
    int frame, pattern, electrode;
    double voltage;
    try {
      frame = std::stoi(fs);
      pattern = std::stoi(ps);
      electrode = std::stoi(es);
      voltage = std::stod(vs);
    } catch (const std::exception&) {
      fail("non-numeric data row");
      return ds;  // unreachable
    }
    if (frame < 1 || frame > n_frames) fail("frame index out of range");
    if (pattern < 1 || pattern > ds.J) fail("pattern index out of range");
    if (electrode < 2 || electrode > ds.m) fail("electrode index out of range");
    ds.frames[frame - 1].voltages(pattern - 1, electrode - 2) = voltage;
  }
  if (!header_done) throw std::runtime_error("read_dataset: no data section in " + path);
  for (const auto& frame : ds.frames)
    if (frame.voltages.hasNaN())
      throw std::runtime_error("read_dataset: frame " + std::to_string(frame.index) +
                               " is missing measurements");
  if (static_cast<int>(ds.time_grid.size()) != n_frames)
    throw std::runtime_error("read_dataset: time grid length does not match frame count");
  return ds;
}

}  // namespace eitpn
