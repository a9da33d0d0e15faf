#include "eitpn/geometry.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace eitpn {

namespace {
constexpr double kPi = std::numbers::pi;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

Electrodes build_electrodes(int m, double half_width, int quad_nodes) {
  if (m < 2) throw std::invalid_argument("build_electrodes: need m >= 2");
  if (half_width <= 0.0 || half_width >= kPi / m)
    throw std::invalid_argument("build_electrodes: electrode arcs overlap (need 0 < half_width < pi/m)");
  if (quad_nodes < 1) throw std::invalid_argument("build_electrodes: quad_nodes >= 1");

  Electrodes e;
  e.count = m;
  e.half_width = half_width;
  e.quad_nodes_per_electrode = quad_nodes;
  e.center_angles.resize(m);
  for (int i = 0; i < m; ++i) e.center_angles[i] = 2.0 * kPi * i / m;

  std::vector<double> gl_nodes, gl_weights;
  gauss_legendre(quad_nodes, gl_nodes, gl_weights);

  // Arc integral: int f dsigma = hw * sum_q w_q f(angle_i + hw * xi_q), R = 1.
  e.quad_points.reserve(m * quad_nodes);
  e.quad_normals.reserve(m * quad_nodes);
  e.quad_weights.reserve(m * quad_nodes);
  for (int i = 0; i < m; ++i) {
    for (int q = 0; q < quad_nodes; ++q) {
      double phi = e.center_angles[i] + half_width * gl_nodes[q];
      Vec2 p{std::cos(phi), std::sin(phi)};
      e.quad_points.push_back(p);
      e.quad_normals.push_back(p);  // unit circle: outward normal = position
      e.quad_weights.push_back(half_width * gl_weights[q]);
    }
  }
  return e;
}

CollocationDesign concentric_design_total(int total, const Electrodes* avoid) {
  if (total < 12) throw std::invalid_argument("concentric_design_total: total too small");

  CollocationDesign d;
  int n_b = static_cast<int>(std::lround(0.22 * total));
  int n_a = total - n_b;

  // Boundary ring. The no-flux condition only holds off the electrodes, so
  // when the electrode layout is known the points are spread over the gaps
  // between arcs: a boundary point inside an arc would impose a contradictory
  // zero-flux datum. Each gap end is additionally padded by one electrode
  // half-width — the flux is singular at the arc edges, and no-flux data
  // placed close to a singularity degrade the smooth-kernel solve. Without a
  // layout, use a half-step angular offset.
  auto push_boundary = [&d](double phi) {
    Vec2 p{std::cos(phi), std::sin(phi)};
    d.boundary.push_back(p);
    d.boundary_normals.push_back(p);
  };
  if (avoid != nullptr) {
    int m = avoid->count;
    double gap = 2.0 * kPi / m - 2.0 * avoid->half_width;
    if (gap <= 0.0)
      throw std::invalid_argument("concentric_design_total: electrodes cover the boundary");
    double pad = std::min(avoid->half_width, 0.25 * gap);
    double eff = gap - 2.0 * pad;
    for (int k = 0; k < m; ++k) {
      int count = (n_b + m - 1 - k) / m;  // n_b points split evenly over the gaps
      for (int j = 0; j < count; ++j)
        push_boundary(avoid->center_angles[k] + avoid->half_width + pad +
                      (j + 0.5) / count * eff);
    }
  } else {
    for (int i = 0; i < n_b; ++i) push_boundary(2.0 * kPi * (i + 0.5) / n_b);
  }

  // Interior: centre point plus R concentric rings, counts ~ circumference.
  d.interior.push_back(Vec2::Zero());
  int remaining = n_a - 1;
  int rings = std::max(1, static_cast<int>(std::lround(std::sqrt(remaining / 3.0))));
  const double r_max = 0.93;
  std::vector<double> radii(rings);
  double radius_sum = 0.0;
  for (int j = 0; j < rings; ++j) {
    radii[j] = r_max * (j + 1) / rings;
    radius_sum += radii[j];
  }
  std::vector<int> counts(rings);
  int assigned = 0;
  for (int j = 0; j < rings; ++j) {
    counts[j] = std::max(1, static_cast<int>(std::lround(remaining * radii[j] / radius_sum)));
    assigned += counts[j];
  }
  counts[rings - 1] += remaining - assigned;  // absorb rounding on the outer ring
  for (int j = 0; j < rings; ++j) {
    double stagger = (j % 2 == 0) ? 0.0 : kPi / counts[j];
    for (int i = 0; i < counts[j]; ++i) {
      double phi = 2.0 * kPi * i / counts[j] + stagger;
      d.interior.push_back(radii[j] * Vec2{std::cos(phi), std::sin(phi)});
    }
  }

  if (d.total() != total)
    throw std::logic_error("concentric_design_total: point budget mismatch");
  return d;
}

CollocationDesign concentric_design(int level, const Electrodes* avoid) {
  static const int totals[3] = {165, 259, 523};
  if (level < 0 || level > 2)
    throw std::invalid_argument("concentric_design: level must be 0, 1 or 2");
  CollocationDesign d = concentric_design_total(totals[level], avoid);
  d.level = level;
  return d;
}

double fill_distance(const CollocationDesign& design, int grid_res) {
  if (design.interior.empty() || design.boundary.empty())
    throw std::invalid_argument("fill_distance: empty design");
  if (grid_res < 2) throw std::invalid_argument("fill_distance: grid_res >= 2");

  auto nearest = [](const std::vector<Vec2>& pts, const Vec2& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::min(best, (x - p).squaredNorm());
    return best;
  };

  double h_a_sq = 0.0;
  for (int i = 0; i < grid_res; ++i) {
    for (int j = 0; j < grid_res; ++j) {
      Vec2 x{-1.0 + 2.0 * i / (grid_res - 1), -1.0 + 2.0 * j / (grid_res - 1)};
      if (x.norm() > 1.0) continue;
      h_a_sq = std::max(h_a_sq, nearest(design.interior, x));
    }
  }
  double h_b_sq = 0.0;
  int n_angles = 4 * grid_res;
  for (int i = 0; i < n_angles; ++i) {
    double phi = 2.0 * kPi * i / n_angles;
    Vec2 x{std::cos(phi), std::sin(phi)};
    h_b_sq = std::max(h_b_sq, nearest(design.boundary, x));
  }
  return std::sqrt(std::min(h_a_sq, h_b_sq));
}

void write_design_csv(const CollocationDesign& design, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_design_csv: cannot open " + path);
  out.precision(17);
  out << "kind,x,y,nx,ny\n";
  for (const auto& p : design.interior) out << "A," << p.x() << "," << p.y() << ",,\n";
  for (size_t i = 0; i < design.boundary.size(); ++i) {
    out << "B," << design.boundary[i].x() << "," << design.boundary[i].y() << ","
        << design.boundary_normals[i].x() << "," << design.boundary_normals[i].y() << "\n";
  }
}

CollocationDesign read_design_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_design_csv: cannot open " + path);
  CollocationDesign d;
  std::string line;
  std::getline(in, line);  // header
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string kind, xs, ys, nxs, nys;
    std::getline(ss, kind, ',');
    std::getline(ss, xs, ',');
    std::getline(ss, ys, ',');
    std::getline(ss, nxs, ',');
    std::getline(ss, nys, ',');
    if (kind == "A") {
      d.interior.emplace_back(std::stod(xs), std::stod(ys));
    } else if (kind == "B") {
      d.boundary.emplace_back(std::stod(xs), std::stod(ys));
      d.boundary_normals.emplace_back(std::stod(nxs), std::stod(nys));
    } else {
      throw std::runtime_error("read_design_csv: bad kind at line " + std::to_string(line_no));
    }
  }
  return d;
}

}  // namespace eitpn
