#ifndef EITPN_GEOMETRY_HPP
#define EITPN_GEOMETRY_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eitpn {

using Vec2 = Eigen::Vector2d;

/// The circular domain (unit disc centred at the origin).
struct Domain {
  double radius = 1.0;
  Vec2 center = Vec2::Zero();

  bool is_interior(const Vec2& x) const { return (x - center).norm() < radius; }
  bool is_boundary(const Vec2& x, double tol = 1e-12) const {
    return std::abs((x - center).norm() - radius) <= tol;
  }
};

/// Ring of m electrodes on the boundary circle. Each electrode is an arc of
/// angular half-width `half_width` centred at angle 2*pi*i/m, with a
/// Gauss-Legendre quadrature rule for current-integral functionals.
struct Electrodes {
  int count = 0;
  std::vector<double> center_angles;          // radians, size m
  double half_width = 0.0;                    // angular half-width
  int quad_nodes_per_electrode = 0;
  std::vector<Vec2> quad_points;              // m * q points on the arcs
  std::vector<Vec2> quad_normals;             // outward normals at quad points
  std::vector<double> quad_weights;           // arc-length quadrature weights

  Vec2 center_point(int i) const {
    return {std::cos(center_angles[i]), std::sin(center_angles[i])};
  }
};

/// Interior and boundary collocation points for the meshless discretisation.
struct CollocationDesign {
  std::vector<Vec2> interior;         // x_i^A, strictly inside D
  std::vector<Vec2> boundary;         // x_i^B, on the unit circle
  std::vector<Vec2> boundary_normals; // outward unit normals, = x/|x|
  int level = -1;                     // -1 when not one of the named levels

  int n_interior() const { return static_cast<int>(interior.size()); }
  int n_boundary() const { return static_cast<int>(boundary.size()); }
  int total() const { return n_interior() + n_boundary(); }
};

/// Equally spaced electrode ring. Throws std::invalid_argument if the arcs
/// would overlap (half_width >= pi/m) or m < 2.
Electrodes build_electrodes(int m, double half_width, int quad_nodes);

/// Concentric-circle designs with the named point totals 165 / 259 / 523 for
/// levels 0 / 1 / 2. When `avoid` is given, boundary points are distributed
/// uniformly over the inter-electrode gaps (the zero-flux region) instead of
/// the whole circle.
CollocationDesign concentric_design(int level, const Electrodes* avoid = nullptr);

/// Concentric-circle design with an arbitrary point total (>= 12). The
/// boundary ring takes ~22% of the points; the rest go on equally spaced
/// interior rings (counts proportional to circumference) plus a centre point.
CollocationDesign concentric_design_total(int total, const Electrodes* avoid = nullptr);

/// Fill distance h = min(h_A, h_B) approximated by maximising the
/// nearest-point distance over a probe grid with `grid_res` points per axis
/// (interior) and 4*grid_res points on the boundary circle.
double fill_distance(const CollocationDesign& design, int grid_res);

/// CSV export/import, columns kind{A,B},x,y,nx,ny (normals empty for A rows).
void write_design_csv(const CollocationDesign& design, const std::string& path);
CollocationDesign read_design_csv(const std::string& path);

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace eitpn

#endif
