#ifndef EITPN_KERNEL_HPP
#define EITPN_KERNEL_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eitpn/geometry.hpp"

namespace eitpn {

using Mat2 = Eigen::Matrix2d;

/// Squared-exponential kernel k(x,x') = amplitude * exp(-|x-x'|^2 / (2 l^2)).
struct SEKernel {
  double amplitude = 1.0;
  double lengthscale = 1.0;

  SEKernel() = default;
  SEKernel(double amplitude_, double lengthscale_)
      : amplitude(amplitude_), lengthscale(lengthscale_) {
    if (amplitude <= 0.0 || lengthscale <= 0.0)
      throw std::invalid_argument("SEKernel: amplitude and lengthscale must be positive");
  }
};

/// All partial-derivative blocks of the kernel needed to apply second-order
/// differential operators in both arguments. grad_* are gradients, lap_* are
/// Laplacians; mixed blocks carry the operator on each argument.
struct KernelDerivatives {
  double k;              // k(x,x')
  Vec2 grad_x;           // d/dx k
  Vec2 grad_xp;          // d/dx' k
  double lap_x;          // Laplacian in x
  double lap_xp;         // Laplacian in x'
  Mat2 grad_grad;        // d2/dx dx' k, (i,j) = d/dx_i d/dx'_j
  Vec2 grad_x_lap_xp;    // d/dx (Laplacian_x' k)
  Vec2 lap_x_grad_xp;    // d/dx' (Laplacian_x k)
  double lap_lap;        // Laplacian_x Laplacian_x' k
};

double se_eval(const SEKernel& kernel, const Vec2& x, const Vec2& xp);
KernelDerivatives se_derivatives(const SEKernel& kernel, const Vec2& x, const Vec2& xp);

/// Truncated eigen-expansion of the kernel integral operator on a point grid
/// (Nystrom approximation with uniform weights). Eigenfunctions are
/// grid-orthonormal in <f,g> = (1/n) sum_j f(z_j) g(z_j), so
/// sum_i eigenvalue_i e_i(z) e_i(z') reconstructs k(z,z') on the grid.
struct KLBasis {
  SEKernel kernel;
  std::vector<Vec2> grid;
  Eigen::VectorXd eigenvalues;   // descending, > 0
  Eigen::MatrixXd eigenvectors;  // n_grid x n_modes, column i = e_i on the grid

  int n_modes() const { return static_cast<int>(eigenvalues.size()); }

  /// Nystrom extension e_i(x) for all modes, one row per query point.
  Eigen::MatrixXd extend(const std::vector<Vec2>& points) const;
  /// Analytic gradients of the extensions; outputs are n_points x n_modes.
  void extend_grad(const std::vector<Vec2>& points, Eigen::MatrixXd& dx,
                   Eigen::MatrixXd& dy) const;
};

/// Top n_modes eigenpairs of the kernel operator on `grid`. Throws if
/// n_modes exceeds the numerical rank (eigenvalue below 1e-12 * largest).
KLBasis nystrom_eigs(const SEKernel& kernel, const std::vector<Vec2>& grid, int n_modes);

/// Uniform lattice of `per_axis` x `per_axis` points on [-1,1]^2 kept inside
/// the unit disc; the default grid for nystrom_eigs.
std::vector<Vec2> disc_lattice(int per_axis);

void write_basis_csv(const KLBasis& basis, const std::string& path);
KLBasis read_basis_csv(const std::string& path);

}  // namespace eitpn

#endif
