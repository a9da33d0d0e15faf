#include "eitpn/kernel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eitpn {

double se_eval(const SEKernel& kernel, const Vec2& x, const Vec2& xp) {
  double l2 = kernel.lengthscale * kernel.lengthscale;
  return kernel.amplitude * std::exp(-(x - xp).squaredNorm() / (2.0 * l2));
}

KernelDerivatives se_derivatives(const SEKernel& kernel, const Vec2& x, const Vec2& xp) {
  const double L = kernel.lengthscale * kernel.lengthscale;
  const Vec2 d = x - xp;
  const double r2 = d.squaredNorm();
  const double e = kernel.amplitude * std::exp(-r2 / (2.0 * L));

  KernelDerivatives kd;
  kd.k = e;
  kd.grad_x = -(e / L) * d;
  kd.grad_xp = (e / L) * d;
  kd.lap_x = e * (r2 / (L * L) - 2.0 / L);
  kd.lap_xp = kd.lap_x;
  kd.grad_grad = e * (Mat2::Identity() / L - d * d.transpose() / (L * L));
  const double c3 = 4.0 / (L * L) - r2 / (L * L * L);
  kd.grad_x_lap_xp = e * c3 * d;
  kd.lap_x_grad_xp = -e * c3 * d;
  kd.lap_lap = e * (r2 * r2 / (L * L * L * L) - 8.0 * r2 / (L * L * L) + 8.0 / (L * L));
  return kd;
}

std::vector<Vec2> disc_lattice(int per_axis) {
  std::vector<Vec2> pts;
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      Vec2 x{-1.0 + 2.0 * i / (per_axis - 1), -1.0 + 2.0 * j / (per_axis - 1)};
      if (x.norm() < 1.0) pts.push_back(x);
    }
  }
  return pts;
}

KLBasis nystrom_eigs(const SEKernel& kernel, const std::vector<Vec2>& grid, int n_modes) {
  const int n = static_cast<int>(grid.size());
  if (n_modes < 1 || n_modes > n)
    throw std::invalid_argument("nystrom_eigs: need 1 <= n_modes <= grid size");

  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = kernel.amplitude;
    for (int j = i + 1; j < n; ++j) {
      K(i, j) = se_eval(kernel, grid[i], grid[j]);
      K(j, i) = K(i, j);
    }
  }
  K.diagonal().array() += 1e-10 * kernel.amplitude;  // stabilising nugget

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  if (es.info() != Eigen::Success) throw std::runtime_error("nystrom_eigs: eigensolve failed");

  // Eigen returns ascending order; operator eigenvalues are eigval / n.
  KLBasis basis;
  basis.kernel = kernel;
  basis.grid = grid;
  basis.eigenvalues.resize(n_modes);
  basis.eigenvectors.resize(n, n_modes);
  const double lambda_max = es.eigenvalues()(n - 1) / n;
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n_modes; ++i) {
    double lam = es.eigenvalues()(n - 1 - i) / n;
    if (lam <= 1e-12 * lambda_max)
      throw std::invalid_argument("nystrom_eigs: n_modes exceeds numerical rank");
    basis.eigenvalues(i) = lam;
    // Grid-orthonormal scaling: (1/n) sum_j e_i(z_j)^2 = 1.
    basis.eigenvectors.col(i) = sqrt_n * es.eigenvectors().col(n - 1 - i);
  }
  return basis;
}

Eigen::MatrixXd KLBasis::extend(const std::vector<Vec2>& points) const {
  const int np = static_cast<int>(points.size());
  const int ng = static_cast<int>(grid.size());
  Eigen::MatrixXd Kq(np, ng);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < ng; ++j) Kq(i, j) = se_eval(kernel, points[i], grid[j]);
  return (Kq * eigenvectors) * (1.0 / ng * eigenvalues.cwiseInverse()).asDiagonal();
}

void KLBasis::extend_grad(const std::vector<Vec2>& points, Eigen::MatrixXd& dx,
                          Eigen::MatrixXd& dy) const {
  const int np = static_cast<int>(points.size());
  const int ng = static_cast<int>(grid.size());
  const double L = kernel.lengthscale * kernel.lengthscale;
  Eigen::MatrixXd Gx(np, ng), Gy(np, ng);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < ng; ++j) {
      double k = se_eval(kernel, points[i], grid[j]);
      Vec2 d = points[i] - grid[j];
      Gx(i, j) = -k * d.x() / L;
      Gy(i, j) = -k * d.y() / L;
    }
  }
  auto scale = (1.0 / ng * eigenvalues.cwiseInverse()).asDiagonal();
  dx = (Gx * eigenvectors) * scale;
  dy = (Gy * eigenvectors) * scale;
}

void write_basis_csv(const KLBasis& basis, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_basis_csv: cannot open " + path);
  out.precision(17);
  out << "# amplitude=" << basis.kernel.amplitude << "\n"
      << "# lengthscale=" << basis.kernel.lengthscale << "\n"
      << "# n_grid=" << basis.grid.size() << "\n"
      << "# n_modes=" << basis.n_modes() << "\n";
  for (const auto& g : basis.grid) out << "G," << g.x() << "," << g.y() << "\n";
  for (int i = 0; i < basis.n_modes(); ++i) out << "L," << basis.eigenvalues(i) << "\n";
  for (int j = 0; j < basis.eigenvectors.rows(); ++j) {
    out << "V";
    for (int i = 0; i < basis.n_modes(); ++i) out << "," << basis.eigenvectors(j, i);
    out << "\n";
  }
}

KLBasis read_basis_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_basis_csv: cannot open " + path);
  KLBasis basis;
  std::string line;
  int n_grid = -1, n_modes = -1;
  auto header_value = [](const std::string& l) { return std::stod(l.substr(l.find('=') + 1)); };
  std::vector<double> eigs;
  std::vector<std::vector<double>> vec_rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("amplitude=") != std::string::npos) basis.kernel.amplitude = header_value(line);
      else if (line.find("lengthscale=") != std::string::npos) basis.kernel.lengthscale = header_value(line);
      else if (line.find("n_grid=") != std::string::npos) n_grid = static_cast<int>(header_value(line));
      else if (line.find("n_modes=") != std::string::npos) n_modes = static_cast<int>(header_value(line));
      continue;
    }
    std::stringstream ss(line);
    std::string tag;
    std::getline(ss, tag, ',');
    std::vector<double> vals;
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (tag == "G") basis.grid.emplace_back(vals.at(0), vals.at(1));
    else if (tag == "L") eigs.push_back(vals.at(0));
    else if (tag == "V") vec_rows.push_back(vals);
    else throw std::runtime_error("read_basis_csv: bad tag " + tag);
  }
  if (static_cast<int>(basis.grid.size()) != n_grid ||
      static_cast<int>(eigs.size()) != n_modes ||
      static_cast<int>(vec_rows.size()) != n_grid)
    throw std::runtime_error("read_basis_csv: inconsistent counts in " + path);
  basis.eigenvalues = Eigen::Map<Eigen::VectorXd>(eigs.data(), n_modes);
  basis.eigenvectors.resize(n_grid, n_modes);
  for (int j = 0; j < n_grid; ++j)
    for (int i = 0; i < n_modes; ++i) basis.eigenvectors(j, i) = vec_rows[j].at(i);
  return basis;
}

}  // namespace eitpn
