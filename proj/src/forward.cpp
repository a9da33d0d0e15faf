#include "eitpn/forward.hpp"

#include <cmath>
#include <stdexcept>

namespace eitpn {

namespace {

void check_pattern(const StimulationPattern& pattern, int m) {
  if (pattern.currents.size() != m)
    throw std::invalid_argument("stimulation pattern has wrong electrode count");
  if (std::abs(pattern.currents.sum()) > 1e-12 * (1.0 + pattern.currents.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("stimulation pattern violates current conservation");
}

}  // namespace

DesignTables::DesignTables(const CollocationDesign& design, const Electrodes& electrodes,
                           const SEKernel& kernel) {
  nA_ = design.n_interior();
  nB_ = design.n_boundary();
  m_ = electrodes.count;
  q_ = electrodes.quad_nodes_per_electrode;
  interior_ = design.interior;

  flux_ = design.boundary;
  std::vector<Vec2> normals = design.boundary_normals;
  flux_.insert(flux_.end(), electrodes.quad_points.begin(), electrodes.quad_points.end());
  normals.insert(normals.end(), electrodes.quad_normals.begin(), electrodes.quad_normals.end());
  quad_weights_ = electrodes.quad_weights;

  std::vector<Vec2> centres(m_);
  for (int i = 0; i < m_; ++i) centres[i] = electrodes.center_point(i);

  const int nF = static_cast<int>(flux_.size());

  // Pairwise distinctness guards the full-rank property of the Gram matrix.
  std::vector<Vec2> all = interior_;
  all.insert(all.end(), flux_.begin(), flux_.end());
  for (size_t i = 0; i < all.size(); ++i)
    for (size_t j = i + 1; j < all.size(); ++j)
      if ((all[i] - all[j]).norm() <= 1e-10)
        throw std::invalid_argument("DesignTables: coincident collocation points");

  II_xx_.resize(nA_, nA_); II_xy_.resize(nA_, nA_); II_yx_.resize(nA_, nA_);
  II_yy_.resize(nA_, nA_); II_vx_.resize(nA_, nA_); II_vy_.resize(nA_, nA_);
  II_wx_.resize(nA_, nA_); II_wy_.resize(nA_, nA_); II_s_.resize(nA_, nA_);
  for (int i = 0; i < nA_; ++i) {
    for (int j = 0; j < nA_; ++j) {
      KernelDerivatives kd = se_derivatives(kernel, interior_[i], interior_[j]);
      II_xx_(i, j) = kd.grad_grad(0, 0);
      II_xy_(i, j) = kd.grad_grad(0, 1);
      II_yx_(i, j) = kd.grad_grad(1, 0);
      II_yy_(i, j) = kd.grad_grad(1, 1);
      II_vx_(i, j) = kd.grad_x_lap_xp.x();
      II_vy_(i, j) = kd.grad_x_lap_xp.y();
      II_wx_(i, j) = kd.lap_x_grad_xp.x();
      II_wy_(i, j) = kd.lap_x_grad_xp.y();
      II_s_(i, j) = kd.lap_lap;
    }
  }

  IF_wx_.resize(nA_, nF); IF_wy_.resize(nA_, nF); IF_s_.resize(nA_, nF);
  FI_wx_.resize(nF, nA_); FI_wy_.resize(nF, nA_); FI_s_.resize(nF, nA_);
  for (int i = 0; i < nA_; ++i) {
    for (int j = 0; j < nF; ++j) {
      const Vec2& n = normals[j];
      KernelDerivatives kd = se_derivatives(kernel, interior_[i], flux_[j]);
      Vec2 w = kd.grad_grad * n;  // contract second argument with n'
      IF_wx_(i, j) = w.x();
      IF_wy_(i, j) = w.y();
      IF_s_(i, j) = kd.lap_x_grad_xp.dot(n);
      // Swapped arguments for the flux-row / interior-column block.
      KernelDerivatives kd2 = se_derivatives(kernel, flux_[j], interior_[i]);
      Vec2 w2 = kd2.grad_grad.transpose() * n;  // contract first argument with n
      FI_wx_(j, i) = w2.x();
      FI_wy_(j, i) = w2.y();
      FI_s_(j, i) = kd2.grad_x_lap_xp.dot(n);
    }
  }

  FF_s_.resize(nF, nF);
  for (int i = 0; i < nF; ++i)
    for (int j = 0; j < nF; ++j) {
      KernelDerivatives kd = se_derivatives(kernel, flux_[i], flux_[j]);
      FF_s_(i, j) = normals[i].dot(kd.grad_grad * normals[j]);
    }

  IP_vx_.resize(nA_, m_); IP_vy_.resize(nA_, m_); IP_s_.resize(nA_, m_);
  PI_vx_.resize(m_, nA_); PI_vy_.resize(m_, nA_); PI_s_.resize(m_, nA_);
  for (int i = 0; i < nA_; ++i) {
    for (int e = 0; e < m_; ++e) {
      KernelDerivatives kd = se_derivatives(kernel, interior_[i], centres[e]);
      IP_vx_(i, e) = kd.grad_x.x();
      IP_vy_(i, e) = kd.grad_x.y();
      IP_s_(i, e) = kd.lap_x;
      PI_vx_(e, i) = kd.grad_x.x();  // stationarity: grad_xp at swapped args
      PI_vy_(e, i) = kd.grad_x.y();
      PI_s_(e, i) = kd.lap_x;
    }
  }

  FP_s_.resize(nF, m_); PF_s_.resize(m_, nF);
  for (int j = 0; j < nF; ++j) {
    for (int e = 0; e < m_; ++e) {
      KernelDerivatives kd = se_derivatives(kernel, flux_[j], centres[e]);
      FP_s_(j, e) = normals[j].dot(kd.grad_x);
      PF_s_(e, j) = normals[j].dot(kd.grad_x);
    }
  }

  PP_k_.resize(m_, m_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) PP_k_(i, j) = se_eval(kernel, centres[i], centres[j]);
}

FieldSamples sample_field(const DesignTables& tables, const FieldFn& field) {
  FieldSamples s;
  int nA = tables.nA_;
  int nF = static_cast<int>(tables.flux_.size());
  s.a_int.resize(nA); s.gax_int.resize(nA); s.gay_int.resize(nA);
  for (int i = 0; i < nA; ++i) {
    auto [a, ga] = field(tables.interior_[i]);
    s.a_int(i) = a;
    s.gax_int(i) = ga.x();
    s.gay_int(i) = ga.y();
  }
  s.a_flux.resize(nF);
  for (int j = 0; j < nF; ++j) s.a_flux(j) = field(tables.flux_[j]).first;
  return s;
}

FieldSamples FieldTables::sample(const Eigen::VectorXd& coeffs) const {
  FieldSamples s;
  s.a_int = interior.theta(coeffs).array().exp();
  s.gax_int = s.a_int.cwiseProduct(interior.dtheta_dx(coeffs));
  s.gay_int = s.a_int.cwiseProduct(interior.dtheta_dy(coeffs));
  s.a_flux = flux.theta(coeffs).array().exp();
  return s;
}

Eigen::MatrixXd DesignTables::raw(const FieldSamples& f) const {
  const int nA = nA_;
  const int nF = static_cast<int>(flux_.size());
  const int n = nA + nF + m_;
  Eigen::MatrixXd R(n, n);

  const auto& a = f.a_int;
  const auto& gx = f.gax_int;
  const auto& gy = f.gay_int;
  const auto& af = f.a_flux;

  R.topLeftCorner(nA, nA).noalias() =
      II_xx_.cwiseProduct(gx * gx.transpose()) + II_xy_.cwiseProduct(gx * gy.transpose()) +
      II_yx_.cwiseProduct(gy * gx.transpose()) + II_yy_.cwiseProduct(gy * gy.transpose()) +
      II_vx_.cwiseProduct(gx * a.transpose()) + II_vy_.cwiseProduct(gy * a.transpose()) +
      II_wx_.cwiseProduct(a * gx.transpose()) + II_wy_.cwiseProduct(a * gy.transpose()) +
      II_s_.cwiseProduct(a * a.transpose());

  R.block(0, nA, nA, nF) =
      (IF_wx_.cwiseProduct(gx * af.transpose()) + IF_wy_.cwiseProduct(gy * af.transpose()) +
       IF_s_.cwiseProduct(a * af.transpose()));

  R.block(nA, 0, nF, nA) =
      (FI_wx_.cwiseProduct(af * gx.transpose()) + FI_wy_.cwiseProduct(af * gy.transpose()) +
       FI_s_.cwiseProduct(af * a.transpose()));

  R.block(nA, nA, nF, nF) = FF_s_.cwiseProduct(af * af.transpose());

  R.block(0, nA + nF, nA, m_) = IP_vx_.cwiseProduct(gx.replicate(1, m_)) +
                                IP_vy_.cwiseProduct(gy.replicate(1, m_)) +
                                IP_s_.cwiseProduct(a.replicate(1, m_));
  R.block(nA + nF, 0, m_, nA) = PI_vx_.cwiseProduct(gx.transpose().replicate(m_, 1)) +
                                PI_vy_.cwiseProduct(gy.transpose().replicate(m_, 1)) +
                                PI_s_.cwiseProduct(a.transpose().replicate(m_, 1));

  R.block(nA, nA + nF, nF, m_) = FP_s_.cwiseProduct(af.replicate(1, m_));
  R.block(nA + nF, nA, m_, nF) = PF_s_.cwiseProduct(af.transpose().replicate(m_, 1));
  R.bottomRightCorner(m_, m_) = PP_k_;
  return R;
}

OperatorSystem assemble(const DesignTables& tables, const FieldSamples& field) {
  const int nA = tables.n_interior();
  const int nB = tables.n_boundary();
  const int m = tables.n_electrodes();
  const int q = static_cast<int>(tables.quad_weights().size()) / m;
  const int nF = static_cast<int>(tables.flux_points().size());
  const int ncore = nA + nF + m;
  const int nrows = tables.n_rows();

  Eigen::MatrixXd R = tables.raw(field);

  // Fold electrode quadrature and grounding on columns, then on rows.
  Eigen::Map<const Eigen::VectorXd> w(tables.quad_weights().data(), m * q);
  auto fold_cols = [&](const Eigen::MatrixXd& M) {
    Eigen::MatrixXd out(M.rows(), nrows);
    out.leftCols(nA + nB) = M.leftCols(nA + nB);
    for (int i = 0; i < m; ++i)
      out.col(nA + nB + i) = M.middleCols(nA + nB + i * q, q) * w.segment(i * q, q);
    out.col(nA + nB + m) = M.rightCols(m).rowwise().sum();
    return out;
  };
  Eigen::MatrixXd Rf = fold_cols(R);  // ncore x nrows

  OperatorSystem sys;
  sys.m = m;
  sys.G = fold_cols(Rf.transpose()).transpose();  // row fold via transpose
  sys.C = Rf.bottomRows(m);
  sys.Pr = R.bottomRightCorner(m, m);
  (void)ncore;
  return sys;
}

Eigen::VectorXd OperatorSystem::rhs(const StimulationPattern& pattern) const {
  check_pattern(pattern, m);
  int nrows = static_cast<int>(G.rows());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nrows);
  b.segment(nrows - 1 - m, m) = pattern.currents;
  return b;
}

PmmFactor::PmmFactor(const OperatorSystem& system) : system_(system) {
  // Diagonal-proportional nugget: the Gram rows mix fourth-derivative and
  // point-evaluation functionals whose scales differ by orders of magnitude,
  // so a uniform shift would swamp the small rows. The grounding row gets no
  // nugget at all: the electrode point-evaluation rows of C sum to exactly
  // that Gram row, so an unperturbed grounding row makes the posterior mean
  // satisfy sum(mu) = 0 to machine precision.
  Eigen::MatrixXd Gn;
  Eigen::VectorXd scaled = system.G.diagonal().cwiseAbs();
  scaled[scaled.size() - 1] = 0.0;
  double nugget = 1e-10;
  bool ok = false;
  for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
    Gn = system.G;
    Gn.diagonal() += nugget * scaled;
    ldlt_.compute(Gn);
    ok = (ldlt_.info() == Eigen::Success) && ldlt_.isPositive();
    if (!ok) nugget *= 10.0;
  }
  if (!ok) {
    throw std::runtime_error(
        "pmm factorisation failed; condition estimate ~" +
        std::to_string(system.G.diagonal().maxCoeff() / nugget));
  }

  Eigen::MatrixXd GinvCt = ldlt_.solve(system.C.transpose());
  Eigen::MatrixXd cov = system.Pr - system.C * GinvCt;
  cov = 0.5 * (cov + cov.transpose()).eval();
  // Clip tiny negative eigenvalues so the posterior is a valid Gaussian.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  cov_ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd PmmFactor::mean(const StimulationPattern& pattern) const {
  Eigen::VectorXd mu = system_.C * ldlt_.solve(system_.rhs(pattern));
  // Gauge fix: the potential is determined up to an additive constant and the
  // grounding datum pins sum(mu) = 0 exactly; recentre away solver roundoff.
  // Differenced voltages are unaffected.
  mu.array() -= mu.mean();
  return mu;
}

PMMResult pmm_solve(const OperatorSystem& system, const StimulationPattern& pattern) {
  PmmFactor factor(system);
  return {factor.mean(pattern), factor.cov()};
}

Eigen::VectorXd reference_solve(const CollocationDesign& dense_design,
                                const Electrodes& electrodes, const SEKernel& kernel,
                                const FieldFn& field, const StimulationPattern& pattern) {
  DesignTables tables(dense_design, electrodes, kernel);
  OperatorSystem sys = assemble(tables, sample_field(tables, field));
  PmmFactor factor(sys);
  return factor.mean(pattern);
}

}  // namespace eitpn
