#ifndef EITPN_FORWARD_HPP
#define EITPN_FORWARD_HPP

#include <functional>

#include "eitpn/geometry.hpp"
#include "eitpn/kernel.hpp"
#include "eitpn/prior.hpp"

namespace eitpn {

/// Injected currents, one per electrode; must sum to zero.
struct StimulationPattern {
  Eigen::VectorXd currents;
};

/// Conductivity field evaluator: returns a(x) and grad a(x).
using FieldFn = std::function<std::pair<double, Vec2>(const Vec2&)>;

/// The collocation operators only touch the field through a and grad a at a
/// fixed point set: a, grad a at interior points, a at flux points (boundary
/// collocation points followed by electrode quadrature nodes).
struct FieldSamples {
  Eigen::VectorXd a_int, gax_int, gay_int;  // size n_A
  Eigen::VectorXd a_flux;                   // size n_B + m*q
};

/// Field-independent kernel-derivative tensors for one (design, electrodes,
/// kernel) triple. Building this is the expensive step; assembling the Gram
/// system for a new field afterwards is a handful of flops per entry.
class DesignTables {
 public:
  DesignTables(const CollocationDesign& design, const Electrodes& electrodes,
               const SEKernel& kernel);

  const std::vector<Vec2>& interior_points() const { return interior_; }
  const std::vector<Vec2>& flux_points() const { return flux_; }
  int n_interior() const { return nA_; }
  int n_boundary() const { return nB_; }
  int n_electrodes() const { return m_; }
  /// Gram-system dimension: n_A + n_B + m + 1 (grounding row included).
  int n_rows() const { return nA_ + nB_ + m_ + 1; }

  /// Raw operator matrix over [interior; flux; electrode centres] before the
  /// electrode-quadrature and grounding folds, for the given field values.
  Eigen::MatrixXd raw(const FieldSamples& field) const;

  const std::vector<double>& quad_weights() const { return quad_weights_; }

  friend FieldSamples sample_field(const DesignTables&, const FieldFn&);

 private:
  int nA_, nB_, m_, q_;
  std::vector<Vec2> interior_, flux_;
  std::vector<double> quad_weights_;  // m*q arc-length weights

  // Tensor blocks, named by (row op, column op) with I = interior operator
  // grad a . grad + a lap, F = flux operator a n . grad, P = point evaluation.
  Eigen::MatrixXd II_xx_, II_xy_, II_yx_, II_yy_;  // grad-grad contractions
  Eigen::MatrixXd II_vx_, II_vy_;                  // grad_x lap_x' components
  Eigen::MatrixXd II_wx_, II_wy_;                  // lap_x grad_x' components
  Eigen::MatrixXd II_s_;                           // lap lap
  Eigen::MatrixXd IF_wx_, IF_wy_, IF_s_;
  Eigen::MatrixXd FI_wx_, FI_wy_, FI_s_;
  Eigen::MatrixXd FF_s_;
  Eigen::MatrixXd IP_vx_, IP_vy_, IP_s_;
  Eigen::MatrixXd PI_vx_, PI_vy_, PI_s_;
  Eigen::MatrixXd FP_s_, PF_s_;
  Eigen::MatrixXd PP_k_;
};

/// Folded Gram system for one field: G = L Lbar k (with grounding row),
/// C = P Lbar k, Pr = P Pbar k.
struct OperatorSystem {
  Eigen::MatrixXd G;   // n_rows x n_rows, symmetric
  Eigen::MatrixXd C;   // m x n_rows
  Eigen::MatrixXd Pr;  // m x m
  int m = 0;

  Eigen::VectorXd rhs(const StimulationPattern& pattern) const;
};

FieldSamples sample_field(const DesignTables& tables, const FieldFn& field);

/// Fast per-particle field sampling: basis tables frozen at the design points.
struct FieldTables {
  BasisTable interior, flux;
  FieldTables(const DesignTables& tables, const KLBasis& basis)
      : interior(basis, tables.interior_points()), flux(basis, tables.flux_points()) {}
  FieldSamples sample(const Eigen::VectorXd& coeffs) const;
};

OperatorSystem assemble(const DesignTables& tables, const FieldSamples& field);

/// Gaussian posterior over the m electrode potentials.
struct PMMResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Shared factorisation of G: the covariance is pattern-independent, so one
/// factorisation serves every stimulation pattern.
class PmmFactor {
 public:
  explicit PmmFactor(const OperatorSystem& system);
  Eigen::VectorXd mean(const StimulationPattern& pattern) const;
  const Eigen::MatrixXd& cov() const { return cov_; }

 private:
  const OperatorSystem& system_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  Eigen::MatrixXd cov_;
};

PMMResult pmm_solve(const OperatorSystem& system, const StimulationPattern& pattern);

/// Posterior mean only, on a dense design; used for data generation and
/// reference posteriors.
Eigen::VectorXd reference_solve(const CollocationDesign& dense_design,
                                const Electrodes& electrodes, const SEKernel& kernel,
                                const FieldFn& field, const StimulationPattern& pattern);

}  // namespace eitpn

#endif
