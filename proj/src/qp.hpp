#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace dmpcrl {

/// Strictly convex quadratic program
///   min 1/2 x'Hx + g'x + c0
///   s.t. Aeq x = beq,  Ain x <= bin.
struct QuadProgram {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double c0 = 0.0;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Ain;
  Eigen::VectorXd bin;

  int dim() const { return static_cast<int>(H.rows()); }
  int num_eq() const { return static_cast<int>(Aeq.rows()); }
  int num_ineq() const { return static_cast<int>(Ain.rows()); }

  /// Smallest eigenvalue of Z'HZ with Z a nullspace basis of Aeq.
  double reduced_hessian_min_eig() const;
  /// Throws NotStrictlyConvex / DimensionError when the invariants fail.
  void validate() const;
};

/// Primal-dual solution. Duals are signed so that
///   H x + g + Aeq' mu + Ain' lambda = 0,  lambda >= 0.
struct KktSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_duals;    // mu
  Eigen::VectorXd ineq_duals;  // lambda
  double objective = 0.0;
  double kkt_residual = 0.0;
  /// Inequalities with both slack and dual below 1e-7 (weakly active).
  std::vector<int> degenerate;
};

double objective_value(const QuadProgram& qp, const Eigen::VectorXd& x);

/// Dual active-set solve (Goldfarb-Idnani). Exact up to linear-algebra
/// round-off; tol is used for feasibility checks and the final residual
/// verification.
KktSolution solve(const QuadProgram& qp, double tol = 1e-10);

/// Prepared solver for repeated solves that share H, Aeq and Ain and only
/// change the linear term and right-hand sides (the ADMM inner loop).
/// The Cholesky factor of H and the equality-constraint factorization are
/// computed once.
class ActiveSetSolver {
 public:
  ActiveSetSolver(Eigen::MatrixXd H, Eigen::MatrixXd Aeq, Eigen::MatrixXd Ain);
  ~ActiveSetSolver();
  ActiveSetSolver(ActiveSetSolver&&) noexcept;
  ActiveSetSolver& operator=(ActiveSetSolver&&) noexcept;

  KktSolution solve(const Eigen::VectorXd& g, double c0,
                    const Eigen::VectorXd& beq, const Eigen::VectorXd& bin,
                    double tol = 1e-10) const;

  int dim() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Residual of the KKT system for a candidate solution; max over
/// stationarity, primal feasibility and complementary slackness.
double kkt_residual(const QuadProgram& qp, const KktSolution& sol);

}  // namespace dmpcrl
