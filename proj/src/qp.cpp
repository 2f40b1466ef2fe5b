#include "qp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace dmpcrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Appends the constraint whose transformed normal is d to the (J, R)
// factorization. Returns false when d lies in the span of the active
// normals (linearly dependent constraint).
bool add_constraint(Eigen::MatrixXd& J, Eigen::MatrixXd& R, Eigen::VectorXd& d,
                    int& iq, double& R_norm) {
  const int n = static_cast<int>(J.rows());
  // Zero out d[iq+1..n-1] with Givens rotations, accumulating them into J.
  for (int j = n - 1; j >= iq + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = J(k, j - 1);
      const double t2 = J(k, j);
      J(k, j - 1) = t1 * cc + t2 * ss;
      J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
    }
  }
  ++iq;
  R.col(iq - 1).head(iq) = d.head(iq);
  if (std::abs(d(iq - 1)) <= 1e-14 * R_norm) return false;
  R_norm = std::max(R_norm, std::abs(d(iq - 1)));
  return true;
}

// Removes active constraint at slot l (0-based) from (J, R) and shifts the
// bookkeeping vectors.
void remove_constraint(Eigen::MatrixXd& J, Eigen::MatrixXd& R, int& iq, int l,
                       std::vector<int>& active, std::vector<double>& u) {
  const int n = static_cast<int>(J.rows());
  for (int i = l; i < iq - 1; ++i) {
    active[i] = active[i + 1];
    u[i] = u[i + 1];
    R.col(i) = R.col(i + 1);
  }
  active[iq - 1] = -1;
  u[iq - 1] = 0.0;
  --iq;
  if (iq == 0) return;
  for (int j = l; j < iq; ++j) {
    double cc = R(j, j);
    double ss = R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < iq; ++k) {
      const double t1 = R(j, k);
      const double t2 = R(j + 1, k);
      R(j, k) = t1 * cc + t2 * ss;
      R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = J(k, j);
      const double t2 = J(k, j + 1);
      J(k, j) = t1 * cc + t2 * ss;
      J(k, j + 1) = xny * (J(k, j) + t1) - t2;
    }
  }
}

}  // namespace

struct ActiveSetSolver::Impl {
  int n = 0;
  Eigen::MatrixXd H, Aeq, Ain;
  Eigen::LLT<Eigen::MatrixXd> llt;

  struct EqStep {
    int row;            // row of Aeq
    bool redundant;     // linearly dependent on previous rows
    Eigen::VectorXd z;  // primal step direction
    Eigen::VectorXd r;  // dual step over previously added constraints
    double denom;       // z' * normal
  };
  std::vector<EqStep> eq_steps;
  Eigen::MatrixXd J_eq, R_eq;
  int iq_eq = 0;  // active (non-redundant) equality count
  double R_norm_eq = 1.0;
};

ActiveSetSolver::ActiveSetSolver(Eigen::MatrixXd H, Eigen::MatrixXd Aeq,
                                 Eigen::MatrixXd Ain)
    : impl_(std::make_unique<Impl>()) {
  Impl& im = *impl_;
  im.n = static_cast<int>(H.rows());
  if (H.cols() != im.n) throw DimensionError("qp: H must be square");
  if (Aeq.size() > 0 && Aeq.cols() != im.n)
    throw DimensionError("qp: Aeq column count mismatch");
  if (Ain.size() > 0 && Ain.cols() != im.n)
    throw DimensionError("qp: Ain column count mismatch");
  im.H = std::move(H);
  im.Aeq = std::move(Aeq);
  im.Ain = std::move(Ain);
  im.llt.compute(im.H);
  if (im.llt.info() != Eigen::Success)
    throw NotStrictlyConvexError("qp: Hessian is not positive definite");

  // J0 = L^{-T}; the working matrix of the dual active-set method.
  im.J_eq = im.llt.matrixU().solve(Eigen::MatrixXd::Identity(im.n, im.n));
  im.R_eq = Eigen::MatrixXd::Zero(im.n, im.n);

  // Fold the equality constraints into the factorization once. The primal
  // and dual steps recorded here are right-hand-side independent and get
  // replayed per solve.
  const int p = static_cast<int>(im.Aeq.rows());
  Eigen::VectorXd d(im.n);
  for (int i = 0; i < p; ++i) {
    const Eigen::VectorXd np = im.Aeq.row(i).transpose();
    d.noalias() = im.J_eq.transpose() * np;
    Impl::EqStep step;
    step.row = i;
    const int free = im.n - im.iq_eq;
    const double z_norm = d.tail(free).norm();
    if (z_norm <= 1e-12 * std::max(1.0, d.norm())) {
      step.redundant = true;
      step.denom = 0.0;
      im.eq_steps.push_back(std::move(step));
      continue;
    }
    step.redundant = false;
    step.z.noalias() = im.J_eq.rightCols(free) * d.tail(free);
    step.r = im.R_eq.topLeftCorner(im.iq_eq, im.iq_eq)
                 .triangularView<Eigen::Upper>()
                 .solve(d.head(im.iq_eq));
    step.denom = d.tail(free).squaredNorm();
    if (!add_constraint(im.J_eq, im.R_eq, d, im.iq_eq, im.R_norm_eq))
      throw SolverError("qp: equality factorization became singular");
    im.eq_steps.push_back(std::move(step));
  }
}

ActiveSetSolver::~ActiveSetSolver() = default;
ActiveSetSolver::ActiveSetSolver(ActiveSetSolver&&) noexcept = default;
ActiveSetSolver& ActiveSetSolver::operator=(ActiveSetSolver&&) noexcept = default;

int ActiveSetSolver::dim() const { return impl_->n; }

KktSolution ActiveSetSolver::solve(const Eigen::VectorXd& g, double c0,
                                   const Eigen::VectorXd& beq,
                                   const Eigen::VectorXd& bin,
                                   double tol) const {
  const Impl& im = *impl_;
  const int n = im.n;
  const int p = static_cast<int>(im.Aeq.rows());
  const int m = static_cast<int>(im.Ain.rows());
  if (g.size() != n) throw DimensionError("qp: linear term size mismatch");
  if (beq.size() != p || bin.size() != m)
    throw DimensionError("qp: right-hand-side size mismatch");

  // Unconstrained minimum, then replay the recorded equality steps.
  Eigen::VectorXd x = im.llt.solve(-g);
  std::vector<double> u(n, 0.0);
  std::vector<int> active(n, -1);  // >= 0: inequality row; -1: equality slot
  int iq = 0;
  for (const auto& step : im.eq_steps) {
    const double resid = im.Aeq.row(step.row).dot(x) - beq(step.row);
    if (step.redundant) {
      if (std::abs(resid) > 1e-8 * (1.0 + std::abs(beq(step.row))))
        throw InfeasibleError("qp: inconsistent dependent equality row " +
                              std::to_string(step.row));
      continue;
    }
    const double t2 = -resid / step.denom;
    x += t2 * step.z;
    for (int k = 0; k < iq; ++k) u[k] -= t2 * step.r(k);
    u[iq] = t2;
    ++iq;
  }
  const int iq_eq = im.iq_eq;

  Eigen::MatrixXd J = im.J_eq;
  Eigen::MatrixXd R = im.R_eq;
  double R_norm = im.R_norm_eq;

  Eigen::VectorXd d(n), z(n), r(n), np(n);
  const long max_ops = 400L * (n + p + m) + 100;
  long ops = 0;

  if (m > 0) {
    for (;;) {
      // Most violated inequality.
      int ip = -1;
      double worst = 0.0;
      for (int i = 0; i < m; ++i) {
        const double viol = im.Ain.row(i).dot(x) - bin(i);
        if (viol > worst + tol * (1.0 + std::abs(bin(i)))) {
          worst = viol;
          ip = i;
        }
      }
      if (ip < 0) break;  // primal feasible -> optimal

      np = -im.Ain.row(ip).transpose();
      const double b_gi = -bin(ip);
      double u_new = 0.0;
      for (;;) {
        if (++ops > max_ops)
          throw MaxIterationsError("qp: active-set iteration limit exceeded");
        d.noalias() = J.transpose() * np;
        const int free = n - iq;
        z.setZero();
        if (free > 0) z.noalias() = J.rightCols(free) * d.tail(free);
        r.head(iq) = R.topLeftCorner(iq, iq)
                         .triangularView<Eigen::Upper>()
                         .solve(d.head(iq));

        // Partial step bound from active inequality duals.
        double t1 = kInf;
        int l = -1;
        for (int k = iq_eq; k < iq; ++k) {
          if (r(k) > 1e-14 && u[k] / r(k) < t1) {
            t1 = u[k] / r(k);
            l = k;
          }
        }
        // Full step to make the chosen constraint active.
        const double sviol = np.dot(x) - b_gi;  // negative while violated
        const double denom = d.tail(free).squaredNorm();
        const bool has_z = free > 0 && std::sqrt(denom) > 1e-13 * std::max(1.0, d.norm());
        const double t2 = has_z ? -sviol / denom : kInf;

        const double t = std::min(t1, t2);
        if (!std::isfinite(t))
          throw InfeasibleError("qp: no feasible point satisfies all constraints");

        if (!has_z) {
          // Dual-only step: drop the blocking constraint and retry.
          for (int k = 0; k < iq; ++k) u[k] -= t * r(k);
          u_new += t;
          remove_constraint(J, R, iq, l, active, u);
          continue;
        }

        x += t * z;
        for (int k = 0; k < iq; ++k) u[k] -= t * r(k);
        u_new += t;

        if (t == t2) {
          active[iq] = ip;
          u[iq] = u_new;
          if (!add_constraint(J, R, d, iq, R_norm))
            throw SolverError("qp: degenerate constraint addition");
          break;  // pick the next violated constraint
        }
        // Partial step: the blocking constraint leaves the active set and
        // we keep working on the same violated constraint.
        remove_constraint(J, R, iq, l, active, u);
      }
    }
  }

  KktSolution sol;
  sol.x = x;
  sol.eq_duals = Eigen::VectorXd::Zero(p);
  {
    int slot = 0;
    for (const auto& step : im.eq_steps) {
      if (step.redundant) continue;
      sol.eq_duals(step.row) = -u[slot];
      ++slot;
    }
  }
  sol.ineq_duals = Eigen::VectorXd::Zero(m);
  for (int k = iq_eq; k < iq; ++k)
    if (active[k] >= 0) sol.ineq_duals(active[k]) = std::max(0.0, u[k]);

  // Polish: the loop above settles the active set but accumulates rotation
  // roundoff when the Hessian is badly scaled. Re-solve the KKT system of
  // the final active set directly, with one round of iterative refinement,
  // to push primal and duals back to full precision.
  if (iq > 0) {
    std::vector<int> act_eq, act_in;
    for (const auto& step : im.eq_steps)
      if (!step.redundant) act_eq.push_back(step.row);
    for (int k = iq_eq; k < iq; ++k)
      if (active[k] >= 0) act_in.push_back(active[k]);
    const int pa = static_cast<int>(act_eq.size());
    const int ma = static_cast<int>(act_in.size());
    const int nk = n + pa + ma;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nk, nk);
    Eigen::VectorXd rhs(nk);
    K.topLeftCorner(n, n) = im.H;
    rhs.head(n) = -g;
    for (int k = 0; k < pa; ++k) {
      K.block(n + k, 0, 1, n) = im.Aeq.row(act_eq[k]);
      K.block(0, n + k, n, 1) = im.Aeq.row(act_eq[k]).transpose();
      rhs(n + k) = beq(act_eq[k]);
    }
    for (int k = 0; k < ma; ++k) {
      K.block(n + pa + k, 0, 1, n) = im.Ain.row(act_in[k]);
      K.block(0, n + pa + k, n, 1) = im.Ain.row(act_in[k]).transpose();
      rhs(n + pa + k) = bin(act_in[k]);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
    Eigen::VectorXd w = lu.solve(rhs);
    w += lu.solve(rhs - K * w);
    w += lu.solve(rhs - K * w);
    // Near-degenerate active sets can defeat partial pivoting; fall back to
    // full pivoting when the refined saddle solve still carries a residual.
    if ((rhs - K * w).lpNorm<Eigen::Infinity>() >
        1e-10 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
      const Eigen::FullPivLU<Eigen::MatrixXd> flu(K);
      Eigen::VectorXd wf = flu.solve(rhs);
      wf += flu.solve(rhs - K * wf);
      wf += flu.solve(rhs - K * wf);
      if ((rhs - K * wf).lpNorm<Eigen::Infinity>() <
          (rhs - K * w).lpNorm<Eigen::Infinity>())
        w = wf;
    }
    sol.x = w.head(n);
    for (int k = 0; k < pa; ++k) sol.eq_duals(act_eq[k]) = w(n + k);
    for (int k = 0; k < ma; ++k)
      sol.ineq_duals(act_in[k]) = std::max(0.0, w(n + pa + k));
  }
  sol.objective = 0.5 * sol.x.dot(im.H * sol.x) + g.dot(sol.x) + c0;

  // Residual and degeneracy bookkeeping.
  Eigen::VectorXd stat = im.H * sol.x + g;
  if (p > 0) stat.noalias() += im.Aeq.transpose() * sol.eq_duals;
  if (m > 0) stat.noalias() += im.Ain.transpose() * sol.ineq_duals;
  double res = stat.lpNorm<Eigen::Infinity>();
  if (p > 0)
    res = std::max(res, (im.Aeq * sol.x - beq).lpNorm<Eigen::Infinity>());
  for (int i = 0; i < m; ++i) {
    const double slack = bin(i) - im.Ain.row(i).dot(sol.x);
    res = std::max(res, -slack);
    res = std::max(res, std::abs(sol.ineq_duals(i) * slack));
    if (std::abs(slack) < 1e-7 && sol.ineq_duals(i) < 1e-7 &&
        (std::abs(slack) < 1e-9 || sol.ineq_duals(i) > 0.0))
      sol.degenerate.push_back(i);
  }
  sol.kkt_residual = res;
  return sol;
}

double objective_value(const QuadProgram& qp, const Eigen::VectorXd& x) {
  if (x.size() != qp.dim())
    throw DimensionError("objective_value: dimension mismatch");
  return 0.5 * x.dot(qp.H * x) + qp.g.dot(x) + qp.c0;
}

double QuadProgram::reduced_hessian_min_eig() const {
  if (num_eq() == 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    return es.eigenvalues().minCoeff();
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Aeq);
  const Eigen::MatrixXd Z = lu.kernel();
  if (Z.cols() == 0 || (Z.cols() == 1 && Z.norm() == 0.0))
    return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Z.transpose() * H * Z);
  return es.eigenvalues().minCoeff();
}

void QuadProgram::validate() const {
  const int d = dim();
  if (H.cols() != d || g.size() != d)
    throw DimensionError("QuadProgram: cost dimension mismatch");
  if ((H - H.transpose()).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + H.norm()))
    throw NotStrictlyConvexError("QuadProgram: Hessian is not symmetric");
  if (Aeq.rows() != beq.size() || Ain.rows() != bin.size())
    throw DimensionError("QuadProgram: constraint right-hand-side mismatch");
  if (reduced_hessian_min_eig() <= 1e-10)
    throw NotStrictlyConvexError(
        "QuadProgram: reduced Hessian is not positive definite");
}

KktSolution solve(const QuadProgram& qp, double tol) {
  ActiveSetSolver solver(qp.H, qp.Aeq, qp.Ain);
  return solver.solve(qp.g, qp.c0, qp.beq, qp.bin, tol);
}

double kkt_residual(const QuadProgram& qp, const KktSolution& sol) {
  Eigen::VectorXd stat = qp.H * sol.x + qp.g;
  if (qp.num_eq() > 0) stat.noalias() += qp.Aeq.transpose() * sol.eq_duals;
  if (qp.num_ineq() > 0) stat.noalias() += qp.Ain.transpose() * sol.ineq_duals;
  double res = stat.lpNorm<Eigen::Infinity>();
  if (qp.num_eq() > 0)
    res = std::max(res, (qp.Aeq * sol.x - qp.beq).lpNorm<Eigen::Infinity>());
  for (int i = 0; i < qp.num_ineq(); ++i) {
    const double slack = qp.bin(i) - qp.Ain.row(i).dot(sol.x);
    res = std::max(res, -slack);
    res = std::max(res, std::abs(sol.ineq_duals(i) * slack));
  }
  return res;
}

}  // namespace dmpcrl
