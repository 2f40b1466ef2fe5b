#include "approximator.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace dmpcrl {

namespace {

std::vector<int> coupled_neighbors(const AgentParams& p) {
  std::vector<int> out;
  out.reserve(p.dynamics.A_neighbors.size());
  for (const auto& [j, Aij] : p.dynamics.A_neighbors) out.push_back(j);
  return out;  // std::map keys are already ascending
}

}  // namespace

MpcScheme::MpcScheme(const GraphTopology& topology,
                     std::vector<AgentParams> params, SchemeOptions opts)
    : topology_(topology), params_(std::move(params)), opts_(std::move(opts)) {
  if (static_cast<int>(params_.size()) != topology_.num_agents)
    throw DimensionError("MpcScheme: one parameter set per agent required");
  if (opts_.horizon < 1) throw ConfigError("MpcScheme: horizon must be >= 1");
  if (opts_.gamma <= 0.0 || opts_.gamma > 1.0)
    throw ConfigError("MpcScheme: discount must lie in (0, 1]");
  n_ = params_[0].state_dim();
  m_ = params_[0].input_dim();
  if (opts_.omega.size() != n_ || opts_.s_lb.size() != n_ ||
      opts_.s_ub.size() != n_)
    throw DimensionError("MpcScheme: bound/weight dimensions must match the state");
  for (int i = 0; i < num_agents(); ++i) {
    const auto& p = params_[i];
    if (p.state_dim() != n_ || p.input_dim() != m_)
      throw DimensionError("MpcScheme: heterogeneous agent dimensions");
    if (p.x_lb_shift.size() != n_ || p.x_ub_shift.size() != n_ ||
        p.f.size() != n_ + m_ || p.dynamics.b.size() != n_)
      throw DimensionError("MpcScheme: parameter vector sizes are off for agent " +
                           std::to_string(i));
    const auto& nbrs = topology_.neighbors(i);
    for (const auto& [j, Aij] : p.dynamics.A_neighbors) {
      if (std::find(nbrs.begin(), nbrs.end(), j) == nbrs.end())
        throw DimensionError("MpcScheme: coupling to non-neighbor " +
                             std::to_string(j) + " for agent " + std::to_string(i));
      if (Aij.rows() != n_ || Aij.cols() != n_)
        throw DimensionError("MpcScheme: coupling matrix shape mismatch");
    }
  }
}

void MpcScheme::set_params(int i, const AgentParams& p) {
  if (p.state_dim() != n_ || p.input_dim() != m_ ||
      p.flat_size() != params_.at(i).flat_size())
    throw DimensionError("MpcScheme::set_params: shape change not allowed");
  params_[i] = p;
}

int MpcScheme::copy_offset(int agent, int neighbor) const {
  const auto nbrs = coupled_neighbors(params_.at(agent));
  const auto it = std::find(nbrs.begin(), nbrs.end(), neighbor);
  if (it == nbrs.end())
    throw DimensionError("MpcScheme::copy_offset: no copy of that agent");
  const int idx = static_cast<int>(it - nbrs.begin());
  return own_dim() + idx * n_ * (horizon() + 1);
}

int MpcScheme::local_dim(int agent) const {
  return own_dim() + static_cast<int>(params_.at(agent).dynamics.A_neighbors.size()) *
                         n_ * (horizon() + 1);
}

void MpcScheme::fill_own_cost(int i, Eigen::MatrixXd& H, Eigen::VectorXd& g,
                              double& c0, int base,
                              const Eigen::VectorXd* u0_tilt) const {
  const auto& p = params_[i];
  const int N = horizon();
  c0 += p.V0;
  for (int k = 0; k < N; ++k) {
    const double gk = std::pow(opts_.gamma, k);
    const double lin = opts_.discount_linear_term ? gk : 1.0;
    for (int c = 0; c < n_; ++c) {
      H(base + x_offset(k) + c, base + x_offset(k) + c) += gk;
      g(base + x_offset(k) + c) += lin * p.f(c);
      H(base + sigma_offset(k) + c, base + sigma_offset(k) + c) +=
          2.0 * opts_.sigma_reg;
      g(base + sigma_offset(k) + c) += 0.5 * gk * opts_.omega(c);
    }
    for (int c = 0; c < m_; ++c) {
      H(base + u_offset(k) + c, base + u_offset(k) + c) += 0.5 * gk;
      g(base + u_offset(k) + c) += lin * p.f(n_ + c);
    }
  }
  for (int c = 0; c < n_; ++c)
    H(base + x_offset(N) + c, base + x_offset(N) + c) += 2.0 * opts_.terminal_reg;
  if (u0_tilt) {
    if (u0_tilt->size() != m_)
      throw DimensionError("MpcScheme: first-input tilt has wrong size");
    g.segment(base + u_offset(0), m_) += *u0_tilt;
  }
}

LocalSubproblem MpcScheme::build_local_subproblem(
    int i, const Eigen::VectorXd& s_i, const Eigen::VectorXd* a_i,
    const Eigen::VectorXd* u0_tilt) const {
  if (s_i.size() != n_)
    throw DimensionError("build_local_subproblem: state size mismatch");
  if (a_i && a_i->size() != m_)
    throw DimensionError("build_local_subproblem: action size mismatch");
  const auto& p = params_[i];
  const int N = horizon();
  const int d = local_dim(i);
  const bool with_action = a_i != nullptr;

  LocalSubproblem sp;
  sp.qp.H = Eigen::MatrixXd::Zero(d, d);
  sp.qp.g = Eigen::VectorXd::Zero(d);
  sp.qp.c0 = 0.0;
  fill_own_cost(i, sp.qp.H, sp.qp.g, sp.qp.c0, 0, u0_tilt);

  const int p_rows = num_eq_rows(with_action);
  sp.qp.Aeq = Eigen::MatrixXd::Zero(p_rows, d);
  sp.qp.beq = Eigen::VectorXd::Zero(p_rows);
  for (int c = 0; c < n_; ++c) {
    sp.qp.Aeq(c, x_offset(0) + c) = 1.0;
    sp.qp.beq(c) = s_i(c);
  }
  if (with_action)
    for (int c = 0; c < m_; ++c) {
      sp.qp.Aeq(n_ + c, u_offset(0) + c) = 1.0;
      sp.qp.beq(n_ + c) = (*a_i)(c);
    }
  for (int k = 0; k < N; ++k) {
    const int r = dyn_row(k, with_action);
    sp.qp.Aeq.block(r, x_offset(k + 1), n_, n_).setIdentity();
    sp.qp.Aeq.block(r, x_offset(k), n_, n_) -= p.dynamics.A;
    sp.qp.Aeq.block(r, u_offset(k), n_, m_) -= p.dynamics.B;
    for (const auto& [j, Aij] : p.dynamics.A_neighbors)
      sp.qp.Aeq.block(r, copy_offset(i, j) + n_ * k, n_, n_) -= Aij;
    sp.qp.beq.segment(r, n_) = p.dynamics.b;
  }

  const int m_rows = num_ineq_rows();
  sp.qp.Ain = Eigen::MatrixXd::Zero(m_rows, d);
  sp.qp.bin = Eigen::VectorXd::Zero(m_rows);
  for (int k = 0; k < N; ++k) {
    const bool box = k > 0 || opts_.constrain_initial_state;
    for (int c = 0; c < n_; ++c) {
      int r = state_lo_row(k) + c;
      if (box) {
        sp.qp.Ain(r, x_offset(k) + c) = -1.0;
        sp.qp.Ain(r, sigma_offset(k) + c) = -1.0;
        sp.qp.bin(r) = -(opts_.s_lb(c) + p.x_lb_shift(c));
      }
      r = state_hi_row(k) + c;
      if (box) {
        sp.qp.Ain(r, x_offset(k) + c) = 1.0;
        sp.qp.Ain(r, sigma_offset(k) + c) = -1.0;
        sp.qp.bin(r) = opts_.s_ub(c) + p.x_ub_shift(c);
      }
      r = sigma_row(k) + c;
      sp.qp.Ain(r, sigma_offset(k) + c) = -1.0;
      sp.qp.bin(r) = 0.0;
    }
    for (int c = 0; c < m_; ++c) {
      int r = input_lo_row(k) + c;
      sp.qp.Ain(r, u_offset(k) + c) = -1.0;
      sp.qp.bin(r) = -opts_.u_lb;
      r = input_hi_row(k) + c;
      sp.qp.Ain(r, u_offset(k) + c) = 1.0;
      sp.qp.bin(r) = opts_.u_ub;
    }
  }

  sp.blocks.push_back({i, 0, n_ * (N + 1)});
  for (int j : coupled_neighbors(p))
    sp.blocks.push_back({j, copy_offset(i, j), n_ * (N + 1)});
  return sp;
}

QuadProgram MpcScheme::build_centralized_qp(
    const JointState& s, const std::vector<Eigen::VectorXd>* a,
    const std::vector<Eigen::VectorXd>* u0_tilt) const {
  const int M = num_agents();
  if (static_cast<int>(s.s.size()) != M)
    throw DimensionError("build_centralized_qp: joint state size mismatch");
  if (a && static_cast<int>(a->size()) != M)
    throw DimensionError("build_centralized_qp: joint action size mismatch");
  const int N = horizon();
  const bool with_action = a != nullptr;
  const int d1 = own_dim();
  const int d = M * d1;
  const int p1 = num_eq_rows(with_action);
  const int m1 = num_ineq_rows();

  QuadProgram qp;
  qp.H = Eigen::MatrixXd::Zero(d, d);
  qp.g = Eigen::VectorXd::Zero(d);
  qp.c0 = 0.0;
  qp.Aeq = Eigen::MatrixXd::Zero(M * p1, d);
  qp.beq = Eigen::VectorXd::Zero(M * p1);
  qp.Ain = Eigen::MatrixXd::Zero(M * m1, d);
  qp.bin = Eigen::VectorXd::Zero(M * m1);

  for (int i = 0; i < M; ++i) {
    const auto& p = params_[i];
    const int base = i * d1;
    fill_own_cost(i, qp.H, qp.g, qp.c0, base,
                  u0_tilt ? &(*u0_tilt)[i] : nullptr);

    const int er = i * p1;
    for (int c = 0; c < n_; ++c) {
      qp.Aeq(er + c, base + x_offset(0) + c) = 1.0;
      qp.beq(er + c) = s.s[i](c);
    }
    if (with_action)
      for (int c = 0; c < m_; ++c) {
        qp.Aeq(er + n_ + c, base + u_offset(0) + c) = 1.0;
        qp.beq(er + n_ + c) = (*a)[i](c);
      }
    for (int k = 0; k < N; ++k) {
      const int r = er + dyn_row(k, with_action);
      qp.Aeq.block(r, base + x_offset(k + 1), n_, n_).setIdentity();
      qp.Aeq.block(r, base + x_offset(k), n_, n_) -= p.dynamics.A;
      qp.Aeq.block(r, base + u_offset(k), n_, m_) -= p.dynamics.B;
      for (const auto& [j, Aij] : p.dynamics.A_neighbors)
        qp.Aeq.block(r, j * d1 + x_offset(k), n_, n_) -= Aij;
      qp.beq.segment(r, n_) = p.dynamics.b;
    }

    const int ir = i * m1;
    for (int k = 0; k < N; ++k) {
      const bool box = k > 0 || opts_.constrain_initial_state;
      for (int c = 0; c < n_; ++c) {
        int r = ir + state_lo_row(k) + c;
        if (box) {
          qp.Ain(r, base + x_offset(k) + c) = -1.0;
          qp.Ain(r, base + sigma_offset(k) + c) = -1.0;
          qp.bin(r) = -(opts_.s_lb(c) + p.x_lb_shift(c));
        }
        r = ir + state_hi_row(k) + c;
        if (box) {
          qp.Ain(r, base + x_offset(k) + c) = 1.0;
          qp.Ain(r, base + sigma_offset(k) + c) = -1.0;
          qp.bin(r) = opts_.s_ub(c) + p.x_ub_shift(c);
        }
        r = ir + sigma_row(k) + c;
        qp.Ain(r, base + sigma_offset(k) + c) = -1.0;
      }
      for (int c = 0; c < m_; ++c) {
        int r = ir + input_lo_row(k) + c;
        qp.Ain(r, base + u_offset(k) + c) = -1.0;
        qp.bin(r) = -opts_.u_lb;
        r = ir + input_hi_row(k) + c;
        qp.Ain(r, base + u_offset(k) + c) = 1.0;
        qp.bin(r) = opts_.u_ub;
      }
    }
  }
  return qp;
}

EvaluationResult MpcScheme::evaluate_distributed(
    const JointState& s, const std::vector<Eigen::VectorXd>* a,
    const EvalOptions& eval_opts,
    const std::vector<Eigen::VectorXd>* u0_tilt) const {
  const int M = num_agents();
  if (static_cast<int>(s.s.size()) != M)
    throw DimensionError("evaluate_distributed: joint state size mismatch");
  if (a && static_cast<int>(a->size()) != M)
    throw DimensionError("evaluate_distributed: joint action size mismatch");
  std::vector<LocalSubproblem> sps;
  sps.reserve(M);
  for (int i = 0; i < M; ++i)
    sps.push_back(build_local_subproblem(i, s.s[i], a ? &(*a)[i] : nullptr,
                                         u0_tilt ? &(*u0_tilt)[i] : nullptr));
  AdmmOptions admm_opts;
  admm_opts.rho = eval_opts.rho;
  admm_opts.iterations = eval_opts.admm_iterations;
  admm_opts.record_history = eval_opts.record_history;
  admm_opts.qp_tol = eval_opts.qp_tol;

  EvaluationResult res;
  res.admm = admm_solve(sps, topology_, admm_opts);
  res.local_objectives.resize(M);
  res.first_inputs.resize(M);
  res.agent_kkt.resize(M);
  Eigen::VectorXd naive(M);
  for (int i = 0; i < M; ++i) {
    res.local_objectives(i) = res.admm.agents[i].local_objective;
    res.agent_kkt[i] = res.admm.agents[i].kkt;
    res.first_inputs[i] = res.agent_kkt[i].x.segment(u_offset(0), m_);
    naive(i) = M * res.local_objectives(i);
  }
  res.value_estimates = gac_consensus(naive, topology_, eval_opts.gac_iterations);
  res.estimate_spread =
      res.value_estimates.maxCoeff() - res.value_estimates.minCoeff();
  res.value = res.value_estimates(0);
  return res;
}

EvaluationResult MpcScheme::evaluate_centralized(
    const JointState& s, const std::vector<Eigen::VectorXd>* a,
    const std::vector<Eigen::VectorXd>* u0_tilt, double qp_tol) const {
  const int M = num_agents();
  const QuadProgram qp = build_centralized_qp(s, a, u0_tilt);
  const KktSolution sol = solve(qp, qp_tol);
  const int d1 = own_dim();
  const int p1 = num_eq_rows(a != nullptr);
  const int m1 = num_ineq_rows();
  const int N = horizon();

  EvaluationResult res;
  res.value = sol.objective;
  res.local_objectives.resize(M);
  res.first_inputs.resize(M);
  res.agent_kkt.resize(M);
  for (int i = 0; i < M; ++i) {
    KktSolution view;
    view.x = Eigen::VectorXd::Zero(local_dim(i));
    view.x.head(d1) = sol.x.segment(i * d1, d1);
    for (int j : coupled_neighbors(params_[i]))
      view.x.segment(copy_offset(i, j), n_ * (N + 1)) =
          sol.x.segment(j * d1, n_ * (N + 1));
    view.eq_duals = sol.eq_duals.segment(i * p1, p1);
    view.ineq_duals = sol.ineq_duals.segment(i * m1, m1);
    view.kkt_residual = sol.kkt_residual;

    // Local objective under the agent's own cost; consistent with the
    // distributed path by construction.
    const auto sp = build_local_subproblem(i, s.s[i], a ? &(*a)[i] : nullptr,
                                           u0_tilt ? &(*u0_tilt)[i] : nullptr);
    view.objective = objective_value(sp.qp, view.x);
    res.agent_kkt[i] = std::move(view);
    res.local_objectives(i) = res.agent_kkt[i].objective;
    res.first_inputs[i] = sol.x.segment(i * d1 + u_offset(0), m_);
  }
  res.value_estimates = Eigen::VectorXd::Constant(M, res.value);
  res.estimate_spread = 0.0;
  return res;
}

}  // namespace dmpcrl
