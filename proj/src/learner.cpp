#include "learner.hpp"

#include <cmath>

#include "errors.hpp"
#include "topology.hpp"

namespace dmpcrl {

double td_error(double stage_cost, double v_next, double q_current,
                double gamma) {
  if (!std::isfinite(stage_cost) || !std::isfinite(v_next) ||
      !std::isfinite(q_current))
    throw SolverError("td_error: non-finite input");
  return stage_cost + gamma * v_next - q_current;
}

double alpha_at(const LearnerConfig& cfg, int t) {
  return cfg.alpha0 * std::pow(cfg.alpha_decay, t);
}

double epsilon_at(const LearnerConfig& cfg, int t) {
  return cfg.eps0 * std::pow(cfg.eps_decay, t);
}

Eigen::VectorXd lagrangian_gradient(const MpcScheme& scheme, int agent,
                                    const KktSolution& kkt, bool with_action) {
  if (kkt.kkt_residual > 1e-8)
    throw StaleDualsError("lagrangian_gradient: KKT residual " +
                          std::to_string(kkt.kkt_residual) +
                          " too large for agent " + std::to_string(agent));
  const auto& p = scheme.params(agent);
  const int n = scheme.state_dim();
  const int m = scheme.input_dim();
  const int N = scheme.horizon();
  if (kkt.x.size() != scheme.local_dim(agent) ||
      kkt.eq_duals.size() != scheme.num_eq_rows(with_action) ||
      kkt.ineq_duals.size() != scheme.num_ineq_rows())
    throw DimensionError("lagrangian_gradient: solution layout mismatch");
  const bool disc = scheme.options().discount_linear_term;

  // The optimal value's parameter sensitivity equals the Lagrangian's
  // parameter gradient at the primal-dual solution; every parameter enters
  // the Lagrangian linearly, so the terms below are exact.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.flat_size());
  int at = 0;
  grad(at++) = 1.0;  // V0 is an additive constant

  // Bound shifts move the inequality right-hand sides: the lower bound row
  // is -x - sigma <= -(s_lb + x_lb), the upper x - sigma <= s_ub + x_ub.
  for (int c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int k = 0; k < N; ++k)
      acc += kkt.ineq_duals(scheme.state_lo_row(k) + c);
    grad(at + c) = acc;
  }
  at += n;
  for (int c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int k = 0; k < N; ++k)
      acc -= kkt.ineq_duals(scheme.state_hi_row(k) + c);
    grad(at + c) = acc;
  }
  at += n;

  // b sits on the dynamics right-hand side.
  for (int c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int k = 0; k < N; ++k)
      acc -= kkt.eq_duals(scheme.dyn_row(k, with_action) + c);
    grad(at + c) = acc;
  }
  at += n;

  // f multiplies [x(k); u(k)] in the cost.
  for (int c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int k = 0; k < N; ++k) {
      const double lin = disc ? std::pow(scheme.options().gamma, k) : 1.0;
      acc += lin * kkt.x(scheme.x_offset(k) + c);
    }
    grad(at + c) = acc;
  }
  for (int c = 0; c < m; ++c) {
    double acc = 0.0;
    for (int k = 0; k < N; ++k) {
      const double lin = disc ? std::pow(scheme.options().gamma, k) : 1.0;
      acc += lin * kkt.x(scheme.u_offset(k) + c);
    }
    grad(at + n + c) = acc;
  }
  at += n + m;

  // A, B and the couplings appear with a minus sign in the dynamics rows
  // x(k+1) - A x(k) - B u(k) - sum_j A_ij x_j(k) = b.
  auto add_matrix_term = [&](int x_base) {
    for (int col = 0; col < n; ++col)
      for (int row = 0; row < n; ++row) {
        double acc = 0.0;
        for (int k = 0; k < N; ++k)
          acc -= kkt.eq_duals(scheme.dyn_row(k, with_action) + row) *
                 kkt.x(x_base + n * k + col);
        grad(at++) = acc;
      }
  };
  add_matrix_term(scheme.x_offset(0));  // A against the own trajectory
  for (int col = 0; col < m; ++col)
    for (int row = 0; row < n; ++row) {
      double acc = 0.0;
      for (int k = 0; k < N; ++k)
        acc -= kkt.eq_duals(scheme.dyn_row(k, with_action) + row) *
               kkt.x(scheme.u_offset(k) + col);
      grad(at++) = acc;
    }
  for (const auto& [j, Aij] : p.dynamics.A_neighbors) {
    (void)Aij;
    add_matrix_term(scheme.copy_offset(agent, j));
  }
  if (at != p.flat_size())
    throw DimensionError("lagrangian_gradient: flat layout mismatch");
  return grad;
}

Eigen::VectorXd local_update(const Eigen::VectorXd& theta, double delta_bar,
                             const Eigen::VectorXd& grad_bar, double alpha,
                             double max_update_norm) {
  if (theta.size() != grad_bar.size())
    throw DimensionError("local_update: parameter/gradient size mismatch");
  Eigen::VectorXd step = alpha * delta_bar * grad_bar;
  if (max_update_norm > 0.0) {
    const double nrm = step.lpNorm<Eigen::Infinity>();
    if (nrm > max_update_norm) step *= max_update_norm / nrm;
  }
  return theta + step;
}

ExplorationResult explore_action(const MpcScheme& scheme, const JointState& s,
                                 double eps, std::mt19937& rng,
                                 const LearnerConfig& cfg) {
  if (eps < 0.0 || eps > 1.0)
    throw ConfigError("explore_action: probability outside [0, 1]");
  if (cfg.perturb_lb > cfg.perturb_ub)
    throw ConfigError("explore_action: empty perturbation interval");
  const int M = scheme.num_agents();
  const int m = scheme.input_dim();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> tilt(cfg.perturb_lb, cfg.perturb_ub);

  ExplorationResult out;
  out.tilts.assign(M, Eigen::VectorXd::Zero(m));
  for (int i = 0; i < M; ++i)
    if (coin(rng) < eps) {
      out.explored.push_back(i);
      for (int c = 0; c < m; ++c) out.tilts[i](c) = tilt(rng);
    }
  const std::vector<Eigen::VectorXd>* tilts_ptr =
      out.explored.empty() ? nullptr : &out.tilts;
  EvalOptions ev;
  ev.admm_iterations = cfg.admm_iterations;
  ev.gac_iterations = cfg.gac_iterations;
  ev.rho = cfg.rho;
  out.evaluation = cfg.distributed
                       ? scheme.evaluate_distributed(s, nullptr, ev, tilts_ptr)
                       : scheme.evaluate_centralized(s, nullptr, tilts_ptr);
  out.actions = out.evaluation.first_inputs;
  return out;
}

TrainLog train(AcademicEnv& env, MpcScheme& scheme, const LearnerConfig& cfg,
               int steps, const JointState& initial_state, std::mt19937& rng) {
  if (steps < 1) throw ConfigError("train: need at least one step");
  if (cfg.er_window < 1 || cfg.update_period < 1)
    throw ConfigError("train: replay window and update period must be >= 1");
  const int M = scheme.num_agents();
  EvalOptions ev;
  ev.admm_iterations = cfg.admm_iterations;
  ev.gac_iterations = cfg.gac_iterations;
  ev.rho = cfg.rho;

  auto evaluate = [&](const JointState& s, const std::vector<Eigen::VectorXd>* a) {
    return cfg.distributed ? scheme.evaluate_distributed(s, a, ev)
                           : scheme.evaluate_centralized(s, a);
  };
  auto snapshot = [&](int t, TrainLog& log) {
    std::vector<Eigen::VectorXd> thetas(M);
    for (int i = 0; i < M; ++i) thetas[i] = scheme.params(i).flatten();
    log.snapshots.emplace_back(t, std::move(thetas));
  };

  TrainLog log;
  log.steps.reserve(steps);
  snapshot(0, log);
  std::deque<Experience> replay;
  JointState state = initial_state;

  for (int t = 0; t < steps; ++t) {
    const double alpha = alpha_at(cfg, t);
    const double eps = epsilon_at(cfg, t);

    ExplorationResult expl;
    try {
      expl = explore_action(scheme, state, eps, rng, cfg);
      // Q and its duals are evaluated with the unperturbed objective at the
      // action actually taken.
      const EvaluationResult q_eval = evaluate(state, &expl.actions);

      Experience exp;
      exp.t = t;
      exp.grads.resize(M);
      for (int i = 0; i < M; ++i)
        exp.grads[i] = lagrangian_gradient(scheme, i, q_eval.agent_kkt[i], true);

      auto [next_state, local_costs] = env.step(state, expl.actions);
      const EvaluationResult v_eval = evaluate(next_state, nullptr);

      // The global stage cost is the mean of the local ones; distributedly
      // it is agreed on with the same averaging pass as the values.
      double stage = local_costs.mean();
      if (cfg.distributed)
        stage = gac_consensus(local_costs, scheme.topology(),
                              cfg.gac_iterations)(0);
      exp.delta = td_error(stage, v_eval.value, q_eval.value,
                           scheme.options().gamma);

      replay.push_back(std::move(exp));
      while (static_cast<int>(replay.size()) > cfg.er_window)
        replay.pop_front();

      if ((t + 1) % cfg.update_period == 0 &&
          static_cast<int>(replay.size()) >= cfg.er_window) {
        // Replay average of the per-sample products delta_k * grad_k. The
        // learning signal lives in the delta/gradient correlation: averaging
        // the factors separately would cancel it once the TD error is
        // zero-mean around its noise floor. Updates wait for a full window:
        // single unaveraged samples near the soft-constraint boundary carry
        // omega-sized dual spikes that destabilize the raw first-order step.
        std::vector<Eigen::VectorXd> step_bar(M);
        for (int i = 0; i < M; ++i)
          step_bar[i] = Eigen::VectorXd::Zero(replay.front().grads[i].size());
        for (const auto& e : replay)
          for (int i = 0; i < M; ++i) step_bar[i] += e.delta * e.grads[i];
        const double w = static_cast<double>(replay.size());
        for (int i = 0; i < M; ++i) {
          step_bar[i] /= w;
          auto p = scheme.params(i);
          p.unflatten(local_update(p.flatten(), 1.0, step_bar[i], alpha,
                                   cfg.max_update_norm));
          scheme.set_params(i, p);
        }
      }

      TrainStep rec;
      rec.t = t;
      rec.state = state.s;
      rec.action = expl.actions;
      rec.local_costs = local_costs;
      rec.delta = replay.back().delta;
      rec.td_q = q_eval.value;
      rec.td_v_next = v_eval.value;
      rec.alpha = alpha;
      rec.eps = eps;
      rec.num_explored = static_cast<int>(expl.explored.size());
      log.steps.push_back(std::move(rec));
      state = std::move(next_state);
      state.t = t + 1;
    } catch (const SolverError& err) {
      throw SolverError("train: step " + std::to_string(t) + ": " +
                        err.what());
    }

    if (cfg.snapshot_every > 0 && (t + 1) % cfg.snapshot_every == 0 &&
        t + 1 < steps)
      snapshot(t + 1, log);
  }
  snapshot(steps, log);
  return log;
}

}  // namespace dmpcrl
