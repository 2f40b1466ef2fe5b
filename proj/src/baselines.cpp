#include "baselines.hpp"

#include <cmath>

#include "errors.hpp"

namespace dmpcrl {

namespace {

std::vector<Eigen::MatrixXd> draw_noise(int num_agents, int n, int horizon,
                                        std::mt19937& rng,
                                        const AcademicEnv::Options& opts) {
  std::uniform_real_distribution<double> d(opts.noise_lb, opts.noise_ub);
  std::vector<Eigen::MatrixXd> w(num_agents);
  for (int i = 0; i < num_agents; ++i) {
    w[i] = Eigen::MatrixXd::Zero(n, horizon);
    for (int k = 0; k < horizon; ++k) w[i](0, k) = d(rng);
  }
  return w;
}

}  // namespace

ScenarioSet sample_scenarios(const GraphTopology& topology, int count,
                             int horizon, std::mt19937& rng,
                             const AcademicEnv::Options& noise_opts) {
  if (count < 1 || horizon < 1)
    throw ConfigError("sample_scenarios: count and horizon must be >= 1");
  ScenarioSet set;
  set.count = count;
  set.horizon = horizon;
  const int M = topology.num_agents;
  for (int sc = 0; sc < count; ++sc) {
    std::vector<DynamicsParams> models(M);
    for (int i = 0; i < M; ++i)
      models[i] = sample_inaccurate_model(rng, topology.neighbors(i));
    set.models.push_back(std::move(models));
    set.noise.push_back(draw_noise(M, 2, horizon, rng, noise_opts));
  }
  return set;
}

ScenarioSet true_model_scenarios(const AcademicEnv& env, int count,
                                 int horizon, std::mt19937& rng) {
  if (count < 1 || horizon < 1)
    throw ConfigError("true_model_scenarios: count and horizon must be >= 1");
  ScenarioSet set;
  set.count = count;
  set.horizon = horizon;
  const int M = env.num_agents();
  std::vector<DynamicsParams> models(M);
  for (int i = 0; i < M; ++i) models[i] = env.true_dynamics(i);
  for (int sc = 0; sc < count; ++sc) {
    set.models.push_back(models);
    set.noise.push_back(
        draw_noise(M, env.state_dim(), horizon, rng, env.options()));
  }
  return set;
}

ScenarioQp build_scenario_qp(const GraphTopology& topology,
                             const SchemeOptions& opts,
                             const ScenarioSet& scenarios,
                             const JointState& s) {
  const int M = topology.num_agents;
  if (static_cast<int>(s.s.size()) != M)
    throw DimensionError("build_scenario_qp: joint state size mismatch");
  if (scenarios.count < 1 ||
      static_cast<int>(scenarios.models.size()) != scenarios.count ||
      static_cast<int>(scenarios.noise.size()) != scenarios.count)
    throw DimensionError("build_scenario_qp: inconsistent scenario set");
  const int N = scenarios.horizon;
  if (N != opts.horizon)
    throw DimensionError("build_scenario_qp: scenario/scheme horizon mismatch");
  const int n = static_cast<int>(s.s[0].size());
  const int m = scenarios.models[0][0].input_dim();
  const int Ns = scenarios.count;
  const int du = M * N * m;
  const int nsig = Ns * M * N * n;  // slacks per scenario, agent, step
  const double inv = 1.0 / Ns;

  ScenarioQp out;
  out.num_agents = M;
  out.input_dim = m;
  out.horizon = N;
  out.num_scenarios = Ns;
  auto& qp = out.qp;
  qp.Huu = Eigen::MatrixXd::Zero(du, du);
  qp.gu = Eigen::VectorXd::Zero(du);
  qp.c0 = 0.0;
  qp.slack_quad = Eigen::VectorXd::Constant(nsig, 2.0 * opts.sigma_reg * inv);
  qp.slack_lin = Eigen::VectorXd::Zero(nsig);
  const int rows = Ns * M * N * n * 3 + 2 * du;  // lo, hi, nonneg + u box
  qp.Au = Eigen::MatrixXd::Zero(rows, du);
  qp.b = Eigen::VectorXd::Zero(rows);
  qp.slack_index.assign(rows, -1);
  qp.slack_coeff = Eigen::VectorXd::Zero(rows);

  // Input cost and hard bounds are scenario-independent.
  for (int k = 0; k < N; ++k) {
    const double gk = std::pow(opts.gamma, k);
    for (int i = 0; i < M; ++i)
      for (int c = 0; c < m; ++c)
        qp.Huu(out.u_index(i, k) + c, out.u_index(i, k) + c) += 0.5 * gk;
  }
  int row = 0;
  for (int v = 0; v < du; ++v) {
    qp.Au(row, v) = -1.0;
    qp.b(row++) = -opts.u_lb;
    qp.Au(row, v) = 1.0;
    qp.b(row++) = opts.u_ub;
  }

  for (int sc = 0; sc < Ns; ++sc) {
    // Eliminate the states: X(k) = C + G U per stacked step.
    Eigen::VectorXd C(M * n);
    for (int i = 0; i < M; ++i) C.segment(i * n, n) = s.s[i];
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M * n, du);
    const int sig_base = sc * M * N * n;
    auto sig_at = [&](int i, int k, int c) {
      return sig_base + (i * N + k) * n + c;
    };

    for (int k = 0; k <= N; ++k) {
      const double gk = std::pow(opts.gamma, k);
      if (k < N) {
        // Stage cost on the states.
        qp.Huu.noalias() += (inv * gk) * (G.transpose() * G);
        qp.gu.noalias() += (inv * gk) * (G.transpose() * C);
        qp.c0 += 0.5 * inv * gk * C.squaredNorm();

        // Soft state box and slack terms for this step.
        for (int i = 0; i < M; ++i)
          for (int c = 0; c < n; ++c) {
            const int j = sig_at(i, k, c);
            qp.slack_lin(j) = 0.5 * inv * gk * opts.omega(c);
            const int xr = i * n + c;
            qp.Au.row(row) = -G.row(xr);
            qp.slack_index[row] = j;
            qp.slack_coeff(row) = -1.0;
            qp.b(row++) = -opts.s_lb(c) + C(xr);
            qp.Au.row(row) = G.row(xr);
            qp.slack_index[row] = j;
            qp.slack_coeff(row) = -1.0;
            qp.b(row++) = opts.s_ub(c) - C(xr);
            qp.slack_index[row] = j;
            qp.slack_coeff(row) = -1.0;
            qp.b(row++) = 0.0;
          }
      } else {
        qp.Huu.noalias() += (2.0 * inv * opts.terminal_reg) * (G.transpose() * G);
        qp.gu.noalias() += (2.0 * inv * opts.terminal_reg) * (G.transpose() * C);
        qp.c0 += inv * opts.terminal_reg * C.squaredNorm();
        break;
      }

      // Advance the affine maps through this scenario's dynamics.
      const auto& models = scenarios.models[sc];
      Eigen::VectorXd Cn(M * n);
      Eigen::MatrixXd Gn = Eigen::MatrixXd::Zero(M * n, du);
      for (int i = 0; i < M; ++i) {
        const auto& dp = models[i];
        Cn.segment(i * n, n) =
            dp.A * C.segment(i * n, n) + dp.b + scenarios.noise[sc][i].col(k);
        Gn.middleRows(i * n, n) = dp.A * G.middleRows(i * n, n);
        Gn.block(i * n, out.u_index(i, k), n, m) += dp.B;
        for (const auto& [jn, Aij] : dp.A_neighbors) {
          Cn.segment(i * n, n) += Aij * C.segment(jn * n, n);
          Gn.middleRows(i * n, n) += Aij * G.middleRows(jn * n, n);
        }
      }
      C = std::move(Cn);
      G = std::move(Gn);
    }
  }
  if (row != rows)
    throw DimensionError("build_scenario_qp: row bookkeeping mismatch");
  return out;
}

SlackSeparableSolution solve_slack_separable(const SlackSeparableQp& qp,
                                             double tol, int max_iterations) {
  const int du = qp.num_u();
  const int ns = qp.num_slacks();
  const int mr = qp.num_rows();
  if (qp.Au.rows() != mr || static_cast<int>(qp.slack_index.size()) != mr ||
      qp.slack_coeff.size() != mr || qp.gu.size() != du ||
      qp.slack_lin.size() != ns)
    throw DimensionError("solve_slack_separable: inconsistent program");
  if (mr == 0) throw ConfigError("solve_slack_separable: no constraints");
  for (int r = 0; r < mr; ++r)
    if (qp.slack_index[r] >= ns)
      throw DimensionError("solve_slack_separable: slack index out of range");

  Eigen::VectorXd u = Eigen::VectorXd::Zero(du);
  Eigen::VectorXd sg = Eigen::VectorXd::Ones(ns);
  Eigen::VectorXd lam = Eigen::VectorXd::Ones(mr);
  Eigen::VectorXd t(mr);

  auto row_value = [&](int r) {
    double v = qp.Au.row(r).dot(u);
    if (qp.slack_index[r] >= 0) v += qp.slack_coeff(r) * sg(qp.slack_index[r]);
    return v;
  };
  for (int r = 0; r < mr; ++r) t(r) = std::max(1.0, qp.b(r) - row_value(r));

  const double scale =
      1.0 + std::max({qp.gu.lpNorm<Eigen::Infinity>(),
                      qp.slack_lin.size() ? qp.slack_lin.lpNorm<Eigen::Infinity>() : 0.0,
                      qp.b.lpNorm<Eigen::Infinity>()});

  Eigen::VectorXd rd_u(du), rd_s(ns), rp(mr);
  SlackSeparableSolution sol;
  // Best iterate meeting the residual tolerance. Meeting `tol` on the KKT
  // residuals bounds the solution error only up to the problem's
  // conditioning (the regularized curvature can be ~1e-6), so once
  // feasible we keep shrinking the complementarity gap and return the
  // tightest iterate reached.
  bool have_best = false;
  double best_mu = 0.0;
  Eigen::VectorXd best_u, best_sg, best_lam;
  int best_it = 0;
  for (int it = 0; it < max_iterations; ++it) {
    // Residuals of the perturbed KKT system.
    rd_u = qp.Huu * u + qp.gu;
    rd_u.noalias() += qp.Au.transpose() * lam;
    rd_s = qp.slack_quad.cwiseProduct(sg) + qp.slack_lin;
    for (int r = 0; r < mr; ++r)
      if (qp.slack_index[r] >= 0)
        rd_s(qp.slack_index[r]) += qp.slack_coeff(r) * lam(r);
    for (int r = 0; r < mr; ++r) rp(r) = row_value(r) + t(r) - qp.b(r);
    const double mu = t.dot(lam) / mr;
    const double rinf = std::max(rd_u.lpNorm<Eigen::Infinity>(),
                                 std::max(ns ? rd_s.lpNorm<Eigen::Infinity>() : 0.0,
                                          rp.lpNorm<Eigen::Infinity>()));
    if (rinf <= tol * scale && mu <= tol * scale &&
        (!have_best || mu < best_mu)) {
      have_best = true;
      best_mu = mu;
      best_u = u;
      best_sg = sg;
      best_lam = lam;
      best_it = it;
    }
    if (have_best && (mu <= 1e-8 * tol * scale || mu > best_mu)) break;
    if (it == max_iterations - 1) {
      if (have_best) break;
      throw MaxIterationsError("solve_slack_separable: no convergence");
    }

    // Normal matrix with the slack block Schur-complemented away.
    const Eigen::VectorXd W = lam.cwiseQuotient(t);
    Eigen::MatrixXd Muu = qp.Huu;
    Muu.noalias() += qp.Au.transpose() * W.asDiagonal() * qp.Au;
    Eigen::VectorXd D = qp.slack_quad;
    Eigen::MatrixXd Cmat = Eigen::MatrixXd::Zero(du, ns);
    for (int r = 0; r < mr; ++r) {
      const int j = qp.slack_index[r];
      if (j < 0) continue;
      D(j) += W(r) * qp.slack_coeff(r) * qp.slack_coeff(r);
      Cmat.col(j).noalias() += (W(r) * qp.slack_coeff(r)) * qp.Au.row(r).transpose();
    }
    Eigen::MatrixXd S = Muu;
    if (ns > 0)
      S.noalias() -= Cmat * D.cwiseInverse().asDiagonal() * Cmat.transpose();
    // Near the solution the Schur complement can lose definiteness to
    // roundoff (W spans many orders of magnitude). Regularize the Newton
    // system just enough to factor it; the convergence test above is still
    // against the exact KKT residuals, so the solution is unaffected.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success || ldlt.isNegative()) {
      const double snorm = S.lpNorm<Eigen::Infinity>() + 1.0;
      double reg = 1e-14 * snorm;
      for (; reg <= 1e-4 * snorm; reg *= 100.0) {
        ldlt.compute(S + reg * Eigen::MatrixXd::Identity(du, du));
        if (ldlt.info() == Eigen::Success && !ldlt.isNegative()) break;
      }
      if (ldlt.info() != Eigen::Success || ldlt.isNegative())
        throw SolverError("solve_slack_separable: reduced system not PD");
    }

    auto newton = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dz_u,
                      Eigen::VectorXd& dz_s, Eigen::VectorXd& dt,
                      Eigen::VectorXd& dl) {
      // Eliminate (dl, dt), then the slack block.
      Eigen::VectorXd w1 = (lam.cwiseProduct(rp) - rc).cwiseQuotient(t);
      Eigen::VectorXd ru = -rd_u;
      ru.noalias() -= qp.Au.transpose() * w1;
      Eigen::VectorXd rs = -rd_s;
      for (int r = 0; r < mr; ++r)
        if (qp.slack_index[r] >= 0)
          rs(qp.slack_index[r]) -= qp.slack_coeff(r) * w1(r);
      Eigen::VectorXd rs_over_d =
          ns > 0 ? rs.cwiseQuotient(D) : Eigen::VectorXd();
      Eigen::VectorXd rhs = ru;
      if (ns > 0) rhs.noalias() -= Cmat * rs_over_d;
      dz_u = ldlt.solve(rhs);
      if (ns > 0)
        dz_s = (rs - Cmat.transpose() * dz_u).cwiseQuotient(D);
      else
        dz_s.resize(0);
      dt = -rp;
      dt.noalias() -= qp.Au * dz_u;
      for (int r = 0; r < mr; ++r)
        if (qp.slack_index[r] >= 0)
          dt(r) -= qp.slack_coeff(r) * dz_s(qp.slack_index[r]);
      dl = (-rc - lam.cwiseProduct(dt)).cwiseQuotient(t);
    };
    auto step_len = [](const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                       double frac) {
      double a = 1.0;
      for (int r = 0; r < v.size(); ++r)
        if (dv(r) < 0.0) a = std::min(a, -frac * v(r) / dv(r));
      return a;
    };

    Eigen::VectorXd du_a, ds_a, dt_a, dl_a;
    newton(t.cwiseProduct(lam), du_a, ds_a, dt_a, dl_a);
    const double ap_a = step_len(t, dt_a, 1.0);
    const double ad_a = step_len(lam, dl_a, 1.0);
    const double a_aff = std::min(ap_a, ad_a);
    const double mu_aff =
        (t + a_aff * dt_a).dot(lam + a_aff * dl_a) / mr;
    const double sigma = std::pow(mu_aff / mu, 3);

    Eigen::VectorXd rc = t.cwiseProduct(lam) + dt_a.cwiseProduct(dl_a) -
                         Eigen::VectorXd::Constant(mr, sigma * mu);
    Eigen::VectorXd du_c, ds_c, dt_c, dl_c;
    newton(rc, du_c, ds_c, dt_c, dl_c);
    // One common step length for primal and dual: the Newton cancellation
    // Huu*du + Au'*dl = -rd_u only contracts the infeasibility residuals
    // when both blocks move together, and with unequal steps the leftover
    // dual infeasibility stops annealing once the complementarity gap has
    // collapsed below it (the iteration then stalls just above tolerance).
    const double a = std::min(step_len(t, dt_c, 0.995),
                              step_len(lam, dl_c, 0.995));
    u += a * du_c;
    if (ns > 0) sg += a * ds_c;
    t += a * dt_c;
    lam += a * dl_c;
  }

  if (have_best) {
    u = best_u;
    sg = best_sg;
    lam = best_lam;
    sol.iterations = best_it;
  }
  sol.u = u;
  sol.slacks = sg;
  sol.duals = lam.cwiseMax(0.0);
  sol.objective = 0.5 * u.dot(qp.Huu * u) + qp.gu.dot(u) + qp.c0 +
                  0.5 * sg.dot(qp.slack_quad.cwiseProduct(sg)) +
                  qp.slack_lin.dot(sg);
  return sol;
}

std::vector<Eigen::VectorXd> scenario_mpc_policy(const GraphTopology& topology,
                                                 const SchemeOptions& opts,
                                                 const ScenarioSet& scenarios,
                                                 const JointState& s) {
  const auto prog = build_scenario_qp(topology, opts, scenarios, s);
  const auto sol = solve_slack_separable(prog.qp, 1e-9);
  std::vector<Eigen::VectorXd> actions(prog.num_agents);
  for (int i = 0; i < prog.num_agents; ++i)
    actions[i] = sol.u.segment(prog.u_index(i, 0), prog.input_dim);
  return actions;
}

std::vector<Eigen::VectorXd> nominal_mpc_policy(const MpcScheme& scheme,
                                                const JointState& s,
                                                bool distributed,
                                                const EvalOptions& ev) {
  return distributed ? scheme.evaluate_distributed(s, nullptr, ev).first_inputs
                     : scheme.evaluate_centralized(s, nullptr).first_inputs;
}

ClosedLoopResult closed_loop_eval(const Policy& policy, AcademicEnv& env,
                                  const JointState& initial, int steps,
                                  int episodes) {
  if (steps < 1 || episodes < 1)
    throw ConfigError("closed_loop_eval: steps and episodes must be >= 1");
  ClosedLoopResult out;
  out.episode_costs = Eigen::VectorXd::Zero(episodes);
  out.violations.assign(episodes, 0);
  const auto& lb = env.options().s_lb;
  const auto& ub = env.options().s_ub;
  for (int ep = 0; ep < episodes; ++ep) {
    JointState state = initial;
    state.t = 0;
    double total = 0.0;
    for (int k = 0; k < steps; ++k) {
      const auto actions = policy(state);
      auto [next_state, costs] = env.step(state, actions);
      total += costs.mean();
      for (const auto& si : next_state.s)
        for (int c = 0; c < si.size(); ++c)
          if (si(c) < lb(c) - 1e-9 || si(c) > ub(c) + 1e-9) {
            ++out.violations[ep];
            break;
          }
      state = std::move(next_state);
    }
    out.episode_costs(ep) = total;
    out.final_states.push_back(state);
  }
  return out;
}

}  // namespace dmpcrl
