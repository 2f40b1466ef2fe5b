#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "academic.hpp"
#include "baselines.hpp"
#include "errors.hpp"
#include "qp.hpp"

using namespace dmpcrl;

namespace {

// Random feasible slack-separable program; (x0, s0) is strictly feasible
// by construction so both solvers have something to find.
SlackSeparableQp random_separable(std::mt19937& rng, int du, int ns,
                                  int rows) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SlackSeparableQp qp;
  Eigen::MatrixXd W(du, du);
  for (int a = 0; a < du; ++a)
    for (int b = 0; b < du; ++b) W(a, b) = gauss(rng);
  qp.Huu = W.transpose() * W + Eigen::MatrixXd::Identity(du, du);
  qp.gu.resize(du);
  for (int a = 0; a < du; ++a) qp.gu(a) = gauss(rng);
  qp.c0 = gauss(rng);
  qp.slack_quad.resize(ns);
  qp.slack_lin.resize(ns);
  for (int j = 0; j < ns; ++j) {
    qp.slack_quad(j) = 0.5 + 1.5 * unif(rng);
    qp.slack_lin(j) = gauss(rng);
  }
  Eigen::VectorXd x0(du), s0(ns);
  for (int a = 0; a < du; ++a) x0(a) = gauss(rng);
  for (int j = 0; j < ns; ++j) s0(j) = 0.1 + unif(rng);
  qp.Au.resize(rows, du);
  qp.b.resize(rows);
  qp.slack_index.assign(rows, -1);
  qp.slack_coeff = Eigen::VectorXd::Zero(rows);
  for (int r = 0; r < rows; ++r) {
    for (int a = 0; a < du; ++a) qp.Au(r, a) = gauss(rng);
    double lhs = qp.Au.row(r).dot(x0);
    if (ns > 0 && unif(rng) < 0.7) {
      qp.slack_index[r] = static_cast<int>(unif(rng) * ns) % ns;
      qp.slack_coeff(r) = unif(rng) < 0.5 ? -1.0 : 1.0;
      lhs += qp.slack_coeff(r) * s0(qp.slack_index[r]);
    }
    qp.b(r) = lhs + 0.01 + 0.5 * unif(rng);
  }
  return qp;
}

// Dense restatement over the stacked variable [u; slacks].
QuadProgram to_dense(const SlackSeparableQp& qp) {
  const int du = qp.num_u();
  const int ns = qp.num_slacks();
  const int mr = qp.num_rows();
  QuadProgram d;
  d.H = Eigen::MatrixXd::Zero(du + ns, du + ns);
  d.H.topLeftCorner(du, du) = qp.Huu;
  d.H.bottomRightCorner(ns, ns) = qp.slack_quad.asDiagonal();
  d.g.resize(du + ns);
  d.g << qp.gu, qp.slack_lin;
  d.c0 = qp.c0;
  d.Aeq.resize(0, du + ns);
  d.beq.resize(0);
  d.Ain = Eigen::MatrixXd::Zero(mr, du + ns);
  d.Ain.leftCols(du) = qp.Au;
  for (int r = 0; r < mr; ++r)
    if (qp.slack_index[r] >= 0)
      d.Ain(r, du + qp.slack_index[r]) = qp.slack_coeff(r);
  d.bin = qp.b;
  return d;
}

JointState chain_state(std::initializer_list<std::pair<double, double>> xs) {
  JointState s;
  for (const auto& [a, b] : xs) s.s.push_back(Eigen::Vector2d(a, b));
  return s;
}

ScenarioSet nominal_scenarios(const GraphTopology& g, int count, int horizon) {
  ScenarioSet set;
  set.count = count;
  set.horizon = horizon;
  for (int sc = 0; sc < count; ++sc) {
    std::vector<DynamicsParams> models;
    std::vector<Eigen::MatrixXd> noise;
    for (int i = 0; i < g.num_agents; ++i) {
      models.push_back(nominal_inaccurate_model(g.neighbors(i)));
      noise.push_back(Eigen::MatrixXd::Zero(2, horizon));
    }
    set.models.push_back(std::move(models));
    set.noise.push_back(std::move(noise));
  }
  return set;
}

}  // namespace

TEST_CASE("interior-point solve agrees with the active-set solver") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const auto qp = random_separable(rng, 4, 3, 14);
    const auto ipm = solve_slack_separable(qp, 1e-11);
    const auto ref = dmpcrl::solve(to_dense(qp));
    CHECK(std::abs(ipm.objective - ref.objective) < 1e-7);
    Eigen::VectorXd z(qp.num_u() + qp.num_slacks());
    z << ipm.u, ipm.slacks;
    CHECK((z - ref.x).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("interior-point solve handles programs without slacks") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto qp = random_separable(rng, 5, 0, 12);
    const auto ipm = solve_slack_separable(qp, 1e-11);
    const auto ref = dmpcrl::solve(to_dense(qp));
    CHECK(std::abs(ipm.objective - ref.objective) < 1e-7);
    CHECK((ipm.u - ref.x).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("scenario program dimensions grow with the scenario count") {
  const auto g = build_chain(3);
  SchemeOptions opts;
  const auto state =
      chain_state({{0.3, 0.05}, {0.4, -0.1}, {0.35, 0.0}});
  for (int count : {1, 4}) {
    const auto set = nominal_scenarios(g, count, opts.horizon);
    const auto prog = build_scenario_qp(g, opts, set, state);
    CHECK(prog.qp.num_u() == 3 * opts.horizon);
    CHECK(prog.qp.num_slacks() == count * 3 * 2 * opts.horizon);
    CHECK(prog.qp.num_rows() ==
          3 * prog.qp.num_slacks() + 2 * prog.qp.num_u());
  }
}

TEST_CASE("identical noiseless scenarios collapse to the nominal program") {
  const auto scheme = testing::academic_scheme();
  const auto& g = scheme.topology();
  const auto state =
      chain_state({{0.3, 0.05}, {0.4, -0.1}, {0.35, 0.0}});
  const auto set = nominal_scenarios(g, 5, scheme.horizon());
  const auto prog = build_scenario_qp(g, scheme.options(), set, state);
  const auto sol = solve_slack_separable(prog.qp, 1e-11);
  const auto ref = scheme.evaluate_centralized(state, nullptr);
  CHECK(std::abs(sol.objective - ref.value) < 1e-8);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(sol.u(prog.u_index(i, 0)) - ref.first_inputs[i](0)) <
          1e-7);
}

TEST_CASE("single true-model scenario without noise equals true-model MPC") {
  const auto g = build_chain(3);
  AcademicEnv::Options eopts;
  eopts.noise_lb = 0.0;
  eopts.noise_ub = 0.0;
  AcademicEnv env(g, eopts);
  SchemeOptions opts;
  std::vector<AgentParams> params(3);
  for (int i = 0; i < 3; ++i) {
    params[i].x_lb_shift = Eigen::VectorXd::Zero(2);
    params[i].x_ub_shift = Eigen::VectorXd::Zero(2);
    params[i].f = Eigen::VectorXd::Zero(3);
    params[i].dynamics = env.true_dynamics(i);
  }
  const MpcScheme true_scheme(g, params, opts);
  std::mt19937 rng(3);
  const auto set = true_model_scenarios(env, 1, opts.horizon, rng);
  const auto state = chain_state({{0.6, 0.2}, {0.2, -0.3}, {0.8, 0.1}});
  const auto smpc = scenario_mpc_policy(g, opts, set, state);
  const auto nmpc = nominal_mpc_policy(true_scheme, state, false);
  for (int i = 0; i < 3; ++i)
    CHECK((smpc[i] - nmpc[i]).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("zero policy at the origin of the noiseless plant costs nothing") {
  const auto g = build_chain(3);
  AcademicEnv::Options eopts;
  eopts.noise_lb = 0.0;
  eopts.noise_ub = 0.0;
  AcademicEnv env(g, eopts);
  const auto zero = [](const JointState&) {
    return std::vector<Eigen::VectorXd>(3, Eigen::VectorXd::Zero(1));
  };
  const auto state = chain_state({{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
  const auto res = closed_loop_eval(zero, env, state, 20, 2);
  CHECK(res.episode_costs.lpNorm<Eigen::Infinity>() < 1e-12);
  for (int v : res.violations) CHECK(v == 0);
}

TEST_CASE("state-box exits are counted per agent and step") {
  const auto g = build_chain(3);
  AcademicEnv::Options eopts;
  eopts.noise_lb = 0.0;
  eopts.noise_ub = 0.0;
  AcademicEnv env(g, eopts);
  const auto zero = [](const JointState&) {
    return std::vector<Eigen::VectorXd>(3, Eigen::VectorXd::Zero(1));
  };
  // First components decay by 0.9 per step from 1.5, so exactly the first
  // three successor states sit above the upper bound, for every agent.
  const auto state = chain_state({{1.5, 0.0}, {1.5, 0.0}, {1.5, 0.0}});
  const auto res = closed_loop_eval(zero, env, state, 6, 1);
  CHECK(res.violations[0] == 9);
}

TEST_CASE("true-model scenario MPC beats inexact nominal MPC in closed loop") {
  const auto scheme = testing::academic_scheme();
  const auto& g = scheme.topology();
  AcademicEnv env(g);
  env.reseed(42);
  const auto state = chain_state({{0.5, 0.0}, {0.5, 0.0}, {0.5, 0.0}});

  const Policy nmpc = [&](const JointState& s) {
    return nominal_mpc_policy(scheme, s, false);
  };
  std::mt19937 srng(17);
  const Policy smpc_true = [&](const JointState& s) {
    const auto set = true_model_scenarios(env, 5, scheme.horizon(), srng);
    return scenario_mpc_policy(g, scheme.options(), set, s);
  };

  const auto r_nmpc = closed_loop_eval(nmpc, env, state, 25, 3);
  env.reseed(42);
  const auto r_smpc = closed_loop_eval(smpc_true, env, state, 25, 3);
  CHECK(r_smpc.episode_costs.mean() < r_nmpc.episode_costs.mean());
}

TEST_CASE("malformed programs and arguments are rejected") {
  const auto g = build_chain(3);
  std::mt19937 rng(1);
  AcademicEnv env(g);
  CHECK_THROWS_AS(sample_scenarios(g, 0, 10, rng, env.options()), ConfigError);
  CHECK_THROWS_AS(true_model_scenarios(env, 3, 0, rng), ConfigError);

  SchemeOptions opts;
  auto set = nominal_scenarios(g, 2, opts.horizon);
  const auto state = chain_state({{0.1, 0.0}, {0.1, 0.0}, {0.1, 0.0}});
  set.horizon = opts.horizon + 1;  // scenario/scheme horizon mismatch
  CHECK_THROWS_AS(build_scenario_qp(g, opts, set, state), DimensionError);
  set.horizon = opts.horizon;
  CHECK_THROWS_AS(
      build_scenario_qp(g, opts, set, chain_state({{0.1, 0.0}})),
      DimensionError);

  auto qp = random_separable(rng, 3, 2, 8);
  qp.slack_index[0] = 5;  // out of range
  CHECK_THROWS_AS(solve_slack_separable(qp), DimensionError);

  AcademicEnv env2(g);
  const auto zero = [](const JointState&) {
    return std::vector<Eigen::VectorXd>(3, Eigen::VectorXd::Zero(1));
  };
  CHECK_THROWS_AS(closed_loop_eval(zero, env2, state, 0, 1), ConfigError);
}
