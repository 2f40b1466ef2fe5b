#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <vector>

#include "approximator.hpp"
#include "linsys.hpp"
#include "topology.hpp"

namespace dmpcrl {

/// Sampled uncertainty for scenario MPC: one model per agent and one
/// additive noise sequence per agent, per scenario.
struct ScenarioSet {
  int count = 0;
  int horizon = 0;
  std::vector<std::vector<DynamicsParams>> models;  // [scenario][agent]
  std::vector<std::vector<Eigen::MatrixXd>> noise;  // [scenario][agent] n x N
};

/// Scenarios with models drawn from the inaccurate-model distribution and
/// noise drawn from the environment's noise law.
ScenarioSet sample_scenarios(const GraphTopology& topology, int count,
                             int horizon, std::mt19937& rng,
                             const AcademicEnv::Options& noise_opts);

/// Scenarios that all use the plant's true model; only the noise varies.
ScenarioSet true_model_scenarios(const AcademicEnv& env, int count,
                                 int horizon, std::mt19937& rng);

/// Convex QP in (u, slacks) where every slack has a diagonal cost and each
/// inequality row touches at most one slack:
///   min 1/2 u'Huu u + gu'u + sum_j (1/2 q_j s_j^2 + l_j s_j) + c0
///   s.t. Au u + coeff_r * s_{slack_index_r} <= b    (slack_index_r may be -1)
/// The scenario MPC condenses to this shape once the per-scenario state
/// trajectories are eliminated through the dynamics.
struct SlackSeparableQp {
  Eigen::MatrixXd Huu;
  Eigen::VectorXd gu;
  double c0 = 0.0;
  Eigen::VectorXd slack_quad;  // q_j (Hessian diagonal)
  Eigen::VectorXd slack_lin;   // l_j
  Eigen::MatrixXd Au;
  Eigen::VectorXd b;
  std::vector<int> slack_index;   // per row; -1 when the row has no slack
  Eigen::VectorXd slack_coeff;    // per row; 0 when the row has no slack

  int num_u() const { return static_cast<int>(Huu.rows()); }
  int num_slacks() const { return static_cast<int>(slack_quad.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
};

struct SlackSeparableSolution {
  Eigen::VectorXd u;
  Eigen::VectorXd slacks;
  Eigen::VectorXd duals;  // one per inequality row, >= 0
  double objective = 0.0;
  int iterations = 0;
};

/// Primal-dual interior-point solve exploiting the separable slack block
/// (the reduced Newton system is Schur-complemented onto the u variables).
SlackSeparableSolution solve_slack_separable(const SlackSeparableQp& qp,
                                             double tol = 1e-10,
                                             int max_iterations = 100);

/// The scenario MPC program for a given joint state: shared input
/// sequences, per-scenario soft state constraints, cost averaged over the
/// scenarios. Bookkeeping fields give the condensed layout.
struct ScenarioQp {
  SlackSeparableQp qp;
  int num_agents = 0;
  int input_dim = 0;
  int horizon = 0;
  int num_scenarios = 0;
  /// u layout: agents ascending, then steps, i.e. u_i(k) sits at
  /// (i * horizon + k) * input_dim.
  int u_index(int agent, int k) const {
    return (agent * horizon + k) * input_dim;
  }
};

ScenarioQp build_scenario_qp(const GraphTopology& topology,
                             const SchemeOptions& opts,
                             const ScenarioSet& scenarios,
                             const JointState& s);

/// Greedy first inputs of the scenario MPC.
std::vector<Eigen::VectorXd> scenario_mpc_policy(const GraphTopology& topology,
                                                 const SchemeOptions& opts,
                                                 const ScenarioSet& scenarios,
                                                 const JointState& s);

/// Greedy first inputs of the (possibly learned) MPC scheme; `distributed`
/// selects consensus-ADMM evaluation versus the monolithic solve.
std::vector<Eigen::VectorXd> nominal_mpc_policy(const MpcScheme& scheme,
                                                const JointState& s,
                                                bool distributed = true,
                                                const EvalOptions& ev = {});

using Policy = std::function<std::vector<Eigen::VectorXd>(const JointState&)>;

struct ClosedLoopResult {
  Eigen::VectorXd episode_costs;      // sum of mean stage costs per episode
  std::vector<int> violations;        // strict state-box exits per episode
  std::vector<JointState> final_states;
};

/// Rolls the policy out on the true noisy plant for `episodes` runs of
/// `steps` steps each, starting from `initial` (shared across episodes so
/// controllers face the same task; the noise still differs per episode).
ClosedLoopResult closed_loop_eval(const Policy& policy, AcademicEnv& env,
                                  const JointState& initial, int steps,
                                  int episodes);

}  // namespace dmpcrl
