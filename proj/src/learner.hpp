#pragma once

#include <Eigen/Dense>
#include <deque>
#include <random>
#include <vector>

#include "approximator.hpp"
#include "linsys.hpp"

namespace dmpcrl {

/// One time step's learning sample: the TD error and each agent's
/// sensitivity of the value with respect to its own parameters.
struct Experience {
  double delta = 0.0;
  std::vector<Eigen::VectorXd> grads;  // flattened theta_i layout per agent
  int t = 0;
};

struct LearnerConfig {
  double alpha0 = 6e-5;        // learning rate
  double alpha_decay = 0.9996; // per time step
  double eps0 = 0.7;           // exploration probability
  double eps_decay = 0.99;
  double perturb_lb = -1.0;    // first-input objective tilt interval
  double perturb_ub = 1.0;
  int er_window = 15;          // experiences averaged per update
  int update_period = 2;       // steps between parameter updates
  int admm_iterations = 50;    // T_A
  int gac_iterations = 100;    // T_C
  double rho = 0.5;
  /// Evaluate values/duals with consensus ADMM (the distributed algorithm)
  /// or with the monolithic solve (the centralized reference).
  bool distributed = true;
  /// Optional per-agent cap on ||alpha * delta * grad||_inf; 0 disables.
  double max_update_norm = 0.0;
  /// Parameter snapshot cadence in steps (0: only first and last).
  int snapshot_every = 50;
};

/// delta = L + gamma * V(s') - Q(s, a).
double td_error(double stage_cost, double v_next, double q_current,
                double gamma);

/// Closed-form schedules.
double alpha_at(const LearnerConfig& cfg, int t);
double epsilon_at(const LearnerConfig& cfg, int t);

/// Sensitivity of agent i's value contribution with respect to its own
/// flattened parameters, evaluated at the primal-dual solution of the
/// Q-evaluation (local layout, copies included). `with_action` must match
/// the evaluation that produced `kkt` (it shifts the dynamics dual rows).
/// Throws StaleDuals when the solution's KKT residual exceeds 1e-8.
Eigen::VectorXd lagrangian_gradient(const MpcScheme& scheme, int agent,
                                    const KktSolution& kkt, bool with_action);

/// theta + alpha * delta_bar * grad_bar, with the optional cap applied.
Eigen::VectorXd local_update(const Eigen::VectorXd& theta, double delta_bar,
                             const Eigen::VectorXd& grad_bar, double alpha,
                             double max_update_norm = 0.0);

/// Joint action selection: each agent independently perturbs its policy
/// objective with probability eps via a uniform linear tilt on u_i(0).
struct ExplorationResult {
  std::vector<Eigen::VectorXd> actions;
  std::vector<Eigen::VectorXd> tilts;  // zero where not exploring
  std::vector<int> explored;           // agent indices that perturbed
  EvaluationResult evaluation;         // the (possibly tilted) policy solve
};
ExplorationResult explore_action(const MpcScheme& scheme, const JointState& s,
                                 double eps, std::mt19937& rng,
                                 const LearnerConfig& cfg);

struct TrainStep {
  int t = 0;
  std::vector<Eigen::VectorXd> state;
  std::vector<Eigen::VectorXd> action;
  Eigen::VectorXd local_costs;
  double delta = 0.0;
  double td_q = 0.0;
  double td_v_next = 0.0;
  double alpha = 0.0;
  double eps = 0.0;
  int num_explored = 0;
};

struct TrainLog {
  std::vector<TrainStep> steps;
  /// (step, per-agent flattened theta) at the configured cadence, always
  /// including step 0 and the final step.
  std::vector<std::pair<int, std::vector<Eigen::VectorXd>>> snapshots;
};

/// Q-learning on the scheme parameters: per step evaluates the policy
/// (with exploration tilts), the Q-function at the taken action, steps the
/// plant, evaluates V at the next state, stores the experience, and applies
/// window-averaged local updates at the configured period. Mutates `scheme`
/// parameters and `env` state/rng.
TrainLog train(AcademicEnv& env, MpcScheme& scheme, const LearnerConfig& cfg,
               int steps, const JointState& initial_state, std::mt19937& rng);

}  // namespace dmpcrl
