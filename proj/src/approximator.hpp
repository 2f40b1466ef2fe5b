#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "consensus.hpp"
#include "linsys.hpp"
#include "qp.hpp"
#include "topology.hpp"

namespace dmpcrl {

struct SchemeOptions {
  int horizon = 10;  // N; stage indices k = 0..N-1
  double gamma = 0.9;
  Eigen::VectorXd omega = Eigen::Vector2d(100.0, 100.0);  // slack weight
  Eigen::VectorXd s_lb = Eigen::Vector2d(0.0, -1.0);      // state box
  Eigen::VectorXd s_ub = Eigen::Vector2d(1.0, 1.0);
  double u_lb = -1.0;
  double u_ub = 1.0;
  /// Quadratic regularizers restoring strict convexity: the stage cost is
  /// linear in the slacks, and the terminal state carries no cost of its
  /// own. Both are far below the cost scale.
  double sigma_reg = 1e-6;
  double terminal_reg = 1e-6;
  /// The running linear cost f'[x;u] is undiscounted by default; set to
  /// apply the gamma^k factor to it as well.
  bool discount_linear_term = false;
  /// Whether the soft state box also constrains x(0). The initial state is
  /// fixed by x(0) = s, so those rows never affect the optimizing inputs;
  /// they only add the current state's bound excursion, priced at the slack
  /// weight, as a state-dependent constant to the value. That constant
  /// double-counts the violation the environment already charges through
  /// the realized stage cost and feeds bound-dual spikes into the parameter
  /// sensitivities, which systematically erodes learned constraint-shift
  /// buffers. Default off: the box constrains predicted states only.
  bool constrain_initial_state = false;
};

struct EvalOptions {
  int admm_iterations = 50;  // T_A
  int gac_iterations = 100;  // T_C
  double rho = 0.5;
  bool record_history = false;
  double qp_tol = 1e-10;
};

/// Result of one Q/V/policy evaluation. For the distributed path, each
/// agent's KktSolution is its final local solve (primal over the local
/// layout, duals of the local constraints). For the centralized path the
/// same per-agent views are reconstructed from the monolithic solution so
/// downstream consumers are agnostic to how the value was computed.
struct EvaluationResult {
  double value = 0.0;                       // Q_theta or V_theta
  Eigen::VectorXd local_objectives;         // per-agent F_i at the optimum
  std::vector<Eigen::VectorXd> first_inputs;  // u_i(0)
  std::vector<KktSolution> agent_kkt;       // local-layout views
  /// Per-agent value estimates after the averaging rounds (M * F_i fed to
  /// GAC). With zero rounds these differ; the spread is a diagnostic.
  Eigen::VectorXd value_estimates;
  double estimate_spread = 0.0;
  /// Distributed path only.
  AdmmResult admm;
};

/// The parametrized distributed MPC scheme: quadratic tracking cost with
/// learnable linear terms, learnable affine dynamics with neighbor
/// coupling, softened state box, hard input box.
///
/// Local variable layout per agent (fixed, also used for the per-agent
/// views of the centralized solution):
///   [ x(0..N) | u(0..N-1) | sigma(0..N-1) | copies x_j(0..N), j asc ]
/// Constraint row order per agent:
///   equalities:   x(0)=s, [u(0)=a,] dynamics k=0..N-1
///   inequalities: state lower (k asc), state upper, input lower,
///                 input upper, sigma >= 0.
class MpcScheme {
 public:
  MpcScheme(const GraphTopology& topology, std::vector<AgentParams> params,
            SchemeOptions opts);

  const GraphTopology& topology() const { return topology_; }
  const SchemeOptions& options() const { return opts_; }
  int num_agents() const { return topology_.num_agents; }
  int horizon() const { return opts_.horizon; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }

  const AgentParams& params(int i) const { return params_.at(i); }
  void set_params(int i, const AgentParams& p);

  // --- local layout helpers -------------------------------------------
  int x_offset(int k) const { return n_ * k; }
  int u_offset(int k) const { return n_ * (horizon() + 1) + m_ * k; }
  int sigma_offset(int k) const {
    return n_ * (horizon() + 1) + m_ * horizon() + n_ * k;
  }
  int copy_offset(int agent, int neighbor) const;
  int own_dim() const {  // without copies
    return n_ * (horizon() + 1) + (m_ + n_) * horizon();
  }
  int local_dim(int agent) const;

  // --- constraint row helpers (per agent, with_action = Q variant) -----
  int num_eq_rows(bool with_action) const {
    return n_ + (with_action ? m_ : 0) + n_ * horizon();
  }
  int dyn_row(int k, bool with_action) const {
    return n_ + (with_action ? m_ : 0) + n_ * k;
  }
  int num_ineq_rows() const { return (3 * n_ + 2 * m_) * horizon(); }
  int state_lo_row(int k) const { return n_ * k; }
  int state_hi_row(int k) const { return n_ * horizon() + n_ * k; }
  int input_lo_row(int k) const { return 2 * n_ * horizon() + m_ * k; }
  int input_hi_row(int k) const {
    return 2 * n_ * horizon() + m_ * horizon() + m_ * k;
  }
  int sigma_row(int k) const {
    return 2 * (n_ + m_) * horizon() + n_ * k;
  }

  /// Agent i's base QP plus consensus-block map. `a_i` null gives the
  /// V/policy variant (no first-input equality). `u0_tilt` adds a linear
  /// perturbation on u(0) (exploration).
  LocalSubproblem build_local_subproblem(
      int i, const Eigen::VectorXd& s_i, const Eigen::VectorXd* a_i,
      const Eigen::VectorXd* u0_tilt = nullptr) const;

  /// Monolithic joint QP over all agents, no copies. Variables are the
  /// per-agent own blocks stacked ascending; constraint rows are grouped
  /// per agent in the local order.
  QuadProgram build_centralized_qp(
      const JointState& s, const std::vector<Eigen::VectorXd>* a,
      const std::vector<Eigen::VectorXd>* u0_tilt = nullptr) const;

  /// Algorithm: T_A consensus-ADMM rounds, local objective evaluation,
  /// T_C averaging rounds on M * F_i.
  EvaluationResult evaluate_distributed(
      const JointState& s, const std::vector<Eigen::VectorXd>* a,
      const EvalOptions& eval_opts = EvalOptions(),
      const std::vector<Eigen::VectorXd>* u0_tilt = nullptr) const;

  /// Exact oracle: solves the monolithic QP and partitions value, primal
  /// blocks and multipliers per agent.
  EvaluationResult evaluate_centralized(
      const JointState& s, const std::vector<Eigen::VectorXd>* a,
      const std::vector<Eigen::VectorXd>* u0_tilt = nullptr,
      double qp_tol = 1e-10) const;

 private:
  void fill_own_cost(int i, Eigen::MatrixXd& H, Eigen::VectorXd& g,
                     double& c0, int base,
                     const Eigen::VectorXd* u0_tilt) const;

  GraphTopology topology_;
  std::vector<AgentParams> params_;
  SchemeOptions opts_;
  int n_ = 0;
  int m_ = 0;
};

}  // namespace dmpcrl
