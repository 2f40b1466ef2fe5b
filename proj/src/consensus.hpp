#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qp.hpp"
#include "topology.hpp"

namespace dmpcrl {

/// One agent's local problem for the consensus scheme. The base QP covers
/// the agent's own decision variables plus its local copies of neighbors'
/// trajectories. `blocks` marks which index ranges of the QP variable
/// vector are consensus variables and which agent owns them: the agent's
/// own trajectory block first, then one copy block per neighbor in
/// ascending neighbor index. Variables outside every block (inputs,
/// slacks) are private and never averaged.
struct LocalSubproblem {
  struct Block {
    int owner = -1;  // agent whose trajectory this range holds
    int start = 0;   // first index in the QP variable vector
    int len = 0;
  };

  QuadProgram qp;
  std::vector<Block> blocks;

  int consensus_dim() const {
    int d = 0;
    for (const auto& b : blocks) d += b.len;
    return d;
  }
};

struct AdmmOptions {
  double rho = 0.5;
  int iterations = 50;
  /// Keep per-iteration copies of each agent's local-QP duals and
  /// consensus multipliers (for convergence diagnostics).
  bool record_history = false;
  double qp_tol = 1e-10;
};

struct AdmmAgentResult {
  KktSolution kkt;            // final local solve (Lagrange multipliers of
                              // the local constraints approximate the
                              // centralized multipliers)
  Eigen::VectorXd y;          // consensus multipliers, stacked block order
  double local_objective = 0; // base cost at the final primal point
};

struct AdmmResult {
  std::vector<AdmmAgentResult> agents;
  std::vector<Eigen::VectorXd> z;  // global copy per owner agent

  // One entry per iteration.
  std::vector<double> primal_residuals;  // ||x_tilde - z_tilde|| stacked
  std::vector<double> dual_residuals;    // rho * ||z_new - z_old||
  std::vector<double> objectives;        // sum of base local objectives

  // Filled when AdmmOptions::record_history is set: [iteration][agent].
  std::vector<std::vector<Eigen::VectorXd>> eq_dual_history;
  std::vector<std::vector<Eigen::VectorXd>> ineq_dual_history;
  std::vector<std::vector<Eigen::VectorXd>> y_history;

  double total_objective() const;
};

/// Synchronous consensus ADMM over the network. Each round solves every
/// agent's local QP (with the multiplier term and proximity penalty on the
/// consensus blocks), averages each owner's trajectory over the owner and
/// all copy holders, and ascends the consensus multipliers. Copies, global
/// copies, and multipliers all start from zero.
///
/// A block participates in consensus only when its owner's trajectory is
/// held in more than one place; an agent nobody copies keeps a plain local
/// problem and the rounds leave it at its independent optimum.
AdmmResult admm_solve(const std::vector<LocalSubproblem>& subproblems,
                      const GraphTopology& topology,
                      const AdmmOptions& opts = AdmmOptions());

}  // namespace dmpcrl
