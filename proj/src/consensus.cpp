#include "consensus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace dmpcrl {

double AdmmResult::total_objective() const {
  double v = 0.0;
  for (const auto& a : agents) v += a.local_objective;
  return v;
}

namespace {

void validate_subproblems(const std::vector<LocalSubproblem>& subproblems,
                          const GraphTopology& topology,
                          std::vector<int>& holder_count,
                          std::vector<int>& owner_len) {
  const int M = topology.num_agents;
  if (static_cast<int>(subproblems.size()) != M)
    throw DimensionError("admm_solve: one subproblem per agent required");
  holder_count.assign(M, 0);
  owner_len.assign(M, -1);
  for (int i = 0; i < M; ++i) {
    const auto& sp = subproblems[i];
    const int n = sp.qp.dim();
    int prev_owner = -1;
    for (std::size_t k = 0; k < sp.blocks.size(); ++k) {
      const auto& b = sp.blocks[k];
      if (b.owner < 0 || b.owner >= M)
        throw DimensionError("admm_solve: block owner out of range");
      if (b.start < 0 || b.len < 0 || b.start + b.len > n)
        throw DimensionError("admm_solve: block range outside the QP");
      if (k == 0) {
        if (b.owner != i)
          throw DimensionError(
              "admm_solve: first block must be the agent's own trajectory");
      } else {
        if (b.owner <= prev_owner && k > 1)
          throw DimensionError(
              "admm_solve: copy blocks must come in ascending owner order");
        const auto& nbrs = topology.neighbors(i);
        if (std::find(nbrs.begin(), nbrs.end(), b.owner) == nbrs.end())
          throw DimensionError("admm_solve: copy block of a non-neighbor");
      }
      prev_owner = (k == 0) ? -1 : b.owner;
      if (owner_len[b.owner] == -1) {
        owner_len[b.owner] = b.len;
      } else if (owner_len[b.owner] != b.len) {
        throw DimensionError(
            "admm_solve: inconsistent trajectory length for one owner");
      }
      ++holder_count[b.owner];
    }
  }
}

}  // namespace

AdmmResult admm_solve(const std::vector<LocalSubproblem>& subproblems,
                      const GraphTopology& topology, const AdmmOptions& opts) {
  if (opts.rho <= 0.0) throw ConfigError("admm_solve: rho must be positive");
  if (opts.iterations < 1)
    throw ConfigError("admm_solve: at least one iteration required");
  const int M = topology.num_agents;
  std::vector<int> holder_count, owner_len;
  validate_subproblems(subproblems, topology, holder_count, owner_len);
  const double rho = opts.rho;

  // A trajectory shared by a single holder needs no agreement machinery.
  auto active = [&](const LocalSubproblem::Block& b) {
    return holder_count[b.owner] >= 2;
  };

  // Prepared solvers over the rho-augmented Hessians; the Hessian and
  // constraint matrices are fixed across iterations, only the linear term
  // moves.
  std::vector<ActiveSetSolver> solvers;
  solvers.reserve(M);
  for (int i = 0; i < M; ++i) {
    const auto& sp = subproblems[i];
    Eigen::MatrixXd H = sp.qp.H;
    for (const auto& b : sp.blocks)
      if (active(b))
        H.diagonal().segment(b.start, b.len).array() += rho;
    solvers.emplace_back(H, sp.qp.Aeq, sp.qp.Ain);
  }

  AdmmResult result;
  result.agents.resize(M);
  result.z.resize(M);
  for (int l = 0; l < M; ++l)
    result.z[l] = Eigen::VectorXd::Zero(std::max(owner_len[l], 0));
  std::vector<Eigen::VectorXd> y(M), x(M);
  for (int i = 0; i < M; ++i)
    y[i] = Eigen::VectorXd::Zero(subproblems[i].consensus_dim());

  int consecutive_growth = 0;
  for (int iter = 0; iter < opts.iterations; ++iter) {
    // Local minimizations.
    for (int i = 0; i < M; ++i) {
      const auto& sp = subproblems[i];
      Eigen::VectorXd g = sp.qp.g;
      int at = 0;
      for (const auto& b : sp.blocks) {
        if (active(b))
          g.segment(b.start, b.len) +=
              y[i].segment(at, b.len) - rho * result.z[b.owner];
        at += b.len;
      }
      result.agents[i].kkt =
          solvers[i].solve(g, sp.qp.c0, sp.qp.beq, sp.qp.bin, opts.qp_tol);
      x[i] = result.agents[i].kkt.x;
    }

    // Global-copy averaging.
    double z_shift_sq = 0.0;
    for (int l = 0; l < M; ++l) {
      if (owner_len[l] <= 0 || holder_count[l] < 2) {
        // Track the sole holder exactly, if any.
        for (int i = 0; i < M; ++i)
          for (const auto& b : subproblems[i].blocks)
            if (b.owner == l) result.z[l] = x[i].segment(b.start, b.len);
        continue;
      }
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(owner_len[l]);
      for (int i = 0; i < M; ++i)
        for (const auto& b : subproblems[i].blocks)
          if (b.owner == l) sum += x[i].segment(b.start, b.len);
      Eigen::VectorXd z_new = sum / holder_count[l];
      z_shift_sq += (z_new - result.z[l]).squaredNorm();
      result.z[l] = std::move(z_new);
    }

    // Multiplier ascent and primal residual.
    double primal_sq = 0.0;
    for (int i = 0; i < M; ++i) {
      int at = 0;
      for (const auto& b : subproblems[i].blocks) {
        if (active(b)) {
          const Eigen::VectorXd gap =
              x[i].segment(b.start, b.len) - result.z[b.owner];
          y[i].segment(at, b.len) += rho * gap;
          primal_sq += gap.squaredNorm();
        }
        at += b.len;
      }
      result.agents[i].local_objective = objective_value(subproblems[i].qp, x[i]);
    }
    const double primal = std::sqrt(primal_sq);
    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(rho * std::sqrt(z_shift_sq));
    result.objectives.push_back(result.total_objective());

    if (!std::isfinite(primal))
      throw DivergenceError("admm_solve: non-finite residual at iteration " +
                            std::to_string(iter + 1));
    const int lag = 20;
    const auto& tr = result.primal_residuals;
    const int t = static_cast<int>(tr.size()) - 1;
    consecutive_growth = (t > 0 && tr[t] > tr[t - 1]) ? consecutive_growth + 1 : 0;
    if (consecutive_growth >= lag && tr[t] > 10.0 * tr[t - lag])
      throw DivergenceError(
          "admm_solve: primal residual grew more than tenfold over " +
          std::to_string(lag) + " iterations (iteration " +
          std::to_string(t + 1) + ")");

    if (opts.record_history) {
      std::vector<Eigen::VectorXd> eq(M), ineq(M), ys(M);
      for (int i = 0; i < M; ++i) {
        eq[i] = result.agents[i].kkt.eq_duals;
        ineq[i] = result.agents[i].kkt.ineq_duals;
        ys[i] = y[i];
      }
      result.eq_dual_history.push_back(std::move(eq));
      result.ineq_dual_history.push_back(std::move(ineq));
      result.y_history.push_back(std::move(ys));
    }
  }

  for (int i = 0; i < M; ++i) result.agents[i].y = y[i];
  return result;
}

}  // namespace dmpcrl
