#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace dmpcrl {

/// Coupling graph between agents together with the doubly stochastic
/// matrix used for average consensus.
///
/// Edges are ordered pairs (i, j), zero-based. An agent is never in its
/// own neighborhood and the graph is required to be connected.
struct GraphTopology {
  int num_agents = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> neighborhoods;  // sorted ascending per agent
  Eigen::MatrixXd consensus_matrix;             // doubly stochastic

  const std::vector<int>& neighbors(int i) const { return neighborhoods[i]; }
  int degree(int i) const { return static_cast<int>(neighborhoods[i].size()); }
};

/// Chain graph 0 <-> 1 <-> ... <-> M-1 with bidirectional edges and a
/// Metropolis-weight consensus matrix. Requires num_agents >= 2.
GraphTopology build_chain(int num_agents);

/// General constructor from an undirected edge list. Communication is
/// assumed symmetric: an edge (i, j) makes i and j neighbors of each other.
GraphTopology build_from_edges(int num_agents,
                               const std::vector<std::pair<int, int>>& edges);

/// One synchronous consensus round: returns P * values. Preserves the sum
/// of the entries up to round-off.
Eigen::VectorXd gac_round(const Eigen::VectorXd& values,
                          const GraphTopology& topology);

/// Applies gac_round a fixed number of times. With initial guesses
/// M * F_i the limit is the network-wide sum of the F_i.
Eigen::VectorXd gac_consensus(const Eigen::VectorXd& initial,
                              const GraphTopology& topology, int iterations);

}  // namespace dmpcrl
