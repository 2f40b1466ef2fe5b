#include "topology.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "errors.hpp"

namespace dmpcrl {

namespace {

void check_connected(const GraphTopology& g) {
  std::vector<bool> seen(g.num_agents, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int i = q.front();
    q.pop();
    for (int j : g.neighborhoods[i]) {
      if (!seen[j]) {
        seen[j] = true;
        ++count;
        q.push(j);
      }
    }
  }
  if (count != g.num_agents) throw ConfigError("topology: graph is not connected");
}

// Metropolis-Hastings weights: P(i,j) = 1 / (1 + max(deg_i, deg_j)) on
// edges, diagonal completes each row to 1. Doubly stochastic on any
// undirected graph.
void fill_metropolis(GraphTopology& g) {
  const int m = g.num_agents;
  g.consensus_matrix = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    double off = 0.0;
    for (int j : g.neighborhoods[i]) {
      const double w = 1.0 / (1.0 + std::max(g.degree(i), g.degree(j)));
      g.consensus_matrix(i, j) = w;
      off += w;
    }
    g.consensus_matrix(i, i) = 1.0 - off;
  }
}

}  // namespace

GraphTopology build_from_edges(int num_agents,
                               const std::vector<std::pair<int, int>>& edges) {
  if (num_agents < 2) throw ConfigError("topology: need at least 2 agents");
  GraphTopology g;
  g.num_agents = num_agents;
  g.neighborhoods.resize(num_agents);
  std::set<std::pair<int, int>> edge_set;
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= num_agents || j >= num_agents)
      throw ConfigError("topology: edge index out of range");
    if (i == j) throw ConfigError("topology: self-loop (i, i) is not allowed");
    edge_set.insert({i, j});
    edge_set.insert({j, i});  // communication is symmetric
  }
  g.edges.assign(edge_set.begin(), edge_set.end());
  for (auto [i, j] : g.edges) g.neighborhoods[i].push_back(j);
  for (auto& nbrs : g.neighborhoods) std::sort(nbrs.begin(), nbrs.end());
  check_connected(g);
  fill_metropolis(g);
  return g;
}

GraphTopology build_chain(int num_agents) {
  if (num_agents < 2) throw ConfigError("topology: chain needs at least 2 agents");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < num_agents; ++i) edges.emplace_back(i, i + 1);
  return build_from_edges(num_agents, edges);
}

Eigen::VectorXd gac_round(const Eigen::VectorXd& values,
                          const GraphTopology& topology) {
  if (values.size() != topology.num_agents)
    throw DimensionError("gac_round: value vector length does not match agent count");
  return topology.consensus_matrix * values;
}

Eigen::VectorXd gac_consensus(const Eigen::VectorXd& initial,
                              const GraphTopology& topology, int iterations) {
  if (iterations < 0) throw ConfigError("gac_consensus: iterations must be >= 0");
  Eigen::VectorXd v = initial;
  for (int t = 0; t < iterations; ++t) v = gac_round(v, topology);
  return v;
}

}  // namespace dmpcrl
