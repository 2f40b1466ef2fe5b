#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "errors.hpp"
#include "topology.hpp"

using namespace dmpcrl;

TEST_CASE("chain of 3 has the expected edges and neighborhoods") {
  const auto g = build_chain(3);
  CHECK(g.num_agents == 3);
  CHECK(g.edges.size() == 4);  // (0,1),(1,0),(1,2),(2,1)
  CHECK(g.neighbors(0) == std::vector<int>{1});
  CHECK(g.neighbors(1) == std::vector<int>{0, 2});
  CHECK(g.neighbors(2) == std::vector<int>{1});
}

TEST_CASE("metropolis weights on a 2-chain") {
  const auto g = build_chain(2);
  CHECK(g.consensus_matrix(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g.consensus_matrix(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g.consensus_matrix(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g.consensus_matrix(1, 1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("consensus matrix is doubly stochastic with nonnegative entries") {
  for (int M : {2, 3, 4, 6}) {
    const auto g = build_chain(M);
    for (int i = 0; i < M; ++i) {
      CHECK(std::abs(g.consensus_matrix.row(i).sum() - 1.0) < 1e-12);
      CHECK(std::abs(g.consensus_matrix.col(i).sum() - 1.0) < 1e-12);
      for (int j = 0; j < M; ++j) CHECK(g.consensus_matrix(i, j) >= 0.0);
    }
  }
}

TEST_CASE("sparsity matches the graph") {
  const auto g = build_chain(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (g.consensus_matrix(i, j) == 0.0) continue;
      const bool allowed = i == j || std::abs(i - j) == 1;
      CHECK(allowed);
    }
}

TEST_CASE("rejects degenerate graphs") {
  CHECK_THROWS_AS(build_chain(1), ConfigError);
  CHECK_THROWS_AS(build_from_edges(3, {{0, 0}}), ConfigError);
  // disconnected: 0-1 only, agent 2 isolated
  CHECK_THROWS_AS(build_from_edges(3, {{0, 1}}), ConfigError);
}

TEST_CASE("gac_round keeps constant vectors fixed and preserves the sum") {
  const auto g = build_chain(5);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(5, 3.25);
  CHECK((gac_round(c, g) - c).lpNorm<Eigen::Infinity>() < 1e-14);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-10, 10);
  Eigen::VectorXd v(5);
  for (int i = 0; i < 5; ++i) v(i) = d(rng);
  CHECK(std::abs(gac_round(v, g).sum() - v.sum()) < 1e-12);
}

TEST_CASE("gac_round rejects a length mismatch") {
  const auto g = build_chain(3);
  CHECK_THROWS_AS(gac_round(Eigen::VectorXd::Zero(4), g), DimensionError);
}

TEST_CASE("iterated rounds converge to the average") {
  const auto g = build_chain(3);
  Eigen::VectorXd v(3);
  v << 3.0, 0.0, 0.0;
  const Eigen::VectorXd out = gac_consensus(v, g, 100);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(out(i) - 1.0) < 1e-10);
}

TEST_CASE("scaled local values agree on the network sum") {
  // Initial guess M * F_i, limit sum_i F_i.
  const auto g = build_chain(3);
  Eigen::VectorXd v(3);
  v << 3.0 * 2.0, 3.0 * 4.0, 3.0 * 6.0;
  const Eigen::VectorXd out = gac_consensus(v, g, 100);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(out(i) - 12.0) < 1e-8);
}

TEST_CASE("zero iterations returns the input") {
  const auto g = build_chain(3);
  Eigen::VectorXd v(3);
  v << 1.0, -2.0, 5.0;
  CHECK((gac_consensus(v, g, 0) - v).norm() == 0.0);
}

TEST_CASE("max-min spread is non-increasing and vanishes") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int M : {2, 3, 4, 6}) {
    const auto g = build_chain(M);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd v(M);
      for (int i = 0; i < M; ++i) v(i) = d(rng);
      const double mean = v.mean();
      double spread = v.maxCoeff() - v.minCoeff();
      for (int t = 0; t < 100; ++t) {
        v = gac_round(v, g);
        const double s = v.maxCoeff() - v.minCoeff();
        CHECK(s <= spread + 1e-13);
        spread = s;
      }
      // Longer chains mix slowly; give them extra rounds before the
      // convergence check.
      v = gac_consensus(v, g, 1000);
      for (int i = 0; i < M; ++i) CHECK(std::abs(v(i) - mean) < 1e-8);
    }
  }
}
