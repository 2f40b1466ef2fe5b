#pragma once

#include <Eigen/Dense>
#include <map>
#include <random>
#include <vector>

#include "topology.hpp"

namespace dmpcrl {

/// Parametrized affine prediction model of one agent:
///   s_i(t+1) = A s_i + B a_i + sum_j A_ij s_j + b.
struct DynamicsParams {
  Eigen::MatrixXd A;                     // n x n
  Eigen::MatrixXd B;                     // n x m
  std::map<int, Eigen::MatrixXd> A_neighbors;  // neighbor index -> n x n
  Eigen::VectorXd b;                     // n

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
};

/// Learnable parameter vector of one agent. Mirrors
/// theta_i = (V_{i,0}, x_lb, x_ub, b, f, A, B, {A_ij}).
struct AgentParams {
  double V0 = 0.0;
  Eigen::VectorXd x_lb_shift;  // n
  Eigen::VectorXd x_ub_shift;  // n
  Eigen::VectorXd f;           // n + m
  DynamicsParams dynamics;

  int state_dim() const { return dynamics.state_dim(); }
  int input_dim() const { return dynamics.input_dim(); }

  /// Flattened length: 1 + 3n + (n+m) + n*n + n*m + |N_i|*n*n.
  int flat_size() const;
  /// Flattens into the fixed layout
  /// [V0; x_lb; x_ub; b; f; vec(A); vec(B); vec(A_ij) for j ascending]
  /// (matrices column-major).
  Eigen::VectorXd flatten() const;
  /// Inverse of flatten; neighbor keys keep their current values.
  void unflatten(const Eigen::VectorXd& v);
};

/// Joint state of the network at one time index.
struct JointState {
  std::vector<Eigen::VectorXd> s;  // one n-vector per agent
  int t = 0;
};

/// One-step prediction with the parametrized model. neighbor_states keys
/// must equal the agent's neighborhood.
Eigen::VectorXd predict(const AgentParams& params, const Eigen::VectorXd& s_i,
                        const Eigen::VectorXd& a_i,
                        const std::map<int, Eigen::VectorXd>& neighbor_states);

/// The academic three-agent chain environment: true dynamics, additive
/// noise on the first state component, and the soft-constrained stage cost.
class AcademicEnv {
 public:
  struct Options {
    Eigen::VectorXd s_lb = Eigen::Vector2d(0.0, -1.0);
    Eigen::VectorXd s_ub = Eigen::Vector2d(1.0, 1.0);
    Eigen::VectorXd omega = Eigen::Vector2d(100.0, 100.0);
    double noise_lb = -0.1;
    double noise_ub = 0.0;
    unsigned seed = 1;
  };

  explicit AcademicEnv(const GraphTopology& topology);
  AcademicEnv(const GraphTopology& topology, Options opts);

  int num_agents() const { return topology_.num_agents; }
  int state_dim() const { return 2; }
  int input_dim() const { return 1; }
  const Options& options() const { return opts_; }
  const GraphTopology& topology() const { return topology_; }

  /// True (unknown to the agents) model of agent i.
  const DynamicsParams& true_dynamics(int i) const { return true_dyn_[i]; }

  /// Stage cost L_i with per-component hinge penalties on the box.
  double stage_cost(const Eigen::VectorXd& s_i, const Eigen::VectorXd& u_i) const;

  /// Advances the plant one step under the true noisy dynamics. Returns
  /// the next joint state and the per-agent stage costs incurred at the
  /// current (state, action) pair.
  std::pair<JointState, Eigen::VectorXd> step(const JointState& state,
                                              const std::vector<Eigen::VectorXd>& actions);

  /// Fresh start for an evaluation episode: either the fixed point given
  /// in the options, or uniform over the state box.
  JointState reset(const Eigen::VectorXd& initial_state);
  JointState reset_uniform();

  void reseed(unsigned seed) { rng_.seed(seed); }
  std::mt19937& rng() { return rng_; }

 private:
  GraphTopology topology_;
  Options opts_;
  std::vector<DynamicsParams> true_dyn_;
  std::mt19937 rng_;
};

/// Nominal inaccurate model: the distribution midpoint-free instance with
/// all perturbations at zero.
DynamicsParams nominal_inaccurate_model(const std::vector<int>& neighbors);

/// Draws one model from the uniform model distribution.
DynamicsParams sample_inaccurate_model(std::mt19937& rng,
                                       const std::vector<int>& neighbors);

}  // namespace dmpcrl
