#include "linsys.hpp"

#include "errors.hpp"

namespace dmpcrl {

int AgentParams::flat_size() const {
  const int n = state_dim();
  const int m = input_dim();
  const int nbrs = static_cast<int>(dynamics.A_neighbors.size());
  return 1 + 3 * n + (n + m) + n * n + n * m + nbrs * n * n;
}

Eigen::VectorXd AgentParams::flatten() const {
  const int n = state_dim();
  const int m = input_dim();
  Eigen::VectorXd v(flat_size());
  int at = 0;
  v(at++) = V0;
  v.segment(at, n) = x_lb_shift;
  at += n;
  v.segment(at, n) = x_ub_shift;
  at += n;
  v.segment(at, n) = dynamics.b;
  at += n;
  v.segment(at, n + m) = f;
  at += n + m;
  v.segment(at, n * n) = Eigen::Map<const Eigen::VectorXd>(dynamics.A.data(), n * n);
  at += n * n;
  v.segment(at, n * m) = Eigen::Map<const Eigen::VectorXd>(dynamics.B.data(), n * m);
  at += n * m;
  for (const auto& [j, Aij] : dynamics.A_neighbors) {
    v.segment(at, n * n) = Eigen::Map<const Eigen::VectorXd>(Aij.data(), n * n);
    at += n * n;
  }
  return v;
}

void AgentParams::unflatten(const Eigen::VectorXd& v) {
  if (v.size() != flat_size())
    throw DimensionError("AgentParams::unflatten: size mismatch");
  const int n = state_dim();
  const int m = input_dim();
  int at = 0;
  V0 = v(at++);
  x_lb_shift = v.segment(at, n);
  at += n;
  x_ub_shift = v.segment(at, n);
  at += n;
  dynamics.b = v.segment(at, n);
  at += n;
  f = v.segment(at, n + m);
  at += n + m;
  dynamics.A = Eigen::Map<const Eigen::MatrixXd>(v.segment(at, n * n).data(), n, n);
  at += n * n;
  dynamics.B = Eigen::Map<const Eigen::MatrixXd>(v.segment(at, n * m).data(), n, m);
  at += n * m;
  for (auto& [j, Aij] : dynamics.A_neighbors) {
    Aij = Eigen::Map<const Eigen::MatrixXd>(v.segment(at, n * n).data(), n, n);
    at += n * n;
  }
}

Eigen::VectorXd predict(const AgentParams& params, const Eigen::VectorXd& s_i,
                        const Eigen::VectorXd& a_i,
                        const std::map<int, Eigen::VectorXd>& neighbor_states) {
  const auto& dyn = params.dynamics;
  if (neighbor_states.size() != dyn.A_neighbors.size())
    throw DimensionError("predict: neighbor set does not match the model");
  Eigen::VectorXd next = dyn.A * s_i + dyn.B * a_i + dyn.b;
  for (const auto& [j, Aij] : dyn.A_neighbors) {
    const auto it = neighbor_states.find(j);
    if (it == neighbor_states.end())
      throw DimensionError("predict: missing state for neighbor " + std::to_string(j));
    next += Aij * it->second;
  }
  return next;
}

namespace {

DynamicsParams academic_true_model(const std::vector<int>& neighbors) {
  DynamicsParams dyn;
  dyn.A.resize(2, 2);
  dyn.A << 0.9, 0.35, 0.0, 1.1;
  dyn.B.resize(2, 1);
  dyn.B << 0.0813, 0.2;
  dyn.b = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd Aij(2, 2);
  Aij << 0.0, 0.0, 0.0, -0.1;
  for (int j : neighbors) dyn.A_neighbors[j] = Aij;
  return dyn;
}

}  // namespace

AcademicEnv::AcademicEnv(const GraphTopology& topology)
    : AcademicEnv(topology, Options{}) {}

AcademicEnv::AcademicEnv(const GraphTopology& topology, Options opts)
    : topology_(topology), opts_(std::move(opts)), rng_(opts_.seed) {
  for (int i = 0; i < topology_.num_agents; ++i)
    true_dyn_.push_back(academic_true_model(topology_.neighbors(i)));
}

double AcademicEnv::stage_cost(const Eigen::VectorXd& s_i,
                               const Eigen::VectorXd& u_i) const {
  double cost = s_i.squaredNorm() + 0.5 * u_i.squaredNorm();
  for (int c = 0; c < s_i.size(); ++c) {
    cost += std::max(0.0, opts_.omega(c) * (opts_.s_lb(c) - s_i(c)));
    cost += std::max(0.0, opts_.omega(c) * (s_i(c) - opts_.s_ub(c)));
  }
  return cost;
}

std::pair<JointState, Eigen::VectorXd> AcademicEnv::step(
    const JointState& state, const std::vector<Eigen::VectorXd>& actions) {
  const int M = num_agents();
  if (static_cast<int>(state.s.size()) != M ||
      static_cast<int>(actions.size()) != M)
    throw DimensionError("AcademicEnv::step: joint state/action size mismatch");
  Eigen::VectorXd costs(M);
  JointState next;
  next.t = state.t + 1;
  next.s.resize(M);
  std::uniform_real_distribution<double> noise(opts_.noise_lb, opts_.noise_ub);
  for (int i = 0; i < M; ++i) {
    costs(i) = stage_cost(state.s[i], actions[i]);
    const auto& dyn = true_dyn_[i];
    Eigen::VectorXd s_next = dyn.A * state.s[i] + dyn.B * actions[i];
    for (const auto& [j, Aij] : dyn.A_neighbors) s_next += Aij * state.s[j];
    if (opts_.noise_ub > opts_.noise_lb)
      s_next(0) += noise(rng_);
    else
      s_next(0) += opts_.noise_lb;  // zero-width interval
    next.s[i] = s_next;
  }
  return {next, costs};
}

JointState AcademicEnv::reset(const Eigen::VectorXd& initial_state) {
  JointState st;
  st.t = 0;
  st.s.assign(num_agents(), initial_state);
  return st;
}

JointState AcademicEnv::reset_uniform() {
  JointState st;
  st.t = 0;
  st.s.resize(num_agents());
  for (int i = 0; i < num_agents(); ++i) {
    Eigen::VectorXd s(state_dim());
    for (int c = 0; c < state_dim(); ++c) {
      std::uniform_real_distribution<double> d(opts_.s_lb(c), opts_.s_ub(c));
      s(c) = d(rng_);
    }
    st.s[i] = s;
  }
  return st;
}

DynamicsParams nominal_inaccurate_model(const std::vector<int>& neighbors) {
  DynamicsParams dyn;
  dyn.A.resize(2, 2);
  dyn.A << 1.0, 0.25, 0.0, 1.0;
  dyn.B.resize(2, 1);
  dyn.B << 0.0312, 0.25;
  dyn.b = Eigen::VectorXd::Zero(2);
  for (int j : neighbors) dyn.A_neighbors[j] = Eigen::MatrixXd::Zero(2, 2);
  return dyn;
}

DynamicsParams sample_inaccurate_model(std::mt19937& rng,
                                       const std::vector<int>& neighbors) {
  std::uniform_real_distribution<double> a_pert(-0.1, 0.1);
  std::uniform_real_distribution<double> b1_pert(0.0, 0.075);
  std::uniform_real_distribution<double> b2_pert(-0.075, 0.0);
  std::uniform_real_distribution<double> c_pert(-0.1, 0.0);
  DynamicsParams dyn = nominal_inaccurate_model(neighbors);
  dyn.A(0, 0) += a_pert(rng);
  dyn.A(0, 1) += a_pert(rng);
  dyn.A(1, 1) += a_pert(rng);
  dyn.B(0, 0) += b1_pert(rng);
  dyn.B(1, 0) += b2_pert(rng);
  const double c = c_pert(rng);
  for (auto& [j, Aij] : dyn.A_neighbors) Aij(1, 1) = c;
  return dyn;
}

}  // namespace dmpcrl
