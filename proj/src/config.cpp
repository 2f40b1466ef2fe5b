#include "config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "errors.hpp"

namespace dmpcrl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

double get_num(const json& j, const std::string& path, double fallback) {
  if (!j.contains(path.substr(path.rfind('.') + 1))) return fallback;
  const auto& v = j.at(path.substr(path.rfind('.') + 1));
  if (!v.is_number()) fail(path, "must be a number");
  return v.get<double>();
}

int get_int(const json& j, const std::string& path, int fallback) {
  if (!j.contains(path.substr(path.rfind('.') + 1))) return fallback;
  const auto& v = j.at(path.substr(path.rfind('.') + 1));
  if (!v.is_number_integer()) fail(path, "must be an integer");
  return v.get<int>();
}

bool get_bool(const json& j, const std::string& path, bool fallback) {
  if (!j.contains(path.substr(path.rfind('.') + 1))) return fallback;
  const auto& v = j.at(path.substr(path.rfind('.') + 1));
  if (!v.is_boolean()) fail(path, "must be a boolean");
  return v.get<bool>();
}

std::string get_str(const json& j, const std::string& path,
                    const std::string& fallback) {
  if (!j.contains(path.substr(path.rfind('.') + 1))) return fallback;
  const auto& v = j.at(path.substr(path.rfind('.') + 1));
  if (!v.is_string()) fail(path, "must be a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vec(const json& j, const std::string& path,
                        const Eigen::VectorXd& fallback) {
  const std::string key = path.substr(path.rfind('.') + 1);
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) fail(path, "must be an array of numbers");
  Eigen::VectorXd out(v.size());
  for (size_t c = 0; c < v.size(); ++c) {
    if (!v[c].is_number()) fail(path, "must be an array of numbers");
    out(c) = v[c].get<double>();
  }
  return out;
}

std::vector<Eigen::VectorXd> get_joint_state(const json& j,
                                             const std::string& path,
                                             int agents, int n) {
  const std::string key = path.substr(path.rfind('.') + 1);
  std::vector<Eigen::VectorXd> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (!v.is_array() || static_cast<int>(v.size()) != agents)
    fail(path, "must be an array with one entry per agent");
  for (int i = 0; i < agents; ++i) {
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != n)
      fail(path + "[" + std::to_string(i) + "]",
           "must be a state vector of length " + std::to_string(n));
    Eigen::VectorXd s(n);
    for (int c = 0; c < n; ++c) {
      if (!v[i][c].is_number()) fail(path, "must contain numbers");
      s(c) = v[i][c].get<double>();
    }
    out.push_back(std::move(s));
  }
  return out;
}

void require_positive(double v, const std::string& path) {
  if (!(v > 0.0)) fail(path, "must be > 0");
}

}  // namespace

EvalOptions RunConfig::eval_options() const {
  EvalOptions ev;
  ev.admm_iterations = learner.admm_iterations;
  ev.gac_iterations = learner.gac_iterations;
  ev.rho = learner.rho;
  return ev;
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: root must be an object");

  RunConfig cfg;
  const json empty = json::object();
  auto section = [&](const char* name) -> const json& {
    if (!root.contains(name)) return empty;
    if (!root.at(name).is_object()) fail(name, "must be an object");
    return root.at(name);
  };

  {
    const auto& t = section("topology");
    const std::string type = get_str(t, "topology.type", "chain");
    if (type != "chain") fail("topology.type", "only 'chain' is supported");
    cfg.agents = get_int(t, "topology.agents", 3);
    if (cfg.agents < 2) fail("topology.agents", "must be >= 2");
  }
  {
    const auto& e = section("environment");
    cfg.env.s_lb = get_vec(e, "environment.s_lb", cfg.env.s_lb);
    cfg.env.s_ub = get_vec(e, "environment.s_ub", cfg.env.s_ub);
    cfg.env.omega = get_vec(e, "environment.omega", cfg.env.omega);
    cfg.env.noise_lb = get_num(e, "environment.noise_lb", cfg.env.noise_lb);
    cfg.env.noise_ub = get_num(e, "environment.noise_ub", cfg.env.noise_ub);
    cfg.env.seed = static_cast<unsigned>(
        get_int(e, "environment.seed", static_cast<int>(cfg.env.seed)));
    if (cfg.env.s_lb.size() != 2 || cfg.env.s_ub.size() != 2 ||
        cfg.env.omega.size() != 2)
      fail("environment", "s_lb, s_ub and omega must have length 2");
    if ((cfg.env.s_ub - cfg.env.s_lb).minCoeff() <= 0.0)
      fail("environment.s_ub", "must exceed s_lb componentwise");
    if (cfg.env.omega.minCoeff() < 0.0)
      fail("environment.omega", "must be nonnegative");
    if (cfg.env.noise_ub < cfg.env.noise_lb)
      fail("environment.noise_ub", "must be >= noise_lb");
  }
  {
    const auto& s = section("scheme");
    cfg.scheme.horizon = get_int(s, "scheme.horizon", cfg.scheme.horizon);
    if (cfg.scheme.horizon < 1) fail("scheme.horizon", "must be >= 1");
    cfg.scheme.gamma = get_num(s, "scheme.gamma", cfg.scheme.gamma);
    if (!(cfg.scheme.gamma > 0.0 && cfg.scheme.gamma <= 1.0))
      fail("scheme.gamma", "must lie in (0, 1]");
    cfg.scheme.u_lb = get_num(s, "scheme.u_lb", cfg.scheme.u_lb);
    cfg.scheme.u_ub = get_num(s, "scheme.u_ub", cfg.scheme.u_ub);
    if (cfg.scheme.u_ub <= cfg.scheme.u_lb)
      fail("scheme.u_ub", "must exceed u_lb");
    cfg.scheme.sigma_reg = get_num(s, "scheme.sigma_reg", cfg.scheme.sigma_reg);
    require_positive(cfg.scheme.sigma_reg, "scheme.sigma_reg");
    cfg.scheme.terminal_reg =
        get_num(s, "scheme.terminal_reg", cfg.scheme.terminal_reg);
    require_positive(cfg.scheme.terminal_reg, "scheme.terminal_reg");
    cfg.scheme.discount_linear_term = get_bool(
        s, "scheme.discount_linear_term", cfg.scheme.discount_linear_term);
    cfg.scheme.constrain_initial_state = get_bool(
        s, "scheme.constrain_initial_state", cfg.scheme.constrain_initial_state);
    cfg.scheme.omega = cfg.env.omega;
    cfg.scheme.s_lb = cfg.env.s_lb;
    cfg.scheme.s_ub = cfg.env.s_ub;
  }
  {
    const auto& e = section("evaluation");
    cfg.learner.admm_iterations =
        get_int(e, "evaluation.admm_iterations", cfg.learner.admm_iterations);
    if (cfg.learner.admm_iterations < 1)
      fail("evaluation.admm_iterations", "must be >= 1");
    cfg.learner.gac_iterations =
        get_int(e, "evaluation.gac_iterations", cfg.learner.gac_iterations);
    if (cfg.learner.gac_iterations < 0)
      fail("evaluation.gac_iterations", "must be >= 0");
    cfg.learner.rho = get_num(e, "evaluation.rho", cfg.learner.rho);
    require_positive(cfg.learner.rho, "evaluation.rho");
    cfg.learner.distributed =
        get_bool(e, "evaluation.distributed", cfg.learner.distributed);
  }
  {
    const auto& l = section("learner");
    cfg.learner.alpha0 = get_num(l, "learner.alpha0", cfg.learner.alpha0);
    require_positive(cfg.learner.alpha0, "learner.alpha0");
    cfg.learner.alpha_decay =
        get_num(l, "learner.alpha_decay", cfg.learner.alpha_decay);
    if (!(cfg.learner.alpha_decay > 0.0 && cfg.learner.alpha_decay <= 1.0))
      fail("learner.alpha_decay", "must lie in (0, 1]");
    cfg.learner.eps0 = get_num(l, "learner.eps0", cfg.learner.eps0);
    if (cfg.learner.eps0 < 0.0 || cfg.learner.eps0 > 1.0)
      fail("learner.eps0", "must lie in [0, 1]");
    cfg.learner.eps_decay =
        get_num(l, "learner.eps_decay", cfg.learner.eps_decay);
    if (!(cfg.learner.eps_decay > 0.0 && cfg.learner.eps_decay <= 1.0))
      fail("learner.eps_decay", "must lie in (0, 1]");
    cfg.learner.perturb_lb =
        get_num(l, "learner.perturb_lb", cfg.learner.perturb_lb);
    cfg.learner.perturb_ub =
        get_num(l, "learner.perturb_ub", cfg.learner.perturb_ub);
    if (cfg.learner.perturb_ub < cfg.learner.perturb_lb)
      fail("learner.perturb_ub", "must be >= perturb_lb");
    cfg.learner.er_window =
        get_int(l, "learner.er_window", cfg.learner.er_window);
    if (cfg.learner.er_window < 1) fail("learner.er_window", "must be >= 1");
    cfg.learner.update_period =
        get_int(l, "learner.update_period", cfg.learner.update_period);
    if (cfg.learner.update_period < 1)
      fail("learner.update_period", "must be >= 1");
    cfg.learner.max_update_norm =
        get_num(l, "learner.max_update_norm", cfg.learner.max_update_norm);
    if (cfg.learner.max_update_norm < 0.0)
      fail("learner.max_update_norm", "must be >= 0");
    cfg.learner.snapshot_every =
        get_int(l, "learner.snapshot_every", cfg.learner.snapshot_every);
    if (cfg.learner.snapshot_every < 0)
      fail("learner.snapshot_every", "must be >= 0");
  }
  {
    const auto& t = section("train");
    cfg.train_steps = get_int(t, "train.steps", cfg.train_steps);
    if (cfg.train_steps < 0) fail("train.steps", "must be >= 0");
    cfg.train_initial =
        get_joint_state(t, "train.initial_state", cfg.agents, 2);
  }
  {
    const auto& d = section("dual_check");
    cfg.dual_check_state =
        get_joint_state(d, "dual_check.state", cfg.agents, 2);
    cfg.dual_check_rho = get_num(d, "dual_check.rho", cfg.dual_check_rho);
    require_positive(cfg.dual_check_rho, "dual_check.rho");
    if (d.contains("taus")) {
      const auto& v = d.at("taus");
      if (!v.is_array() || v.empty())
        fail("dual_check.taus", "must be a nonempty array of integers");
      cfg.dual_check_taus.clear();
      for (size_t c = 0; c < v.size(); ++c) {
        if (!v[c].is_number_integer() || v[c].get<int>() < 1)
          fail("dual_check.taus", "entries must be integers >= 1");
        cfg.dual_check_taus.push_back(v[c].get<int>());
      }
    }
  }
  {
    const auto& c = section("compare");
    cfg.compare_episodes = get_int(c, "compare.episodes", cfg.compare_episodes);
    if (cfg.compare_episodes < 1) fail("compare.episodes", "must be >= 1");
    cfg.compare_steps = get_int(c, "compare.steps", cfg.compare_steps);
    if (cfg.compare_steps < 1) fail("compare.steps", "must be >= 1");
    cfg.compare_scenarios =
        get_int(c, "compare.scenarios", cfg.compare_scenarios);
    if (cfg.compare_scenarios < 1) fail("compare.scenarios", "must be >= 1");
    cfg.compare_train_steps =
        get_int(c, "compare.train_steps", cfg.compare_train_steps);
    if (cfg.compare_train_steps < -1)
      fail("compare.train_steps", "must be >= 0 (or -1 for train.steps)");
    cfg.theta_file = get_str(c, "compare.theta_file", cfg.theta_file);
  }
  {
    const auto& o = section("output");
    cfg.plots = get_bool(o, "output.plots", cfg.plots);
    cfg.seed = static_cast<unsigned>(
        get_int(o, "output.seed", static_cast<int>(cfg.seed)));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("config: cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace dmpcrl
