#include "runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "baselines.hpp"
#include "errors.hpp"
#include "learner.hpp"
#include "svgplot.hpp"

namespace dmpcrl {

namespace {

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("runner: cannot write " + p.string());
  return out;
}

std::vector<AgentParams> initial_params(const GraphTopology& g) {
  std::vector<AgentParams> params(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    auto& p = params[i];
    p.x_lb_shift = Eigen::VectorXd::Zero(2);
    p.x_ub_shift = Eigen::VectorXd::Zero(2);
    p.f = Eigen::VectorXd::Zero(3);
    p.dynamics = nominal_inaccurate_model(g.neighbors(i));
  }
  return params;
}

MpcScheme make_scheme(const RunConfig& cfg, const GraphTopology& g) {
  return MpcScheme(g, initial_params(g), cfg.scheme);
}

JointState starting_state(const RunConfig& cfg, AcademicEnv& env) {
  if (!cfg.train_initial.empty()) {
    JointState s;
    s.s = cfg.train_initial;
    return s;
  }
  return env.reset_uniform();
}

std::vector<double> moving_average(const std::vector<double>& v, int window) {
  std::vector<double> out(v.size());
  double acc = 0.0;
  for (size_t k = 0; k < v.size(); ++k) {
    acc += v[k];
    if (k >= static_cast<size_t>(window)) acc -= v[k - window];
    out[k] = acc / std::min<size_t>(k + 1, window);
  }
  return out;
}

void write_theta_csv(const std::filesystem::path& p, const TrainLog& log) {
  auto out = open_csv(p);
  out << "step,agent,index,value\n";
  for (const auto& [step, thetas] : log.snapshots)
    for (size_t i = 0; i < thetas.size(); ++i)
      for (int c = 0; c < thetas[i].size(); ++c)
        out << step << "," << i << "," << c << "," << num(thetas[i](c))
            << "\n";
}

/// Final snapshot of a parameter-trajectory CSV written by the train
/// command (long format: step,agent,index,value).
std::vector<Eigen::VectorXd> load_final_theta(const std::string& path,
                                              int agents) {
  std::ifstream in(path);
  if (!in) throw ConfigError("compare: cannot read theta file: " + path);
  std::string line;
  std::getline(in, line);  // header
  int max_step = -1;
  std::map<std::pair<int, int>, double> last;  // (agent, index) -> value
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int vals_step, agent, index;
    double value;
    char comma;
    std::istringstream parse(line);
    if (!(parse >> vals_step >> comma >> agent >> comma >> index >> comma >>
          value))
      throw ConfigError("compare: malformed theta file row: " + line);
    if (vals_step > max_step) {
      max_step = vals_step;
      last.clear();
    }
    if (vals_step == max_step) last[{agent, index}] = value;
  }
  if (max_step < 0)
    throw ConfigError("compare: theta file has no snapshots: " + path);
  std::vector<Eigen::VectorXd> theta(agents);
  for (int i = 0; i < agents; ++i) {
    int dim = 0;
    while (last.count({i, dim})) ++dim;
    if (dim == 0)
      throw ConfigError("compare: theta file misses agent " +
                        std::to_string(i));
    theta[i].resize(dim);
    for (int c = 0; c < dim; ++c) theta[i](c) = last.at({i, c});
  }
  return theta;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

void cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  const auto g = build_chain(cfg.agents);
  AcademicEnv env(g, cfg.env);
  auto scheme = make_scheme(cfg, g);
  std::mt19937 rng(cfg.seed);
  const JointState initial = starting_state(cfg, env);
  TrainLog log;
  if (cfg.train_steps > 0)
    log = train(env, scheme, cfg.learner, cfg.train_steps, initial, rng);

  auto csv = open_csv(out / "train.csv");
  csv << "step,alpha,epsilon,num_explored,delta,q,v_next,stage_cost";
  for (int i = 0; i < cfg.agents; ++i)
    csv << ",s" << i << "_0,s" << i << "_1,u" << i << ",cost" << i;
  csv << "\n";
  for (const auto& st : log.steps) {
    csv << st.t << "," << num(st.alpha) << "," << num(st.eps) << ","
        << st.num_explored << "," << num(st.delta) << "," << num(st.td_q)
        << "," << num(st.td_v_next) << "," << num(st.local_costs.mean());
    for (int i = 0; i < cfg.agents; ++i)
      csv << "," << num(st.state[i](0)) << "," << num(st.state[i](1)) << ","
          << num(st.action[i](0)) << "," << num(st.local_costs(i));
    csv << "\n";
  }
  write_theta_csv(out / "theta.csv", log);

  if (!cfg.plots || log.steps.empty()) return;
  std::vector<double> steps, abs_delta, stage;
  for (const auto& st : log.steps) {
    steps.push_back(st.t);
    abs_delta.push_back(std::abs(st.delta));
    stage.push_back(st.local_costs.mean());
  }
  const int window = std::max<int>(1, static_cast<int>(steps.size()) / 50);
  {
    SvgLinePlot plot("Training progress", "step", "moving average");
    plot.add_series("|TD error|", steps, moving_average(abs_delta, window));
    plot.add_series("stage cost", steps, moving_average(stage, window));
    plot.set_log_y(true);
    plot.write((out / "training.svg").string());
  }
  {
    SvgLinePlot plot("Closed-loop states and inputs", "step", "value");
    for (int i = 0; i < cfg.agents; ++i) {
      std::vector<double> s0, s1, u;
      for (const auto& st : log.steps) {
        s0.push_back(st.state[i](0));
        s1.push_back(st.state[i](1));
        u.push_back(st.action[i](0));
      }
      const std::string tag = std::to_string(i);
      plot.add_series("s" + tag + "_0", steps, s0);
      plot.add_series("s" + tag + "_1", steps, s1);
      plot.add_series("u" + tag, steps, u);
    }
    plot.write((out / "states_inputs.svg").string());
  }
  if (log.snapshots.size() > 1) {
    SvgLinePlot plot("Parameter drift from the initial values", "step",
                     "max |theta - theta_0|");
    for (int i = 0; i < cfg.agents; ++i) {
      std::vector<double> xs, ys;
      const auto& theta0 = log.snapshots.front().second[i];
      for (const auto& [step, thetas] : log.snapshots) {
        xs.push_back(step);
        ys.push_back((thetas[i] - theta0).lpNorm<Eigen::Infinity>());
      }
      plot.add_series("agent " + std::to_string(i), xs, ys);
    }
    plot.write((out / "parameters.svg").string());
  }
}

void cmd_dual_check(const RunConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  const auto g = build_chain(cfg.agents);
  const auto scheme = make_scheme(cfg, g);

  JointState s;
  if (!cfg.dual_check_state.empty()) {
    s.s = cfg.dual_check_state;
  } else {
    // Interior default: no state-constraint activity, so the consensus
    // transient is the only error source and the curve is clean.
    const Eigen::Vector2d pattern[3] = {{0.3, 0.05}, {0.4, -0.1}, {0.35, 0.0}};
    for (int i = 0; i < cfg.agents; ++i) s.s.push_back(pattern[i % 3]);
  }

  const auto cent = scheme.evaluate_centralized(s, nullptr);
  EvalOptions ev = cfg.eval_options();
  ev.rho = cfg.dual_check_rho;
  ev.record_history = true;
  ev.admm_iterations =
      *std::max_element(cfg.dual_check_taus.begin(), cfg.dual_check_taus.end());
  const auto dist = scheme.evaluate_distributed(s, nullptr, ev);

  auto csv = open_csv(out / "dual_check.csv");
  csv << "tau,error\n";
  std::vector<double> taus, errors;
  for (int tau : cfg.dual_check_taus) {
    double e = 0.0;
    for (int i = 0; i < cfg.agents; ++i) {
      e += (dist.admm.eq_dual_history[tau - 1][i] - cent.agent_kkt[i].eq_duals)
               .norm();
      e += (dist.admm.ineq_dual_history[tau - 1][i] -
            cent.agent_kkt[i].ineq_duals)
               .norm();
    }
    csv << tau << "," << num(e) << "\n";
    taus.push_back(tau);
    errors.push_back(e);
  }
  if (cfg.plots) {
    SvgLinePlot plot("Recovered dual accuracy", "ADMM iteration",
                     "sum of dual errors");
    plot.set_log_y(true);
    plot.add_series("error", taus, errors);
    plot.write((out / "dual_check.svg").string());
  }
}

void cmd_compare(const RunConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  const auto g = build_chain(cfg.agents);
  AcademicEnv env(g, cfg.env);

  auto learned = make_scheme(cfg, g);
  if (!cfg.theta_file.empty()) {
    const auto theta = load_final_theta(cfg.theta_file, cfg.agents);
    for (int i = 0; i < cfg.agents; ++i) {
      auto p = learned.params(i);
      if (theta[i].size() != p.flat_size())
        throw ConfigError("compare: theta file dimension mismatch for agent " +
                          std::to_string(i));
      p.unflatten(theta[i]);
      learned.set_params(i, p);
    }
  } else {
    const int steps =
        cfg.compare_train_steps >= 0 ? cfg.compare_train_steps : cfg.train_steps;
    if (steps > 0) {
      AcademicEnv train_env(g, cfg.env);
      std::mt19937 rng(cfg.seed);
      const JointState initial = starting_state(cfg, train_env);
      train(train_env, learned, cfg.learner, steps, initial, rng);
    }
  }
  const auto nominal = make_scheme(cfg, g);

  const EvalOptions ev = cfg.eval_options();
  const bool distributed = cfg.learner.distributed;
  const int N = cfg.scheme.horizon;
  std::mt19937 scen_rng(cfg.seed + 17);

  const Policy policy = [&](const JointState& s) {
    return nominal_mpc_policy(learned, s, distributed, ev);
  };
  const Policy nmpc = [&](const JointState& s) {
    return nominal_mpc_policy(nominal, s, distributed, ev);
  };
  const Policy smpc_inexact = [&](const JointState& s) {
    const auto set = sample_scenarios(g, cfg.compare_scenarios, N, scen_rng,
                                      cfg.env);
    return scenario_mpc_policy(g, cfg.scheme, set, s);
  };
  const Policy smpc_true = [&](const JointState& s) {
    const auto set =
        true_model_scenarios(env, cfg.compare_scenarios, N, scen_rng);
    return scenario_mpc_policy(g, cfg.scheme, set, s);
  };

  JointState initial;
  if (!cfg.train_initial.empty())
    initial.s = cfg.train_initial;
  else
    for (int i = 0; i < cfg.agents; ++i)
      initial.s.push_back(Eigen::Vector2d(0.5, 0.0));

  auto episodes_csv = open_csv(out / "compare_episodes.csv");
  episodes_csv << "controller,episode,cost,violations\n";
  auto summary_csv = open_csv(out / "compare_summary.csv");
  summary_csv << "controller,median,q1,q3,mean,violations_total\n";

  const std::vector<std::pair<std::string, const Policy*>> controllers = {
      {"nmpc", &nmpc},
      {"smpc_inexact", &smpc_inexact},
      {"smpc_true", &smpc_true},
      {"policy", &policy}};
  for (const auto& [name, p] : controllers) {
    env.reseed(cfg.env.seed + 1000);  // matched noise draws per controller
    const auto res = closed_loop_eval(*p, env, initial, cfg.compare_steps,
                                      cfg.compare_episodes);
    std::vector<double> costs(res.episode_costs.data(),
                              res.episode_costs.data() +
                                  res.episode_costs.size());
    long total_viol = 0;
    for (int ep = 0; ep < cfg.compare_episodes; ++ep) {
      episodes_csv << name << "," << ep << "," << num(costs[ep]) << ","
                   << res.violations[ep] << "\n";
      total_viol += res.violations[ep];
    }
    summary_csv << name << "," << num(quantile(costs, 0.5)) << ","
                << num(quantile(costs, 0.25)) << ","
                << num(quantile(costs, 0.75)) << ","
                << num(res.episode_costs.mean()) << "," << total_viol << "\n";
  }
}

}  // namespace dmpcrl
