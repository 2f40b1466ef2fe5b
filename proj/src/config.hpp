#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "approximator.hpp"
#include "learner.hpp"
#include "linsys.hpp"

namespace dmpcrl {

/// Everything one run needs, read from a single JSON file. Validation is
/// fail-fast and names the offending key path.
struct RunConfig {
  int agents = 3;

  AcademicEnv::Options env;
  SchemeOptions scheme;
  LearnerConfig learner;  // also carries the ADMM/GAC evaluation spec

  int train_steps = 5000;
  /// Fixed training start; empty means a uniform draw over the state box.
  std::vector<Eigen::VectorXd> train_initial;

  std::vector<Eigen::VectorXd> dual_check_state;
  double dual_check_rho = 1e-8;
  std::vector<int> dual_check_taus = {1, 2, 5, 10, 20, 30, 40, 50, 70, 100};

  int compare_episodes = 20;
  int compare_steps = 100;
  int compare_scenarios = 25;
  /// Steps of training run before the comparison when no parameter file is
  /// given; -1 falls back to train_steps.
  int compare_train_steps = -1;
  /// Optional parameter snapshot CSV (as written by the train command).
  std::string theta_file;

  bool plots = true;
  unsigned seed = 1;

  EvalOptions eval_options() const;
};

/// Parses and validates; throws ConfigError naming the key path (or the
/// file path when it cannot be read).
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

}  // namespace dmpcrl
