// Command-line front end. Talks to the library exclusively through the C
// API so it doubles as a smoke test of that surface.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "dmpcrl/dmpcrl.h"

namespace {

int run_command(const std::string& command, const std::string& config,
                const std::string& out_dir, int seed, int threads,
                bool no_plots) {
  dmpcrl_run* run = nullptr;
  int rc = dmpcrl_run_create(config.c_str(), &run);
  if (rc != DMPCRL_OK) {
    std::fprintf(stderr, "error: %s\n", dmpcrl_last_error(run));
    dmpcrl_run_destroy(run);
    return rc;
  }
  if (seed >= 0) dmpcrl_run_set_seed(run, static_cast<unsigned>(seed));
  dmpcrl_run_set_threads(run, threads);
  if (no_plots) dmpcrl_run_set_plots(run, 0);

  if (command == "train")
    rc = dmpcrl_run_train(run, out_dir.c_str());
  else if (command == "dual-check")
    rc = dmpcrl_run_dual_check(run, out_dir.c_str());
  else
    rc = dmpcrl_run_compare(run, out_dir.c_str());

  if (rc != DMPCRL_OK)
    std::fprintf(stderr, "error: %s\n", dmpcrl_last_error(run));
  dmpcrl_run_destroy(run);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed MPC-based reinforcement learning simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  int seed = -1;
  int threads = 1;
  bool no_plots = false;

  const char* env_out = std::getenv("DMPCRL_OUT");
  out_dir = env_out ? env_out : "out";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "path to the JSON run configuration")
        ->required();
    cmd->add_option("--out", out_dir,
                    "output directory (default: $DMPCRL_OUT or ./out)");
    cmd->add_option("--seed", seed, "override the configured seed");
    cmd->add_option("--threads", threads, "worker parallelism cap")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--no-plots", no_plots, "write CSVs only");
  };
  add_common(app.add_subcommand("train", "run Q-learning on the scheme"));
  add_common(app.add_subcommand(
      "dual-check", "dual-recovery accuracy versus ADMM iteration"));
  add_common(
      app.add_subcommand("compare", "closed-loop controller comparison"));

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  return run_command(command, config, out_dir, seed, threads, no_plots);
}
