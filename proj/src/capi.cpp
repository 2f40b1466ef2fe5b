#include "dmpcrl/dmpcrl.h"

#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "runner.hpp"

struct dmpcrl_run {
  dmpcrl::RunConfig cfg;
  bool valid = false;
  std::string error;
};

namespace {

int guard(dmpcrl_run* run, int (*body)(dmpcrl_run*, const char*),
          const char* arg) {
  if (!run) return DMPCRL_ERR_ARG;
  if (!run->valid) {
    if (run->error.empty()) run->error = "run handle holds no configuration";
    return DMPCRL_ERR_CONFIG;
  }
  run->error.clear();
  try {
    return body(run, arg);
  } catch (const dmpcrl::ConfigError& e) {
    run->error = e.what();
    return DMPCRL_ERR_CONFIG;
  } catch (const std::exception& e) {
    run->error = e.what();
    return DMPCRL_ERR_RUNTIME;
  }
}

}  // namespace

extern "C" {

int dmpcrl_run_create(const char* config_path, dmpcrl_run** out) {
  if (!out) return DMPCRL_ERR_ARG;
  auto* run = new dmpcrl_run();
  *out = run;
  if (!config_path) {
    run->error = "config path is null";
    return DMPCRL_ERR_ARG;
  }
  try {
    run->cfg = dmpcrl::load_config(config_path);
    run->valid = true;
    return DMPCRL_OK;
  } catch (const dmpcrl::ConfigError& e) {
    run->error = e.what();
    return DMPCRL_ERR_CONFIG;
  } catch (const std::exception& e) {
    run->error = e.what();
    return DMPCRL_ERR_RUNTIME;
  }
}

void dmpcrl_run_destroy(dmpcrl_run* run) { delete run; }

int dmpcrl_run_set_seed(dmpcrl_run* run, unsigned seed) {
  if (!run || !run->valid) return DMPCRL_ERR_ARG;
  run->cfg.seed = seed;
  run->cfg.env.seed = seed;
  return DMPCRL_OK;
}

int dmpcrl_run_set_threads(dmpcrl_run* run, int threads) {
  if (!run || !run->valid) return DMPCRL_ERR_ARG;
  if (threads < 1) {
    run->error = "threads must be >= 1";
    return DMPCRL_ERR_ARG;
  }
  return DMPCRL_OK;  // reference implementation runs sequentially
}

int dmpcrl_run_set_plots(dmpcrl_run* run, int enabled) {
  if (!run || !run->valid) return DMPCRL_ERR_ARG;
  run->cfg.plots = enabled != 0;
  return DMPCRL_OK;
}

int dmpcrl_run_train(dmpcrl_run* run, const char* out_dir) {
  if (out_dir == nullptr) return DMPCRL_ERR_ARG;
  return guard(run,
               [](dmpcrl_run* r, const char* dir) {
                 dmpcrl::cmd_train(r->cfg, dir);
                 return DMPCRL_OK;
               },
               out_dir);
}

int dmpcrl_run_dual_check(dmpcrl_run* run, const char* out_dir) {
  if (out_dir == nullptr) return DMPCRL_ERR_ARG;
  return guard(run,
               [](dmpcrl_run* r, const char* dir) {
                 dmpcrl::cmd_dual_check(r->cfg, dir);
                 return DMPCRL_OK;
               },
               out_dir);
}

int dmpcrl_run_compare(dmpcrl_run* run, const char* out_dir) {
  if (out_dir == nullptr) return DMPCRL_ERR_ARG;
  return guard(run,
               [](dmpcrl_run* r, const char* dir) {
                 dmpcrl::cmd_compare(r->cfg, dir);
                 return DMPCRL_OK;
               },
               out_dir);
}

const char* dmpcrl_last_error(const dmpcrl_run* run) {
  if (!run) return "null run handle";
  return run->error.c_str();
}

const char* dmpcrl_version(void) { return "1.0.0"; }

}  // extern "C"
