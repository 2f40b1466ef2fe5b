#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dmpcrl/dmpcrl.h"

namespace {

namespace fs = std::filesystem;

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "dmpcrl_capi_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const auto p = scratch() / name;
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ostringstream buf;
  buf << std::ifstream(p).rdbuf();
  return buf.str();
}

// Small, fast run: a few steps, no plots.
const char* kSmallConfig = R"({
  "train": {"steps": 6, "initial_state": [[0.3,0.05],[0.4,-0.1],[0.35,0]]},
  "evaluation": {"admm_iterations": 10, "gac_iterations": 20},
  "output": {"plots": false}
})";

}  // namespace

TEST_CASE("missing config file reports the config error code and the path") {
  dmpcrl_run* run = nullptr;
  const int rc = dmpcrl_run_create("/no/such/file.json", &run);
  CHECK(rc == DMPCRL_ERR_CONFIG);
  REQUIRE(run != nullptr);
  CHECK(std::string(dmpcrl_last_error(run)).find("/no/such/file.json") !=
        std::string::npos);
  // Commands on an invalid handle keep failing with the config code.
  CHECK(dmpcrl_run_train(run, (scratch() / "x").string().c_str()) ==
        DMPCRL_ERR_CONFIG);
  dmpcrl_run_destroy(run);
}

TEST_CASE("invalid arguments yield the argument error code") {
  CHECK(dmpcrl_run_create("x", nullptr) == DMPCRL_ERR_ARG);
  dmpcrl_run* run = nullptr;
  const auto cfg = write_config("args.json", kSmallConfig);
  REQUIRE(dmpcrl_run_create(cfg.string().c_str(), &run) == DMPCRL_OK);
  CHECK(dmpcrl_run_train(run, nullptr) == DMPCRL_ERR_ARG);
  CHECK(dmpcrl_run_set_threads(run, 0) == DMPCRL_ERR_ARG);
  CHECK(dmpcrl_run_set_threads(run, 4) == DMPCRL_OK);
  dmpcrl_run_destroy(run);
  CHECK(dmpcrl_run_train(nullptr, "x") == DMPCRL_ERR_ARG);
}

TEST_CASE("zero training steps produce header-only CSVs") {
  const auto cfg = write_config("zero.json", R"({
    "train": {"steps": 0}, "output": {"plots": false}
  })");
  dmpcrl_run* run = nullptr;
  REQUIRE(dmpcrl_run_create(cfg.string().c_str(), &run) == DMPCRL_OK);
  const auto out = scratch() / "zero_out";
  CHECK(dmpcrl_run_train(run, out.string().c_str()) == DMPCRL_OK);
  dmpcrl_run_destroy(run);
  const auto csv = slurp(out / "train.csv");
  CHECK(csv.rfind("step,alpha,epsilon", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  CHECK(slurp(out / "theta.csv") == "step,agent,index,value\n");
}

TEST_CASE("same config and seed give bit-identical artifacts") {
  const auto cfg = write_config("repro.json", kSmallConfig);
  auto run_once = [&](const fs::path& out) {
    dmpcrl_run* run = nullptr;
    REQUIRE(dmpcrl_run_create(cfg.string().c_str(), &run) == DMPCRL_OK);
    REQUIRE(dmpcrl_run_set_seed(run, 11) == DMPCRL_OK);
    REQUIRE(dmpcrl_run_train(run, out.string().c_str()) == DMPCRL_OK);
    dmpcrl_run_destroy(run);
  };
  const auto a = scratch() / "rep_a", b = scratch() / "rep_b";
  run_once(a);
  run_once(b);
  const auto ta = slurp(a / "train.csv");
  CHECK(ta == slurp(b / "train.csv"));
  CHECK(std::count(ta.begin(), ta.end(), '\n') == 7);  // header + 6 steps
  CHECK(slurp(a / "theta.csv") == slurp(b / "theta.csv"));
}

TEST_CASE("dual-check artifacts appear and the seed override sticks") {
  const auto cfg = write_config("dc.json", R"({
    "dual_check": {"taus": [1, 5, 20]}, "output": {"plots": true}
  })");
  dmpcrl_run* run = nullptr;
  REQUIRE(dmpcrl_run_create(cfg.string().c_str(), &run) == DMPCRL_OK);
  const auto out = scratch() / "dc_out";
  CHECK(dmpcrl_run_dual_check(run, out.string().c_str()) == DMPCRL_OK);
  dmpcrl_run_destroy(run);
  CHECK(fs::exists(out / "dual_check.csv"));
  CHECK(fs::exists(out / "dual_check.svg"));
  const auto csv = slurp(out / "dual_check.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("compare without training emits the report schema") {
  const auto cfg = write_config("cmp.json", R"({
    "environment": {"noise_lb": 0.0, "noise_ub": 0.0},
    "train": {"steps": 0, "initial_state": [[0,0],[0,0],[0,0]]},
    "evaluation": {"distributed": false},
    "compare": {"episodes": 1, "steps": 5, "scenarios": 2, "train_steps": 0},
    "output": {"plots": false}
  })");
  dmpcrl_run* run = nullptr;
  REQUIRE(dmpcrl_run_create(cfg.string().c_str(), &run) == DMPCRL_OK);
  const auto out = scratch() / "cmp_out";
  CHECK(dmpcrl_run_compare(run, out.string().c_str()) == DMPCRL_OK);
  dmpcrl_run_destroy(run);
  const auto episodes = slurp(out / "compare_episodes.csv");
  CHECK(episodes.rfind("controller,episode,cost,violations", 0) == 0);
  for (const char* name : {"nmpc", "smpc_inexact", "smpc_true", "policy"})
    CHECK(episodes.find(name) != std::string::npos);
  // Zero noise from the origin: every controller sits still at zero cost.
  std::istringstream rows(episodes);
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', line.find(',') + 1);
    const auto c3 = line.rfind(',');
    // The scenario controller's interior-point solve leaves slacks at the
    // barrier scale (~1e-8), which the omega weight turns into ~1e-6 cost.
    const double cost = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
    CHECK(std::abs(cost) < 1e-5);
    CHECK(line.substr(c3 + 1) == "0");
  }
  CHECK(slurp(out / "compare_summary.csv")
            .rfind("controller,median,q1,q3,mean,violations_total", 0) == 0);
}

TEST_CASE("version string is set") {
  CHECK(std::string(dmpcrl_version()).find('.') != std::string::npos);
}
