#pragma once

#include <string>

#include "config.hpp"

namespace dmpcrl {

/// Command implementations behind the CLI. Each writes its CSV artifacts
/// (and SVG plots unless disabled) into `out_dir`, creating it if needed,
/// and throws Error subclasses on failure.
void cmd_train(const RunConfig& cfg, const std::string& out_dir);
void cmd_dual_check(const RunConfig& cfg, const std::string& out_dir);
void cmd_compare(const RunConfig& cfg, const std::string& out_dir);

}  // namespace dmpcrl
