#pragma once

#include "epitwin/cli/config.hpp"

#include <filesystem>

namespace epitwin::cli {

/// Subcommand bodies; artifacts land under out_dir via atomic writes.
/// Throws Error: CONFIG_ERROR maps to exit 1, anything else to exit 2.
void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_calibrate(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_evolve(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_intervene(const RunConfig& cfg, const std::filesystem::path& out_dir);

} // namespace epitwin::cli
