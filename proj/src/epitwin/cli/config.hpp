#pragma once

#include "epitwin/agent/llm.hpp"
#include "epitwin/calib/train.hpp"
#include "epitwin/eval/realtime.hpp"
#include "epitwin/eval/synth.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace epitwin::cli {

/// One structured config file drives every subcommand; blocks are
/// validated strictly (unknown keys are config errors naming the key
/// and the valid alternatives).
struct RunConfig {
    std::filesystem::path base_dir; // directory of the config file
    std::uint64_t seed = 0;

    std::optional<std::string> dataset_path;
    std::optional<eval::ScenarioConfig> scenario;
    std::optional<std::string> spec_path;
    std::array<dsl::Bounds, 8> bounds{};

    struct TrainBlock {
        double lr = 5e-4;
        long iterations = 1000;
        double weight_decay = 0.01;
        std::size_t hidden = 32;
        calib::CellKind cell = calib::CellKind::gru;
        std::optional<std::size_t> window; // training window; default full T
    } train;

    struct EvalBlock {
        std::size_t t_train = 104;
        std::optional<std::size_t> horizon; // default by cadence (8 weekly, 28 daily)
        std::vector<std::size_t> shifts = {0, 1, 2, 3};
        bool oracle = false;
        bool parallel_shifts = true;
        std::optional<long> train_iterations; // overrides train.iterations inside evaluation
    } eval;

    struct SimulateBlock {
        std::optional<std::array<double, 8>> params; // constant channels
        std::optional<std::string> checkpoint;
        std::optional<std::size_t> steps;
    } simulate;

    struct EvolveBlock {
        int generations = 40;
        std::size_t k = 3;
        std::string generator = "mutation"; // or "llm"
        bool hybrid = false;
        std::vector<std::string> reject_warnings;
        bool judge = false;
        std::optional<std::string> snippets_dir;
        agent::LlmConfig endpoint; // filled from config or environment
    } evolve;

    struct InterveneBlock {
        double t_prime = 0.8; // fraction of the horizon when < 1, else absolute step
        std::vector<double> deltas = {0.0, 0.2, 0.4, 0.6, 0.8};
        std::vector<std::string> channels = {"beta"};
        std::vector<std::size_t> patches;
        std::optional<std::string> checkpoint;
    } intervene;
};

RunConfig load_config(const std::filesystem::path& path);

/// One-line-per-key reference rendered into --help.
std::string config_reference();

} // namespace epitwin::cli
