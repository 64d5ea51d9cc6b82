#pragma once

#include "epitwin/dsl/ast.hpp"
#include "epitwin/eval/dataset.hpp"
#include "epitwin/sim/paramfield.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

namespace epitwin::eval {

/// Desk-scale synthetic scenario: a generating spec simulated under
/// smoothly varying hidden parameters, with the observed target equal
/// to the simulated series plus multiplicative lognormal noise.
struct ScenarioConfig {
    std::string name = "scenario";
    std::string spec_text;
    std::size_t L = 3;
    std::size_t T = 160;
    Cadence cadence = Cadence::week;
    std::vector<double> population;  // per patch; scalar configs broadcast
    double mixing = 0.1;             // off-diagonal contact weight
    double noise = 0.0;              // lognormal sigma on the target
    std::size_t aux_features = 3;    // informative transforms of hidden params
    double season_period = 52.0;
    // Hidden parameter paths: clamp01(base + amp * sin(2*pi*(t/period + phase))).
    std::array<double, 8> base = {0.22, 0.2, 0.12, 0.03, 0.1, 0.3, 0.6, 0.02};
    std::array<double, 8> amp = {0.12, 0.05, 0.04, 0.01, 0.05, 0.2, 0.1, 0.01};
};

struct SynthResult {
    Dataset data;
    dsl::ModelSpec truth_spec;
    sim::ParamField truth_params;
};

SynthResult synthesize(const ScenarioConfig& config, std::uint64_t seed);

/// Parse a scenario block; "spec_path" is resolved against base_dir,
/// "spec" may hold inline DSL text instead.
ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

} // namespace epitwin::eval
