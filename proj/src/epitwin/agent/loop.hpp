#pragma once

#include "epitwin/agent/generator.hpp"
#include "epitwin/agent/reflect.hpp"
#include "epitwin/agent/verifier.hpp"
#include "epitwin/eval/realtime.hpp"
#include "epitwin/eval/runlog.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace epitwin::agent {

struct EvolveConfig {
    int generations = 40; // G
    std::size_t k = 3;
    std::uint64_t seed = 0;
    bool hybrid = false;
    VerifyPolicy verify;
    eval::EvalConfig eval;
};

struct EvolveEnv {
    const eval::Dataset& data;
    CandidateGenerator& generator;
    const SnippetStore* snippets = nullptr;
    const LlmClient* reflector = nullptr; // insights + reflection endpoint
    const LlmClient* judge = nullptr;     // verification judge endpoint
};

struct EvolveResult {
    eval::RunLog log;
    RunMemory memory;
    std::string best_text;
    double best_v = 0.0;
    int best_generation = -1;
    std::vector<double> mean_curve; // mean v of all scored attempts so far
    std::vector<double> best_curve; // best v so far (NaN before a success)

    nlohmann::ordered_json report() const;
};

/// Candidate evaluation: train on the rolling windows and return the
/// mean validation RMSE. The net seed derives from the run seed and
/// the candidate text, so identical candidates score identically.
struct EvalOutcome {
    bool ok = false;
    double v = 0.0;
    std::string error;
    std::string error_code;
};
EvalOutcome evaluate_candidate(const ParsedCandidate& candidate, const eval::Dataset& data,
                               const EvolveConfig& cfg);

/// The self-evolving loop: retrieve -> propose -> verify -> evaluate ->
/// reflect for G generations. Candidate-level failures of every class
/// are contained as RunLog entries; the loop aborts only on dataset or
/// configuration errors.
EvolveResult evolve(const EvolveEnv& env, const EvolveConfig& cfg);

} // namespace epitwin::agent
