#pragma once

#include "epitwin/agent/llm.hpp"
#include "epitwin/agent/memory.hpp"

#include <string>
#include <vector>

namespace epitwin::agent {

struct ReflectInput {
    const RunMemory& memory;
    bool failure = false;             // latest generation failed
    double prev_best = 0.0;           // best v before this generation (NaN when none)
    double new_best = 0.0;            // best v after it (NaN when none)
    std::string last_accepted_text;   // latest accepted candidate, "" when none
    std::vector<double> best_curve;   // best-so-far v per generation
};

/// Deterministic reflection: improvement delta, structural diff of the
/// last accepted candidate against the population best, recurring
/// error codes. The failure case renders the condensed error log
/// instead.
std::string reflect_offline(const ReflectInput& input);

/// With an endpoint, render the reflection prompt (success) or the
/// error-correction prompt (failure); endpoint failures fall back to
/// the offline template with a warning.
std::string reflect(const ReflectInput& input, const LlmClient* llm);

} // namespace epitwin::agent
