#pragma once

#include "epitwin/agent/llm.hpp"
#include "epitwin/eval/dataset.hpp"

#include <string>

namespace epitwin::agent {

/// Deterministic data summary: peak timing, trend, a seasonality
/// heuristic, and per-feature correlation with the target.
std::string extract_insights_offline(const eval::Dataset& data);

/// With an endpoint: render the insights prompt and keep the text
/// after the ###TIPs marker (the full completion when the marker is
/// missing, with a warning). Endpoint failures degrade to the offline
/// template with a logged warning.
std::string extract_insights(const eval::Dataset& data, const LlmClient* llm);

} // namespace epitwin::agent
