#pragma once

#include "epitwin/agent/generator.hpp"
#include "epitwin/agent/llm.hpp"
#include "epitwin/dsl/verify.hpp"

#include <optional>
#include <set>
#include <string>

namespace epitwin::agent {

struct VerifyPolicy {
    dsl::VerifyConfig config = dsl::VerifyConfig::defaults();
    /// Warning codes treated as rejecting (e.g. {"W1","W3"}); empty by
    /// default, matching a soft LLM-judge style gate.
    std::set<std::string> rejecting_warnings;
    bool hybrid = false;
};

struct GateResult {
    enum class Outcome { accepted, parse_rejected, verify_rejected, judge_rejected };
    Outcome outcome = Outcome::accepted;
    std::string reason;     // populated on rejection
    std::string error_code; // PARSE_ERROR / E-code / W-code / JUDGE
    dsl::VerifyReport report;
    std::optional<ParsedCandidate> candidate; // set when parsing succeeded

    bool accepted() const { return outcome == Outcome::accepted; }
};

/// Candidate gate: parse, rule verification, then the optional LLM
/// judge over warning-only candidates. E-level findings always reject;
/// warnings accept unless configured as rejecting or the judge says
/// REJECT. A failing judge endpoint falls back to the rule verdict.
GateResult verify_candidate(const std::string& text, const VerifyPolicy& policy,
                            const LlmClient* judge = nullptr);

} // namespace epitwin::agent
