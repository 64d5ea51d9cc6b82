#include "epitwin/agent/verifier.hpp"

#include "epitwin/agent/prompts.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/log.hpp"

#include <algorithm>
#include <cctype>

namespace epitwin::agent {

namespace {

bool judge_rejects(const std::string& completion)
{
    // Look for the last VERDICT: line; anything other than an explicit
    // REJECT is treated as acceptance.
    std::size_t pos = completion.rfind("VERDICT:");
    if (pos == std::string::npos)
        return false;
    std::string tail = completion.substr(pos + 8);
    std::size_t i = 0;
    while (i < tail.size() && std::isspace(static_cast<unsigned char>(tail[i])))
        ++i;
    std::string word;
    while (i < tail.size() && std::isalpha(static_cast<unsigned char>(tail[i])))
        word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(tail[i++]))));
    return word == "REJECT";
}

} // namespace

GateResult verify_candidate(const std::string& text, const VerifyPolicy& policy,
                            const LlmClient* judge)
{
    GateResult result;
    try {
        result.candidate = parse_candidate(text, policy.hybrid);
    } catch (const Error& e) {
        result.outcome = GateResult::Outcome::parse_rejected;
        result.reason = e.what();
        result.error_code = errc_name(e.code());
        return result;
    }

    result.report = dsl::verify(result.candidate->spec, policy.config);
    if (!result.report.errors.empty()) {
        const auto& first = result.report.errors.front();
        result.outcome = GateResult::Outcome::verify_rejected;
        result.error_code = first.code;
        result.reason = first.code + ": " + first.msg + " (line " +
                        std::to_string(first.span.line) + ")";
        return result;
    }

    for (const auto& w : result.report.warnings) {
        if (policy.rejecting_warnings.count(w.code)) {
            result.outcome = GateResult::Outcome::verify_rejected;
            result.error_code = w.code;
            result.reason = w.code + " configured as rejecting: " + w.msg;
            return result;
        }
    }

    if (!result.report.warnings.empty() && judge) {
        try {
            std::string completion = judge->complete(
                {{"user",
                  render_verification_prompt(result.candidate->normalized, result.report)}});
            if (judge_rejects(completion)) {
                result.outcome = GateResult::Outcome::judge_rejected;
                result.error_code = "JUDGE";
                result.reason = "verification judge rejected the candidate";
                return result;
            }
        } catch (const Error& e) {
            log::warn(std::string("verification judge unavailable (") + e.what() +
                      "); proceeding on the rule verdict");
        }
    } else if (!result.report.warnings.empty()) {
        std::string codes;
        for (const auto& w : result.report.warnings)
            codes += (codes.empty() ? "" : ",") + w.code;
        log::info("candidate accepted with warnings: " + codes);
    }
    return result;
}

} // namespace epitwin::agent
