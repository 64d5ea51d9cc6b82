#pragma once

#include "epitwin/agent/memory.hpp"
#include "epitwin/agent/snippets.hpp"
#include "epitwin/dsl/verify.hpp"
#include "epitwin/eval/dataset.hpp"

#include <string>
#include <vector>

namespace epitwin::agent {

/// System prompt components: data insights, the task description, and
/// the DSL skeleton template.
struct PromptBundle {
    std::string insights;
    std::string task;
    std::string skeleton;

    std::string system_prompt() const;
};

/// The canonical SEIRM model text; the mutation generator's cold start
/// and the model embedded in the default skeleton.
const std::string& skeleton_model_text();

std::string default_skeleton(bool hybrid);
std::string render_task_description(const eval::Dataset& data);

/// Prompt asking an endpoint to emit tips after a ###TIPs marker.
std::string render_insights_prompt(const eval::Dataset& data);

/// Judge prompt over the pretty-printed model; the reply is scanned
/// for a VERDICT: ACCEPT / VERDICT: REJECT line.
std::string render_verification_prompt(const std::string& model_text,
                                       const dsl::VerifyReport& report);

/// Modeling-agent user message: population, condensed failures,
/// the latest reflection, retrieved snippets.
std::string render_modeling_context(const RunMemory& memory,
                                    const std::vector<Snippet>& snippets);

/// Reflection prompts for the two cases.
std::string render_reflection_prompt(const RunMemory& memory,
                                     const std::vector<double>& best_curve);
std::string render_error_correction_prompt(const RunMemory& memory);

/// Failures condensed for prompts: identical (code, message) pairs
/// collapse into one bullet with a count; at most `cap` bullets, the
/// oldest beyond it summarized as a single line.
std::string render_error_summary(const std::vector<ErrEntry>& errors, std::size_t cap = 20);

} // namespace epitwin::agent
