#pragma once

#include "epitwin/agent/llm.hpp"
#include "epitwin/agent/memory.hpp"
#include "epitwin/agent/prompts.hpp"
#include "epitwin/agent/snippets.hpp"
#include "epitwin/dsl/parser.hpp"
#include "epitwin/util/rng.hpp"

#include <memory>
#include <string>
#include <vector>

namespace epitwin::agent {

/// First fenced code block of a completion; when several are present
/// the first is taken. Throws FORMAT_ERROR when none exists.
std::string extract_fenced_block(const std::string& completion);

struct ParsedCandidate {
    dsl::ModelSpec spec;
    CandidateConfig config;
    std::string normalized; // pretty-printed spec text (dedup key)
};

/// Parse candidate text (model + optional config block). In
/// mechanistic mode the config block is tolerated but locked to the
/// defaults. Throws PARSE_ERROR.
ParsedCandidate parse_candidate(const std::string& text, bool hybrid);

class CandidateGenerator {
public:
    virtual ~CandidateGenerator() = default;
    /// Candidate text for the next generation. May throw
    /// GENERATOR_ERROR or FORMAT_ERROR; the loop contains both.
    virtual std::string propose(const PromptBundle& bundle, const RunMemory& memory,
                                const std::vector<Snippet>& snippets) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic offline generator: the skeleton model as generation
/// zero, then one seeded grammar-level edit of a rank-biased parent
/// (add flow, remove flow, rewrite a rate, perturb the config block in
/// hybrid mode).
class MutationGenerator : public CandidateGenerator {
public:
    MutationGenerator(std::uint64_t seed, bool hybrid);

    std::string propose(const PromptBundle& bundle, const RunMemory& memory,
                        const std::vector<Snippet>& snippets) override;
    std::string name() const override { return "mutation"; }

private:
    Rng rng_;
    bool hybrid_;
};

/// Chat-completions backed generator.
class LlmGenerator : public CandidateGenerator {
public:
    LlmGenerator(LlmConfig cfg, bool hybrid);

    std::string propose(const PromptBundle& bundle, const RunMemory& memory,
                        const std::vector<Snippet>& snippets) override;
    std::string name() const override { return "llm"; }

private:
    LlmClient client_;
    bool hybrid_;
};

} // namespace epitwin::agent
