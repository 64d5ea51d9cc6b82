#include "epitwin/agent/generator.hpp"

#include "epitwin/dsl/printer.hpp"
#include "epitwin/dsl/sampler.hpp"
#include "epitwin/util/error.hpp"

#include <algorithm>
#include <charconv>

namespace epitwin::agent {

std::string extract_fenced_block(const std::string& completion)
{
    std::size_t open = completion.find("```");
    if (open == std::string::npos)
        raise(Errc::format_error, "completion contains no fenced code block");
    std::size_t body = completion.find('\n', open);
    if (body == std::string::npos)
        raise(Errc::format_error, "unterminated code fence");
    std::size_t close = completion.find("```", body);
    if (close == std::string::npos)
        raise(Errc::format_error, "unterminated code fence");
    return completion.substr(body + 1, close - body - 1);
}

ParsedCandidate parse_candidate(const std::string& text, bool hybrid)
{
    dsl::ModelAndConfig parsed = dsl::parse_with_config(text);
    ParsedCandidate out;
    out.spec = std::move(parsed.spec);
    if (hybrid) {
        for (const auto& [key, value] : parsed.config) {
            if (key == "hidden") {
                std::size_t v = 0;
                auto res = std::from_chars(value.data(), value.data() + value.size(), v);
                require(res.ec == std::errc{} && v >= 4 && v <= 256, Errc::parse_error,
                        "config hidden must be an integer in [4, 256], got '" + value + "'");
                out.config.hidden = v;
            } else if (key == "cell") {
                out.config.cell = calib::cell_from(value);
            } else {
                raise(Errc::parse_error,
                      "config block: unknown key '" + key + "'; valid keys: hidden, cell");
            }
        }
    }
    out.normalized = dsl::pretty(out.spec);
    return out;
}

// ---- MutationGenerator ----------------------------------------------------

MutationGenerator::MutationGenerator(std::uint64_t seed, bool hybrid)
    : rng_(Rng(seed).stream(0x6E6E)), hybrid_(hybrid)
{
}

namespace {

/// Rank-biased parent pick: weight n - rank + 1 over the ascending-v
/// population.
const PopulationMember& pick_parent(Rng& rng, const RunMemory& memory)
{
    const std::size_t n = memory.population.size();
    std::size_t total = n * (n + 1) / 2;
    std::size_t roll = rng.below(total);
    std::size_t acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += n - i;
        if (roll < acc)
            return memory.population[i];
    }
    return memory.population.back();
}

std::string render_candidate(const dsl::ModelSpec& spec, const CandidateConfig& cfg, bool hybrid)
{
    std::string text = dsl::pretty(spec);
    if (hybrid)
        text += "config {\n  hidden = " + std::to_string(cfg.hidden) + ";\n  cell = " +
                calib::cell_name(cfg.cell) + ";\n}\n";
    return text;
}

} // namespace

std::string MutationGenerator::propose(const PromptBundle& bundle, const RunMemory& memory,
                                       const std::vector<Snippet>& snippets)
{
    (void)snippets;
    if (memory.population.empty()) {
        // Cold start: the skeleton's canonical model verbatim.
        (void)bundle;
        return skeleton_model_text();
    }

    const PopulationMember& parent = pick_parent(rng_, memory);
    dsl::ModelSpec spec = dsl::parse(parent.spec_text);
    CandidateConfig cfg = parent.config;

    enum class Edit { add_flow, remove_flow, rewrite_rate, perturb_config };
    std::vector<Edit> edits = {Edit::add_flow, Edit::rewrite_rate};
    if (spec.flows.size() > 3)
        edits.push_back(Edit::remove_flow);
    if (hybrid_)
        edits.push_back(Edit::perturb_config);

    switch (edits[rng_.below(edits.size())]) {
    case Edit::add_flow: {
        dsl::Flow f;
        if (rng_.chance(0.25)) {
            // Importation into a random compartment.
            f.from = {dsl::Endpoint::Kind::source, "", {}};
            f.to = {dsl::Endpoint::Kind::compartment,
                    spec.compartments[rng_.below(spec.compartments.size())],
                    {}};
            f.rate = dsl::sample_import_rate(rng_);
        } else {
            std::size_t from = rng_.below(spec.compartments.size());
            std::size_t to;
            do {
                to = rng_.below(spec.compartments.size());
            } while (to == from);
            f.from = {dsl::Endpoint::Kind::compartment, spec.compartments[from], {}};
            f.to = {dsl::Endpoint::Kind::compartment, spec.compartments[to], {}};
            f.rate = dsl::sample_safe_rate(rng_, spec.compartments, spec.compartments[from], 0.5);
        }
        spec.flows.push_back(std::move(f));
        break;
    }
    case Edit::remove_flow:
        spec.flows.erase(spec.flows.begin() +
                         static_cast<std::ptrdiff_t>(rng_.below(spec.flows.size())));
        break;
    case Edit::rewrite_rate: {
        std::size_t i = rng_.below(spec.flows.size());
        const auto& from = spec.flows[i].from;
        std::string from_name = from.internal() ? from.name : spec.compartments[0];
        spec.flows[i].rate =
            from.internal()
                ? dsl::sample_safe_rate(rng_, spec.compartments, from_name, 1.0)
                : dsl::sample_import_rate(rng_);
        break;
    }
    case Edit::perturb_config: {
        static const std::size_t kHidden[] = {16, 24, 32, 48, 64};
        cfg.hidden = kHidden[rng_.below(5)];
        cfg.cell = rng_.chance(0.5) ? calib::CellKind::gru : calib::CellKind::mgu;
        break;
    }
    }
    return render_candidate(spec, cfg, hybrid_);
}

// ---- LlmGenerator ----------------------------------------------------------

LlmGenerator::LlmGenerator(LlmConfig cfg, bool hybrid) : client_(std::move(cfg)), hybrid_(hybrid)
{
}

std::string LlmGenerator::propose(const PromptBundle& bundle, const RunMemory& memory,
                                  const std::vector<Snippet>& snippets)
{
    (void)hybrid_;
    std::vector<ChatMessage> messages = {
        {"system", bundle.system_prompt()},
        {"user", render_modeling_context(memory, snippets)},
    };
    std::string completion = client_.complete(messages);
    return extract_fenced_block(completion);
}

} // namespace epitwin::agent
