#include "epitwin/agent/prompts.hpp"

#include "epitwin/dsl/printer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace epitwin::agent {

std::string PromptBundle::system_prompt() const
{
    std::ostringstream out;
    out << task << "\n\n## Dataset insights\n" << insights << "\n\n## Model template\n"
        << skeleton;
    return out.str();
}

const std::string& skeleton_model_text()
{
    static const std::string text =
        "model seirm {\n"
        "  compartments S, E, I, R, M;\n"
        "  flow S -> E : foi() * S;\n"
        "  flow E -> I : alpha * E;\n"
        "  flow I -> R : gamma * I;\n"
        "  flow I -> M : mor * I;\n"
        "  flow R -> S : delta * R;\n"
        "  init S = N - 10;\n"
        "  init E = 0;\n"
        "  init I = 10;\n"
        "  init R = 0;\n"
        "  init M = 0;\n"
        "  observe alpha * E;\n"
        "}\n";
    return text;
}

std::string default_skeleton(bool hybrid)
{
    std::ostringstream out;
    out << "Emit exactly one fenced code block containing a model in this DSL:\n"
        << "```\n"
        << "# model NAME {\n"
        << "#   compartments A, B, ...;      state variables\n"
        << "#   couple I;                    optional: compartment feeding foi()\n"
        << "#   flow FROM -> TO : RATE;      endpoints may be SOURCE or SINK\n"
        << "#   init A = N - 10;             per-patch masses, must sum to N\n"
        << "#   observe EXPR;                the simulated target series\n"
        << "# }\n"
        << skeleton_model_text() << "```\n"
        << "Rate expressions may use the compartments, the bounded parameter\n"
        << "channels beta, alpha, gamma, delta, kappa, epsilon, symprob, mor,\n"
        << "the population N, numeric literals, foi(), min, max, clamp and\n"
        << "+ - * /. Guard every division as x / max(d, 1e-08). beta acts only\n"
        << "through foi(); gamma belongs on flows out of I; mor on flows into\n"
        << "SINK or an absorbing compartment.\n";
    if (hybrid)
        out << "You may append a calibration block after the model:\n"
            << "```\nconfig {\n  hidden = 32;\n  cell = gru;\n}\n```\n"
            << "hidden is one of 16, 24, 32, 48, 64; cell is gru or mgu.\n";
    return out.str();
}

std::string render_task_description(const eval::Dataset& data)
{
    std::ostringstream out;
    out << "You are designing the mechanistic half of a neural-integrated epidemic\n"
        << "model. A trainable sequence network reads the dataset signals and emits\n"
        << "the eight bounded parameter channels per location and step; the model\n"
        << "you write consumes them in a discrete-time metapopulation simulation.\n"
        << "Dataset: " << data.L << " locations, " << data.T << " steps per "
        << eval::cadence_name(data.cadence) << ", " << data.d << " features (";
    for (std::size_t f = 0; f < data.feature_names.size(); ++f) {
        if (f)
            out << ", ";
        out << data.feature_names[f];
    }
    out << "); target feature '" << data.feature_names[data.target_feature] << "'.\n"
        << "Objective: minimize the rolling-origin validation RMSE between the\n"
        << "model's observe series and the target.\n";
    return out.str();
}

namespace {

std::string data_preview(const eval::Dataset& data)
{
    std::ostringstream out;
    auto row = [&](std::size_t t) {
        out << "t=" << t;
        for (std::size_t l = 0; l < std::min<std::size_t>(data.L, 4); ++l)
            out << " l" << l << "=" << dsl::format_number(data.target(l, t));
        out << '\n';
    };
    out << "target head:\n";
    for (std::size_t t = 0; t < std::min<std::size_t>(data.T, 5); ++t)
        row(t);
    out << "target tail:\n";
    for (std::size_t t = data.T >= 5 ? data.T - 5 : 0; t < data.T; ++t)
        row(t);

    for (std::size_t f = 0; f < data.d; ++f) {
        double mn = data.at(0, 0, f), mx = mn, acc = 0.0;
        for (std::size_t l = 0; l < data.L; ++l)
            for (std::size_t t = 0; t < data.T; ++t) {
                double v = data.at(l, t, f);
                mn = std::min(mn, v);
                mx = std::max(mx, v);
                acc += v;
            }
        out << "feature '" << data.feature_names[f] << "': min " << dsl::format_number(mn)
            << " max " << dsl::format_number(mx) << " mean "
            << dsl::format_number(acc / static_cast<double>(data.L * data.T)) << '\n';
    }
    return out.str();
}

} // namespace

std::string render_insights_prompt(const eval::Dataset& data)
{
    std::ostringstream out;
    out << "You are preparing to design a mechanistic epidemic model for the\n"
        << "dataset summarized below. Identify structural patterns, temporal\n"
        << "behaviour, and feature relationships, and turn them into concrete\n"
        << "modeling tips: compartments to include, parameter behaviour over\n"
        << "time, seasonality, importation, and the observation model.\n\n"
        << "## Data\n\n"
        << data_preview(data) << "\n"
        << "Write your numbered observations and tips after a line containing\n"
        << "exactly ###TIPs\n";
    return out.str();
}

std::string render_verification_prompt(const std::string& model_text,
                                       const dsl::VerifyReport& report)
{
    std::ostringstream out;
    out << "Review the compartmental model below, written as flows between\n"
        << "states. Derive the per-compartment update equations, then judge:\n"
        << "1. compartments stay nonnegative under the stated clamping;\n"
        << "2. conservation holds where the structure implies it;\n"
        << "3. rates carry plausible signs and roles (beta transmission via\n"
        << "   foi(), gamma recovery out of I, mor mortality into a sink);\n"
        << "4. no undefined dynamics such as unguarded division;\n"
        << "5. the observe series matches the declared target.\n";
    if (!report.warnings.empty()) {
        out << "Linter findings to weigh:\n";
        for (const auto& w : report.warnings)
            out << "- " << w.code << ": " << w.msg << '\n';
    }
    out << "\nModel:\n```\n" << model_text << "```\n\n"
        << "End with one line: VERDICT: ACCEPT or VERDICT: REJECT.\n";
    return out.str();
}

std::string render_error_summary(const std::vector<ErrEntry>& errors, std::size_t cap)
{
    if (errors.empty())
        return "";
    // Collapse identical (code, message) pairs, newest kept.
    std::vector<std::pair<ErrEntry, int>> grouped;
    for (const auto& e : errors) {
        bool merged = false;
        for (auto& [entry, count] : grouped)
            if (entry.code == e.code && entry.message == e.message) {
                ++count;
                entry.generation = e.generation;
                merged = true;
                break;
            }
        if (!merged)
            grouped.emplace_back(e, 1);
    }
    std::ostringstream out;
    std::size_t start = grouped.size() > cap ? grouped.size() - cap : 0;
    if (start > 0)
        out << "(" << start << " earlier distinct failures omitted)\n";
    static const std::map<std::string, std::string> kFixHints = {
        {"PARSE_ERROR", "fix the syntax at the reported position; honour the expected-token list"},
        {"FORMAT_ERROR", "emit exactly one fenced code block containing the model"},
        {"GENERATOR_ERROR", "endpoint failure; retry or switch to the offline generator"},
        {"E1", "declare every identifier; only channels, compartments and N may appear"},
        {"E2", "guard the division: write x / max(d, 1e-08)"},
        {"E3", "make the init masses nonnegative and sum to N"},
        {"E4", "declare exactly one observe expression without SOURCE/SINK"},
        {"SIM_DIVERGENCE", "rates overdraw compartments; scale rates down or clamp them"},
        {"OPTIMIZER_DIVERGENCE", "training exploded; prefer smoother, bounded rate forms"},
    };
    for (std::size_t i = start; i < grouped.size(); ++i) {
        const auto& [e, count] = grouped[i];
        out << "- [" << e.code << "]";
        if (count > 1)
            out << " (x" << count << ")";
        out << " " << e.message << '\n';
        if (!e.excerpt.empty())
            out << "  excerpt:\n" << e.excerpt;
        auto hint = kFixHints.find(e.code);
        if (hint != kFixHints.end())
            out << "  fix: " << hint->second << '\n';
    }
    return out.str();
}

std::string render_modeling_context(const RunMemory& memory, const std::vector<Snippet>& snippets)
{
    std::ostringstream out;
    if (!memory.population.empty()) {
        out << "## Current top models (best first)\n";
        for (const auto& m : memory.population) {
            out << "validation RMSE " << dsl::format_number(m.v) << " (generation "
                << m.generation << ", " << m.config.canonical() << "):\n```\n"
                << m.spec_text << "```\n";
        }
    }
    std::string errs = render_error_summary(memory.errors);
    if (!errs.empty())
        out << "## Past failures\n" << errs;
    if (!memory.last_reflection.empty())
        out << "## Latest reflection\n" << memory.last_reflection << '\n';
    if (!snippets.empty()) {
        out << "## Reference snippets\n";
        for (const auto& s : snippets)
            out << "[" << s.id << "]\n" << s.text << '\n';
    }
    out << "\nPropose the next model now. Respond with exactly one fenced code block.\n";
    return out.str();
}

std::string render_reflection_prompt(const RunMemory& memory,
                                     const std::vector<double>& best_curve)
{
    std::ostringstream out;
    out << "You are steering an iterative search over mechanistic models; only\n"
        << "the calibration network is trained per candidate. Analyze the top\n"
        << "models below and the best-so-far validation curve, diagnose what\n"
        << "limits them (structure, stability, observation choice), and give\n"
        << "prescriptive instructions for the next candidate: flows to add or\n"
        << "remove, rate forms, parameter roles. Do not write full model code.\n\n";
    out << "Best-so-far validation RMSE per generation:";
    for (double v : best_curve)
        out << ' ' << (std::isnan(v) ? std::string("-") : dsl::format_number(v));
    out << "\n\n## Top models (best first)\n";
    for (const auto& m : memory.population)
        out << "RMSE " << dsl::format_number(m.v) << ":\n```\n" << m.spec_text << "```\n";
    return out.str();
}

std::string render_error_correction_prompt(const RunMemory& memory)
{
    std::ostringstream out;
    out << "The attempts below failed to run. Condense them into bullets with\n"
        << "the key code fragment, the core error, and a specific fix, so the\n"
        << "next generation avoids repeating them.\n\n"
        << "############\n"
        << render_error_summary(memory.errors) << "############\n";
    return out.str();
}

} // namespace epitwin::agent
