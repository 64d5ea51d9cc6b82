#include "epitwin/agent/reflect.hpp"

#include "epitwin/agent/prompts.hpp"
#include "epitwin/dsl/parser.hpp"
#include "epitwin/dsl/printer.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/log.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace epitwin::agent {

namespace {

std::set<std::string> flow_lines(const std::string& spec_text)
{
    std::set<std::string> out;
    try {
        dsl::ModelSpec spec = dsl::parse(spec_text);
        for (const auto& f : spec.flows)
            out.insert(f.from.label() + " -> " + f.to.label() + " : " + dsl::pretty(f.rate));
    } catch (const Error&) {
        // Unparseable candidates carry no structure to diff.
    }
    return out;
}

} // namespace

std::string reflect_offline(const ReflectInput& input)
{
    std::ostringstream out;
    if (input.failure) {
        out << "The last generation failed; condensed failure log:\n"
            << render_error_summary(input.memory.errors)
            << "Address the newest failure first and keep the model minimal.\n";
        return out.str();
    }

    if (std::isnan(input.new_best)) {
        out << "No candidate has been scored yet; start from the template structure.\n";
        return out.str();
    }

    if (!std::isnan(input.prev_best) && input.new_best < input.prev_best) {
        out << "Best validation RMSE improved by "
            << dsl::format_number(input.prev_best - input.new_best) << " ("
            << dsl::format_number(input.prev_best) << " -> "
            << dsl::format_number(input.new_best) << ").\n";
    } else {
        out << "Best validation RMSE unchanged at " << dsl::format_number(input.new_best)
            << ".\n";
    }

    if (!input.last_accepted_text.empty() && !input.memory.population.empty()) {
        auto last = flow_lines(input.last_accepted_text);
        auto best = flow_lines(input.memory.population.front().spec_text);
        std::ostringstream added, removed;
        for (const auto& f : last)
            if (!best.count(f))
                added << "  + " << f << '\n';
        for (const auto& f : best)
            if (!last.count(f))
                removed << "  - " << f << '\n';
        if (!added.str().empty() || !removed.str().empty())
            out << "Structure of the latest candidate relative to the best:\n"
                << added.str() << removed.str();
        else
            out << "The latest candidate shares the best model's flow structure.\n";
    }

    std::map<std::string, int> code_counts;
    for (const auto& e : input.memory.errors)
        ++code_counts[e.code];
    std::string recurring;
    for (const auto& [code, n] : code_counts)
        if (n > 1)
            recurring += (recurring.empty() ? "" : ", ") + code + " (x" + std::to_string(n) + ")";
    if (!recurring.empty())
        out << "Recurring failure codes: " << recurring << ".\n";
    return out.str();
}

std::string reflect(const ReflectInput& input, const LlmClient* llm)
{
    if (!llm)
        return reflect_offline(input);
    try {
        std::string prompt = input.failure
                                 ? render_error_correction_prompt(input.memory)
                                 : render_reflection_prompt(input.memory, input.best_curve);
        return llm->complete({{"user", prompt}});
    } catch (const Error& e) {
        log::warn(std::string("reflection endpoint failed (") + e.what() +
                  "); using the offline template");
        return reflect_offline(input);
    }
}

} // namespace epitwin::agent
