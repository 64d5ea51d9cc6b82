#include "epitwin/agent/loop.hpp"

#include "epitwin/agent/insights.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace epitwin::agent {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Up to `radius` lines either side of the line a message points at.
std::string excerpt_around(const std::string& text, const std::string& message, int radius = 2)
{
    int line_no = 0;
    std::size_t pos = message.find("line ");
    if (pos != std::string::npos)
        line_no = std::atoi(message.c_str() + pos + 5);

    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        lines.push_back(line);
    if (lines.empty())
        return "";
    int lo, hi;
    if (line_no >= 1) {
        lo = std::max(0, line_no - 1 - radius);
        hi = std::min<int>(static_cast<int>(lines.size()), line_no + radius);
    } else {
        lo = 0;
        hi = std::min<int>(static_cast<int>(lines.size()), 2 * radius + 1);
    }
    std::ostringstream out;
    for (int i = lo; i < hi; ++i)
        out << "    " << lines[static_cast<std::size_t>(i)] << '\n';
    return out.str();
}

nlohmann::ordered_json curve_json(const std::vector<double>& curve)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (double v : curve) {
        if (std::isnan(v))
            arr.push_back(nullptr);
        else
            arr.push_back(v);
    }
    return arr;
}

} // namespace

nlohmann::ordered_json EvolveResult::report() const
{
    nlohmann::ordered_json rep;
    rep["generations"] = log.to_json();
    if (best_generation >= 0)
        rep["best"] = {{"spec_text", best_text}, {"v", best_v}, {"generation", best_generation}};
    else
        rep["best"] = nullptr;
    rep["bug_counts_at_20"] = eval::bug_counts_at(log, 20);
    rep["curve"] = {{"mean_v", curve_json(mean_curve)}, {"best_v", curve_json(best_curve)}};
    return rep;
}

EvalOutcome evaluate_candidate(const ParsedCandidate& candidate, const eval::Dataset& data,
                               const EvolveConfig& cfg)
{
    EvalOutcome out;
    eval::EvalConfig ecfg = cfg.eval;
    ecfg.hidden = candidate.config.hidden;
    ecfg.cell = candidate.config.cell;
    // Identical candidates score identically, independent of when the
    // loop reaches them.
    ecfg.train.seed =
        Rng(cfg.seed).stream(fnv1a(candidate.normalized + candidate.config.canonical())).next_u64();
    try {
        auto report = eval::realtime_eval(candidate.spec, data, ecfg);
        out.ok = true;
        out.v = report.mean_rmse;
    } catch (const Error& e) {
        out.error = e.what();
        out.error_code = errc_name(e.code());
    } catch (const std::exception& e) {
        out.error = e.what();
        out.error_code = "RUNTIME";
    }
    return out;
}

EvolveResult evolve(const EvolveEnv& env, const EvolveConfig& cfg)
{
    require(cfg.generations >= 1, Errc::config_error, "evolve needs G >= 1");
    require(cfg.k >= 1, Errc::config_error, "evolve needs k >= 1");

    EvolveResult result;
    result.memory.k = cfg.k;

    PromptBundle bundle;
    bundle.task = render_task_description(env.data);
    bundle.skeleton = default_skeleton(cfg.hybrid);
    bundle.insights = extract_insights(env.data, env.reflector);

    double sum_v = 0.0;
    long scored = 0;
    double best_v = kNan;

    for (int g = 1; g <= cfg.generations; ++g) {
        // Retrieval keyed on the latest reflection, the task before one exists.
        std::vector<Snippet> snippets;
        if (env.snippets && env.snippets->size() > 0)
            snippets = env.snippets->retrieve(
                result.memory.last_reflection.empty() ? bundle.task
                                                      : result.memory.last_reflection,
                3);

        eval::CandidateRecord record;
        record.generation = g;
        bool failure = false;
        std::string accepted_text;

        std::string text;
        try {
            text = env.generator.propose(bundle, result.memory, snippets);
        } catch (const Error& e) {
            record.status = e.code() == Errc::format_error ? eval::CandidateStatus::parse_error
                                                           : eval::CandidateStatus::runtime_error;
            record.error = e.what();
            record.error_code = errc_name(e.code());
            result.memory.errors.push_back({g, record.error_code, record.error, ""});
            failure = true;
        } catch (const std::exception& e) {
            record.status = eval::CandidateStatus::runtime_error;
            record.error = e.what();
            record.error_code = "RUNTIME";
            result.memory.errors.push_back({g, record.error_code, record.error, ""});
            failure = true;
        }

        if (!failure) {
            GateResult gate = verify_candidate(text, cfg.verify, env.judge);
            if (!gate.accepted()) {
                record.status = gate.outcome == GateResult::Outcome::parse_rejected
                                    ? eval::CandidateStatus::parse_error
                                    : eval::CandidateStatus::verify_error;
                record.error = gate.reason;
                record.error_code = gate.error_code;
                result.memory.errors.push_back(
                    {g, gate.error_code, gate.reason, excerpt_around(text, gate.reason)});
                failure = true;
            } else {
                const ParsedCandidate& cand = *gate.candidate;
                if (const PopulationMember* dup =
                        result.memory.find(cand.normalized, cand.config)) {
                    record.status = eval::CandidateStatus::ok;
                    record.v = dup->v;
                    record.duplicate = true;
                    sum_v += dup->v;
                    ++scored;
                    accepted_text = cand.normalized;
                } else {
                    EvalOutcome outcome = evaluate_candidate(cand, env.data, cfg);
                    if (outcome.ok) {
                        record.status = eval::CandidateStatus::ok;
                        record.v = outcome.v;
                        sum_v += outcome.v;
                        ++scored;
                        accepted_text = cand.normalized;
                        result.memory.insert({cand.normalized, cand.config, outcome.v, g});
                        if (std::isnan(best_v) || outcome.v < best_v) {
                            best_v = outcome.v;
                            result.best_text = cand.normalized;
                            result.best_v = outcome.v;
                            result.best_generation = g;
                        }
                    } else {
                        record.status = eval::CandidateStatus::runtime_error;
                        record.error = outcome.error;
                        record.error_code = outcome.error_code;
                        result.memory.errors.push_back(
                            {g, outcome.error_code, outcome.error,
                             excerpt_around(text, outcome.error)});
                        failure = true;
                    }
                }
            }
        }

        result.log.records.push_back(record);
        result.best_curve.push_back(best_v);
        result.mean_curve.push_back(scored > 0 ? sum_v / static_cast<double>(scored) : kNan);

        ReflectInput rin{result.memory,
                         failure,
                         g >= 2 ? result.best_curve[static_cast<std::size_t>(g - 2)] : kNan,
                         best_v,
                         accepted_text,
                         result.best_curve};
        result.memory.last_reflection = reflect(rin, env.reflector);
    }
    return result;
}

} // namespace epitwin::agent
