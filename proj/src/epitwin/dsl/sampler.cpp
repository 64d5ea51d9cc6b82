#include "epitwin/dsl/sampler.hpp"

#include <algorithm>

namespace epitwin::dsl {

namespace {

const std::vector<std::string> kNamePool = {"S", "E", "I", "R", "M", "A", "H", "Q", "V", "W", "P", "C"};

std::string pick_channel(Rng& rng)
{
    return std::string(channel_names[rng.below(channel_names.size())]);
}

// ---- grammar mode -------------------------------------------------------

ExprPtr sample_wild_expr(Rng& rng, const std::vector<std::string>& comps, int depth)
{
    if (depth <= 0 || rng.chance(0.35)) {
        switch (rng.below(4)) {
        case 0:
            return make_literal(rng.chance(0.3) ? static_cast<double>(rng.below(100))
                                                : rng.uniform(0.0, 2.0));
        case 1:
            return make_ident(pick_channel(rng));
        case 2:
            return make_ident("N");
        default:
            return comps.empty() ? make_literal(1.0)
                                 : make_ident(comps[rng.below(comps.size())]);
        }
    }
    switch (rng.below(7)) {
    case 0:
        return make_neg(sample_wild_expr(rng, comps, depth - 1));
    case 1:
        return make_call(Builtin::foi, {});
    case 2:
        return make_call(Builtin::foi,
                         {comps.empty() ? make_ident("I") : make_ident(comps[rng.below(comps.size())])});
    case 3:
        return make_call(Builtin::min, {sample_wild_expr(rng, comps, depth - 1),
                                        sample_wild_expr(rng, comps, depth - 1)});
    case 4:
        return make_call(Builtin::max, {sample_wild_expr(rng, comps, depth - 1),
                                        sample_wild_expr(rng, comps, depth - 1)});
    case 5:
        return make_call(Builtin::clamp, {sample_wild_expr(rng, comps, depth - 1),
                                          sample_wild_expr(rng, comps, depth - 1),
                                          sample_wild_expr(rng, comps, depth - 1)});
    default: {
        BinOp op = static_cast<BinOp>(rng.below(4));
        return make_binary(op, sample_wild_expr(rng, comps, depth - 1),
                           sample_wild_expr(rng, comps, depth - 1));
    }
    }
}

ModelSpec sample_grammar_model(Rng& rng)
{
    ModelSpec spec;
    spec.name = "m" + std::to_string(rng.below(100000));
    std::size_t n_comps = 1 + rng.below(6);
    std::vector<std::string> pool = kNamePool;
    for (std::size_t i = 0; i < n_comps; ++i) {
        std::size_t j = rng.below(pool.size());
        spec.compartments.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }

    if (rng.chance(0.3))
        spec.coupling = spec.compartments[rng.below(spec.compartments.size())];

    std::size_t n_flows = rng.below(8);
    for (std::size_t i = 0; i < n_flows; ++i) {
        Flow f;
        auto endpoint = [&](bool allow_source, bool allow_sink) {
            Endpoint e;
            std::size_t r = rng.below(10);
            if (allow_source && r == 0) {
                e.kind = Endpoint::Kind::source;
            } else if (allow_sink && r == 1) {
                e.kind = Endpoint::Kind::sink;
            } else {
                e.kind = Endpoint::Kind::compartment;
                e.name = spec.compartments[rng.below(spec.compartments.size())];
            }
            return e;
        };
        f.from = endpoint(true, false);
        f.to = endpoint(false, true);
        f.rate = sample_wild_expr(rng, spec.compartments, 3);
        spec.flows.push_back(std::move(f));
    }

    std::size_t n_inits = rng.below(spec.compartments.size() + 1);
    for (std::size_t i = 0; i < n_inits; ++i)
        spec.init.emplace_back(spec.compartments[i], sample_wild_expr(rng, {}, 2));

    if (rng.chance(0.85))
        spec.observation = sample_wild_expr(rng, spec.compartments, 2);
    return spec;
}

// ---- verified mode --------------------------------------------------------

ExprPtr literal_budget(double budget)
{
    return make_literal(budget);
}

} // namespace

ExprPtr sample_safe_rate(Rng& rng, const std::vector<std::string>& compartments,
                         const std::string& from, double budget)
{
    // coefficient * FROM, coefficient <= budget under default bounds.
    ExprPtr coef = literal_budget(budget);
    if (from == "S" && rng.chance(0.7)) {
        coef = make_binary(BinOp::mul, coef, make_call(Builtin::foi, {}));
    } else {
        coef = make_binary(BinOp::mul, coef, make_ident(pick_channel(rng)));
        if (rng.chance(0.35))
            coef = make_binary(
                BinOp::mul, coef,
                make_binary(BinOp::sub, make_literal(1.0), make_ident(pick_channel(rng))));
    }
    ExprPtr rate = make_binary(BinOp::mul, coef, make_ident(from));
    if (rng.chance(0.2)) {
        // Exercise guarded division without changing the magnitude class:
        // FROM * N / max(N, 1) == FROM for positive populations.
        rate = make_binary(BinOp::div, make_binary(BinOp::mul, rate, make_ident("N")),
                           make_call(Builtin::max, {make_ident("N"), make_literal(1.0)}));
    }
    (void)compartments;
    return rate;
}

ExprPtr sample_import_rate(Rng& rng)
{
    // 0.001 * epsilon * N; a trickle relative to the population.
    return make_binary(BinOp::mul,
                       make_binary(BinOp::mul, make_literal(0.001), make_ident("epsilon")),
                       make_ident("N"));
    (void)rng;
}

namespace {

ModelSpec sample_verified_model(Rng& rng)
{
    ModelSpec spec;
    spec.name = "g" + std::to_string(rng.below(100000));

    // S and I anchor the transmission structure; I feeds foi().
    spec.compartments = {"S", "I"};
    std::vector<std::string> extras = {"E", "R", "M", "A", "H"};
    std::size_t n_extra = 1 + rng.below(3);
    for (std::size_t i = 0; i < n_extra && !extras.empty(); ++i) {
        std::size_t j = rng.below(extras.size());
        spec.compartments.push_back(extras[j]);
        extras.erase(extras.begin() + static_cast<std::ptrdiff_t>(j));
    }
    std::sort(spec.compartments.begin(), spec.compartments.end());

    // One or two outflows per non-absorbing compartment; budgets split
    // so total per-step outflow stays below the source mass.
    std::size_t absorbing = rng.below(spec.compartments.size());
    for (std::size_t ci = 0; ci < spec.compartments.size(); ++ci) {
        if (ci == absorbing)
            continue;
        const std::string& from = spec.compartments[ci];
        std::size_t n_out = 1 + (rng.chance(0.4) ? 1 : 0);
        double budget = n_out == 1 ? 1.0 : 0.5;
        for (std::size_t k = 0; k < n_out; ++k) {
            Flow f;
            f.from = {Endpoint::Kind::compartment, from, {}};
            if (rng.chance(0.08)) {
                f.to = {Endpoint::Kind::sink, "", {}};
            } else {
                std::size_t to;
                do {
                    to = rng.below(spec.compartments.size());
                } while (to == ci);
                f.to = {Endpoint::Kind::compartment, spec.compartments[to], {}};
            }
            f.rate = sample_safe_rate(rng, spec.compartments, from, budget);
            spec.flows.push_back(std::move(f));
        }
    }
    if (rng.chance(0.25)) {
        Flow f;
        f.from = {Endpoint::Kind::source, "", {}};
        std::size_t to = rng.below(spec.compartments.size());
        f.to = {Endpoint::Kind::compartment, spec.compartments[to], {}};
        f.rate = sample_import_rate(rng);
        spec.flows.push_back(std::move(f));
    }

    // Seed ten units of infection; the rest susceptible.
    for (const auto& c : spec.compartments) {
        if (c == "I")
            spec.init.emplace_back(c, make_literal(10.0));
        else if (c == "S")
            spec.init.emplace_back(c, make_binary(BinOp::sub, make_ident("N"), make_literal(10.0)));
        else
            spec.init.emplace_back(c, make_literal(0.0));
    }

    if (rng.chance(0.5)) {
        spec.observation = make_ident("I");
    } else {
        // Incidence-style: reuse the rate of a flow into I when one
        // exists, otherwise fall back to prevalence.
        ExprPtr obs;
        for (const auto& f : spec.flows)
            if (f.to.internal() && f.to.name == "I")
                obs = f.rate;
        spec.observation = obs ? obs : make_ident("I");
    }
    return spec;
}

} // namespace

ModelSpec sample_model(Rng& rng, SampleMode mode)
{
    return mode == SampleMode::grammar ? sample_grammar_model(rng) : sample_verified_model(rng);
}

} // namespace epitwin::dsl
