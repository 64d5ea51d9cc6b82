#include "epitwin/sim/simulator.hpp"

#include "epitwin/dsl/printer.hpp"
#include "epitwin/util/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace epitwin::sim {

using ad::Tensor;

MetapopContext MetapopContext::identity(std::vector<double> population)
{
    MetapopContext ctx;
    const std::size_t L = population.size();
    std::vector<double> c(L * L, 0.0);
    for (std::size_t i = 0; i < L; ++i)
        c[i * L + i] = 1.0;
    ctx.contact = Tensor::from({L, L}, std::move(c));
    ctx.population = Tensor::from({L}, std::move(population));
    ctx.validate();
    return ctx;
}

MetapopContext MetapopContext::mixing(std::vector<double> population, double off_diagonal)
{
    MetapopContext ctx;
    const std::size_t L = population.size();
    std::vector<double> c(L * L, off_diagonal);
    for (std::size_t i = 0; i < L; ++i)
        c[i * L + i] = 1.0 - off_diagonal * static_cast<double>(L - 1);
    ctx.contact = Tensor::from({L, L}, std::move(c));
    ctx.population = Tensor::from({L}, std::move(population));
    ctx.validate();
    return ctx;
}

void MetapopContext::validate() const
{
    require(contact.rank() == 2 && contact.shape()[0] == contact.shape()[1],
            Errc::shape_error, "contact matrix must be square");
    require(population.rank() == 1 && population.shape()[0] == contact.shape()[0],
            Errc::shape_error, "population length must match the contact matrix");
    for (double n : population.values())
        require(n > 0.0, Errc::contract_error, "populations must be strictly positive");
    for (double c : contact.values())
        require(c >= 0.0 && c <= 1.0, Errc::contract_error,
                "contact entries must lie in [0, 1]");
}

CompiledModel compile(const dsl::ModelSpec& spec)
{
    CompiledModel m;
    m.spec = spec;
    m.compartments = spec.compartments;
    auto index_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < m.compartments.size(); ++i)
            if (m.compartments[i] == name)
                return static_cast<int>(i);
        return -1;
    };

    bool uses_foi = false;
    std::function<void(const dsl::ExprPtr&)> scan = [&](const dsl::ExprPtr& e) {
        if (!e)
            return;
        if (e->kind == dsl::ExprKind::call && e->builtin == dsl::Builtin::foi)
            uses_foi = true;
        for (const auto& a : e->args)
            scan(a);
    };

    for (const auto& f : spec.flows) {
        CompiledModel::FlowRef ref;
        if (f.from.internal()) {
            ref.from = index_of(f.from.name);
            require(ref.from >= 0, Errc::contract_error,
                    "unresolved flow source '" + f.from.name + "'");
        }
        if (f.to.internal()) {
            ref.to = index_of(f.to.name);
            require(ref.to >= 0, Errc::contract_error,
                    "unresolved flow target '" + f.to.name + "'");
        }
        ref.rate = f.rate;
        scan(f.rate);
        m.flows.push_back(std::move(ref));
    }
    m.observation = spec.observation;
    scan(spec.observation);
    m.uses_foi = uses_foi;
    if (uses_foi) {
        m.foi_compartment = index_of(spec.foi_compartment());
        require(m.foi_compartment >= 0, Errc::contract_error,
                "foi() target '" + spec.foi_compartment() + "' is not a compartment");
    }

    m.init.resize(m.compartments.size());
    for (const auto& [comp, e] : spec.init) {
        int idx = index_of(comp);
        require(idx >= 0, Errc::contract_error, "init for unresolved compartment '" + comp + "'");
        m.init[static_cast<std::size_t>(idx)] = e;
    }
    return m;
}

std::pair<Tensor, Tensor> effective_infections(const MetapopContext& ctx, const Tensor& infected)
{
    const std::size_t L = ctx.patches();
    require(infected.rank() == 1 && infected.shape()[0] == L, Errc::shape_error,
            "infected vector must have one entry per patch");
    // Column contraction: eff_j = sum_i C[i,j] x_i  ==  (x^T C)_j.
    Tensor i_row = ad::reshape(infected, {1, L});
    Tensor i_eff = ad::reshape(ad::matmul(i_row, ctx.contact), {L});
    Tensor n_row = ad::reshape(ctx.population, {1, L});
    Tensor n_eff = ad::reshape(ad::matmul(n_row, ctx.contact), {L});
    return {i_eff, n_eff};
}

Tensor force_of_infection(const Tensor& beta_t, const MetapopContext& ctx, const Tensor& infected)
{
    auto [i_eff, n_eff] = effective_infections(ctx, infected);
    Tensor n_guarded = ad::maximum(n_eff, Tensor::scalar(guard_epsilon));
    return ad::mul(beta_t, ad::div(i_eff, n_guarded));
}

namespace {

double eval_init_scalar(const dsl::ExprPtr& e, double population)
{
    if (!e)
        return 0.0;
    switch (e->kind) {
    case dsl::ExprKind::literal:
        return e->literal;
    case dsl::ExprKind::ident:
        require(e->name == "N", Errc::contract_error,
                "init expressions may reference only N, found '" + e->name + "'");
        return population;
    case dsl::ExprKind::neg:
        return -eval_init_scalar(e->args[0], population);
    case dsl::ExprKind::binary: {
        double a = eval_init_scalar(e->args[0], population);
        double b = eval_init_scalar(e->args[1], population);
        switch (e->op) {
        case dsl::BinOp::add: return a + b;
        case dsl::BinOp::sub: return a - b;
        case dsl::BinOp::mul: return a * b;
        case dsl::BinOp::div:
            require(std::fabs(b) >= ad::div_guard, Errc::numeric_guard_error,
                    "init division by near-zero");
            return a / b;
        }
        return 0.0;
    }
    case dsl::ExprKind::call: {
        require(e->builtin != dsl::Builtin::foi, Errc::contract_error, "foi() in init");
        double a = eval_init_scalar(e->args[0], population);
        double b = eval_init_scalar(e->args[1], population);
        if (e->builtin == dsl::Builtin::min)
            return std::fmin(a, b);
        if (e->builtin == dsl::Builtin::max)
            return std::fmax(a, b);
        return std::clamp(a, b, eval_init_scalar(e->args[2], population));
    }
    }
    return 0.0;
}

/// Per-step expression environment. Parameter slices and the foi
/// vector are extracted lazily and cached for the step.
class StepEnv {
public:
    StepEnv(const CompiledModel& model, const MetapopContext& ctx,
            const std::vector<Tensor>& state, const Tensor& params_t)
        : model_(model), ctx_(ctx), state_(state), params_t_(params_t),
          channel_cache_(8), L_(ctx.patches())
    {
    }

    Tensor eval(const dsl::ExprPtr& e)
    {
        switch (e->kind) {
        case dsl::ExprKind::literal:
            return Tensor::scalar(e->literal);
        case dsl::ExprKind::ident: {
            int c = dsl::channel_index(e->name);
            if (c >= 0)
                return channel(c);
            if (e->name == "N")
                return ctx_.population;
            for (std::size_t i = 0; i < model_.compartments.size(); ++i)
                if (model_.compartments[i] == e->name)
                    return state_[i];
            raise(Errc::contract_error, "unresolved identifier '" + e->name + "'");
        }
        case dsl::ExprKind::neg:
            return ad::neg(eval(e->args[0]));
        case dsl::ExprKind::binary: {
            Tensor a = eval(e->args[0]);
            Tensor b = eval(e->args[1]);
            switch (e->op) {
            case dsl::BinOp::add: return ad::add(a, b);
            case dsl::BinOp::sub: return ad::sub(a, b);
            case dsl::BinOp::mul: return ad::mul(a, b);
            case dsl::BinOp::div: return ad::div(a, b);
            }
            raise(Errc::contract_error, "bad binary op");
        }
        case dsl::ExprKind::call:
            switch (e->builtin) {
            case dsl::Builtin::foi:
                if (e->args.size() == 1)
                    return foi_for(compartment_index(e->args[0]->name));
                return foi_for(model_.foi_compartment);
            case dsl::Builtin::min:
                return ad::minimum(eval(e->args[0]), eval(e->args[1]));
            case dsl::Builtin::max:
                return ad::maximum(eval(e->args[0]), eval(e->args[1]));
            case dsl::Builtin::clamp:
                return ad::minimum(ad::maximum(eval(e->args[0]), eval(e->args[1])),
                                   eval(e->args[2]));
            }
            raise(Errc::contract_error, "bad builtin");
        }
        raise(Errc::contract_error, "bad expression node");
    }

    /// Broadcast a scalar result up to one value per patch.
    Tensor per_patch(Tensor t)
    {
        if (t.rank() == 1 && t.shape()[0] == L_)
            return t;
        return ad::add(Tensor::zeros({L_}), t);
    }

private:
    int compartment_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < model_.compartments.size(); ++i)
            if (model_.compartments[i] == name)
                return static_cast<int>(i);
        raise(Errc::contract_error, "foi() target '" + name + "' is not a compartment");
    }

    Tensor channel(int c)
    {
        auto& slot = channel_cache_[static_cast<std::size_t>(c)];
        if (!slot.defined())
            slot = ad::reshape(ad::slice(params_t_, 1, static_cast<std::size_t>(c), 1), {L_});
        return slot;
    }

    Tensor foi_for(int comp)
    {
        auto it = foi_cache_.find(comp);
        if (it != foi_cache_.end())
            return it->second;
        Tensor lambda =
            force_of_infection(channel(0), ctx_, state_[static_cast<std::size_t>(comp)]);
        // Contact-weighted pressure seen by each patch: sum_j C[i,j] lambda_j.
        Tensor coupled =
            ad::reshape(ad::matmul(ctx_.contact, ad::reshape(lambda, {L_, 1})), {L_});
        foi_cache_.emplace(comp, coupled);
        return coupled;
    }

    const CompiledModel& model_;
    const MetapopContext& ctx_;
    const std::vector<Tensor>& state_;
    const Tensor& params_t_;
    std::vector<Tensor> channel_cache_;
    std::map<int, Tensor> foi_cache_;
    std::size_t L_;
};

} // namespace

std::vector<Tensor> initial_state(const CompiledModel& model, const MetapopContext& ctx)
{
    const std::size_t L = ctx.patches();
    auto pop = ctx.population.values();
    std::vector<Tensor> state;
    state.reserve(model.compartments.size());
    for (std::size_t c = 0; c < model.compartments.size(); ++c) {
        std::vector<double> vals(L);
        for (std::size_t l = 0; l < L; ++l)
            vals[l] = eval_init_scalar(model.init[c], pop[l]);
        state.push_back(Tensor::from({L}, std::move(vals)));
    }
    return state;
}

StepResult step(const CompiledModel& model, const MetapopContext& ctx,
                const std::vector<Tensor>& state, const Tensor& params_t)
{
    const std::size_t L = ctx.patches();
    require(params_t.rank() == 2 && params_t.shape()[0] == L && params_t.shape()[1] == 8,
            Errc::shape_error, "params_t must have shape (L, 8)");
    require(state.size() == model.compartments.size(), Errc::contract_error,
            "state size does not match the compartment count");

    StepEnv env(model, ctx, state, params_t);

    // Rate of every flow, then the per-compartment net delta.
    std::vector<Tensor> rates;
    rates.reserve(model.flows.size());
    for (const auto& f : model.flows)
        rates.push_back(env.per_patch(env.eval(f.rate)));

    StepResult result;
    result.state.reserve(state.size());
    result.clamped_by_patch.assign(L, 0.0);
    for (std::size_t c = 0; c < state.size(); ++c) {
        Tensor next = state[c];
        for (std::size_t fi = 0; fi < model.flows.size(); ++fi) {
            if (model.flows[fi].to == static_cast<int>(c))
                next = ad::add(next, rates[fi]);
            if (model.flows[fi].from == static_cast<int>(c))
                next = ad::sub(next, rates[fi]);
        }
        // Clamp at zero; the clipped mass is part of the conservation report.
        auto vals = next.values();
        for (std::size_t l = 0; l < vals.size(); ++l) {
            if (!std::isfinite(vals[l]))
                raise(Errc::sim_divergence,
                      "non-finite value in compartment '" + model.compartments[c] + "'");
            if (vals[l] < 0.0) {
                result.clamped_mass += -vals[l];
                result.clamped_by_patch[l] += -vals[l];
            }
        }
        result.state.push_back(ad::relu(next));
    }

    if (model.observation)
        result.observed = env.per_patch(env.eval(model.observation));
    else
        result.observed = Tensor::zeros({L});
    for (double v : result.observed.values())
        if (!std::isfinite(v))
            raise(Errc::sim_divergence, "non-finite observation");
    return result;
}

StepResult step(const dsl::ModelSpec& spec, const MetapopContext& ctx,
                const std::vector<Tensor>& state, const Tensor& params_t)
{
    return step(compile(spec), ctx, state, params_t);
}

StateTrajectory simulate(const CompiledModel& model, const MetapopContext& ctx,
                         const ParamField& params, std::size_t horizon)
{
    const std::size_t L = ctx.patches();
    require(params.patches() == L, Errc::shape_error,
            "parameter field patch count does not match the context");
    require(params.steps() >= horizon, Errc::contract_error,
            "parameter field is shorter than the horizon");

    std::vector<Tensor> state = initial_state(model, ctx);
    std::vector<std::vector<Tensor>> per_comp(model.compartments.size());
    for (std::size_t c = 0; c < state.size(); ++c)
        per_comp[c].push_back(state[c]);
    std::vector<Tensor> observed;
    observed.reserve(horizon);

    StateTrajectory traj;
    traj.compartments = model.compartments;
    traj.clamped_by_patch.assign(L, 0.0);

    for (std::size_t t = 0; t < horizon; ++t) {
        Tensor params_t =
            ad::reshape(ad::slice(params.values, 1, t, 1), {L, 8});
        StepResult res;
        try {
            res = step(model, ctx, state, params_t);
        } catch (const Error& e) {
            if (e.code() == Errc::sim_divergence)
                raise(Errc::sim_divergence, "step " + std::to_string(t) + ": " + e.what());
            throw;
        }
        traj.clamped_mass += res.clamped_mass;
        for (std::size_t l = 0; l < L; ++l)
            traj.clamped_by_patch[l] += res.clamped_by_patch[l];
        state = std::move(res.state);
        for (std::size_t c = 0; c < state.size(); ++c)
            per_comp[c].push_back(state[c]);
        observed.push_back(res.observed);
    }

    for (std::size_t c = 0; c < per_comp.size(); ++c)
        traj.states.push_back(ad::stack(per_comp[c]));
    traj.yhat = observed.empty() ? Tensor::zeros({0, L}) : ad::stack(observed);
    return traj;
}

StateTrajectory simulate(const dsl::ModelSpec& spec, const MetapopContext& ctx,
                         const ParamField& params, std::size_t horizon)
{
    return simulate(compile(spec), ctx, params, horizon);
}

std::string trajectory_csv(const StateTrajectory& traj)
{
    std::ostringstream out;
    write_trajectory_csv(out, traj);
    return out.str();
}

void write_trajectory_csv(std::ostream& out, const StateTrajectory& traj)
{
    out << "patch,t";
    for (const auto& c : traj.compartments)
        out << ',' << c;
    out << ",yhat\n";
    if (traj.states.empty())
        return;
    const std::size_t T1 = traj.states[0].shape()[0];
    const std::size_t L = traj.states[0].shape()[1];
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t t = 0; t < T1; ++t) {
            out << l << ',' << t;
            for (const auto& s : traj.states)
                out << ',' << dsl::format_number(s.at(t * L + l));
            if (t + 1 < T1)
                out << ',' << dsl::format_number(traj.yhat.at(t * L + l));
            else
                out << ',';
            out << '\n';
        }
    }
}

} // namespace epitwin::sim
