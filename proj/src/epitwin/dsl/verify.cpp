#include "epitwin/dsl/verify.hpp"

#include "epitwin/dsl/printer.hpp"
#include "epitwin/util/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

namespace epitwin::dsl {

VerifyConfig VerifyConfig::defaults()
{
    VerifyConfig cfg;
    cfg.roles["beta"] = {Role::Kind::foi_only, ""};
    cfg.roles["gamma"] = {Role::Kind::outflow_of, "I"};
    cfg.roles["mor"] = {Role::Kind::into_sink, ""};
    return cfg;
}

bool VerifyReport::has(std::string_view code) const
{
    for (const auto& f : errors)
        if (f.code == code)
            return true;
    for (const auto& f : warnings)
        if (f.code == code)
            return true;
    return false;
}

nlohmann::ordered_json VerifyReport::to_json() const
{
    auto render = [](const std::vector<Finding>& fs) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& f : fs)
            arr.push_back({{"code", f.code},
                           {"msg", f.msg},
                           {"span", {{"line", f.span.line}, {"col", f.span.col}}}});
        return arr;
    };
    return {{"errors", render(errors)}, {"warnings", render(warnings)}};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lo, hi;
};

double iprod(double a, double b)
{
    if (a == 0.0 || b == 0.0)
        return 0.0; // interval convention: 0 * inf = 0
    return a * b;
}

Interval imul(Interval a, Interval b)
{
    double c[4] = {iprod(a.lo, b.lo), iprod(a.lo, b.hi), iprod(a.hi, b.lo), iprod(a.hi, b.hi)};
    return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

Interval iminmax(Interval a, Interval b, bool take_min)
{
    if (take_min)
        return {std::fmin(a.lo, b.lo), std::fmin(a.hi, b.hi)};
    return {std::fmax(a.lo, b.lo), std::fmax(a.hi, b.hi)};
}

class Checker {
public:
    Checker(const ModelSpec& spec, const VerifyConfig& cfg) : spec_(spec), cfg_(cfg) {}

    VerifyReport run()
    {
        collect_structure();
        rule_e1_identifiers();
        rule_e2_division();
        rule_e3_init_masses();
        rule_e4_observation();
        rule_w1_duplicate_flows();
        rule_w2_additive_params();
        rule_w3_roles();
        rule_w4_sign();
        return std::move(report_);
    }

private:
    void error(std::string code, std::string msg, Span span)
    {
        report_.errors.push_back({std::move(code), std::move(msg), span});
    }
    void warning(std::string code, std::string msg, Span span)
    {
        report_.warnings.push_back({std::move(code), std::move(msg), span});
    }

    void collect_structure()
    {
        for (const auto& f : spec_.flows)
            if (f.from.internal())
                has_outflow_.insert(f.from.name);
    }

    bool absorbing(const std::string& comp) const
    {
        return spec_.has_compartment(comp) && !has_outflow_.count(comp);
    }

    void walk(const ExprPtr& e, const std::function<void(const Expr&)>& fn) const
    {
        if (!e)
            return;
        fn(*e);
        for (const auto& a : e->args)
            walk(a, fn);
    }

    // ---- E1: identifier discipline -------------------------------------
    void rule_e1_identifiers()
    {
        auto check_rate_idents = [&](const ExprPtr& e, const std::string& where) {
            walk(e, [&](const Expr& n) {
                if (n.kind == ExprKind::ident) {
                    const std::string& id = n.name;
                    if (id == "SOURCE" || id == "SINK") {
                        if (where != "observation")
                            error("E1", id + " cannot appear inside an expression", n.span);
                        return;
                    }
                    if (id == "N" || channel_index(id) >= 0 || spec_.has_compartment(id))
                        return;
                    error("E1", "undeclared identifier '" + id + "' in " + where, n.span);
                }
                if (n.kind == ExprKind::call && n.builtin == Builtin::foi) {
                    if (n.args.size() == 1) {
                        const Expr& arg = *n.args[0];
                        if (arg.kind != ExprKind::ident || !spec_.has_compartment(arg.name))
                            error("E1", "foi() argument must name a declared compartment", n.span);
                    } else if (!spec_.has_compartment(spec_.foi_compartment())) {
                        error("E1",
                              "foi() needs a couple declaration or a compartment named I",
                              n.span);
                    }
                }
            });
        };

        for (const auto& f : spec_.flows) {
            for (const auto* ep : {&f.from, &f.to})
                if (ep->internal() && !spec_.has_compartment(ep->name))
                    error("E1", "flow endpoint '" + ep->name + "' is not a declared compartment",
                          ep->span);
            check_rate_idents(f.rate, "flow rate");
        }
        if (spec_.observation)
            check_rate_idents(spec_.observation, "observation");
        if (spec_.coupling && !spec_.has_compartment(*spec_.coupling))
            error("E1", "couple target '" + *spec_.coupling + "' is not a declared compartment",
                  spec_.span);

        for (const auto& [comp, e] : spec_.init) {
            if (!spec_.has_compartment(comp))
                error("E1", "init for undeclared compartment '" + comp + "'", e ? e->span : Span{});
            walk(e, [&](const Expr& n) {
                if (n.kind == ExprKind::ident && n.name != "N")
                    error("E1", "only N and literals may appear in init, found '" + n.name + "'",
                          n.span);
                if (n.kind == ExprKind::call && n.builtin == Builtin::foi)
                    error("E1", "foi() is not available in init expressions", n.span);
            });
        }
    }

    // ---- E2: every division syntactically guarded ----------------------
    bool guarded_denominator(const ExprPtr& d) const
    {
        if (d->kind == ExprKind::literal)
            return std::fabs(d->literal) >= cfg_.guard_epsilon;
        if (d->kind == ExprKind::call && d->builtin == Builtin::max) {
            for (const auto& a : d->args)
                if (a->kind == ExprKind::literal && a->literal >= cfg_.guard_epsilon)
                    return true;
            return false;
        }
        if (d->kind == ExprKind::call && d->builtin == Builtin::clamp && d->args.size() == 3)
            return d->args[1]->kind == ExprKind::literal &&
                   d->args[1]->literal >= cfg_.guard_epsilon;
        return false;
    }

    void rule_e2_division()
    {
        auto scan = [&](const ExprPtr& e) {
            walk(e, [&](const Expr& n) {
                if (n.kind == ExprKind::binary && n.op == BinOp::div &&
                    !guarded_denominator(n.args[1]))
                    error("E2",
                          "unguarded division; write the denominator as max(d, " +
                              format_number(cfg_.guard_epsilon) + ")",
                          n.span);
            });
        };
        for (const auto& f : spec_.flows)
            scan(f.rate);
        scan(spec_.observation);
        for (const auto& [comp, e] : spec_.init)
            scan(e);
    }

    // ---- E3: init masses ------------------------------------------------
    double eval_init(const ExprPtr& e, double population, bool& ok) const
    {
        if (!e || !ok)
            return 0.0;
        switch (e->kind) {
        case ExprKind::literal:
            return e->literal;
        case ExprKind::ident:
            if (e->name == "N")
                return population;
            ok = false; // E1 already reported
            return 0.0;
        case ExprKind::neg:
            return -eval_init(e->args[0], population, ok);
        case ExprKind::binary: {
            double a = eval_init(e->args[0], population, ok);
            double b = eval_init(e->args[1], population, ok);
            switch (e->op) {
            case BinOp::add: return a + b;
            case BinOp::sub: return a - b;
            case BinOp::mul: return a * b;
            case BinOp::div: return b != 0.0 ? a / b : (ok = false, 0.0);
            }
            return 0.0;
        }
        case ExprKind::call: {
            if (e->builtin == Builtin::foi) {
                ok = false;
                return 0.0;
            }
            double a = eval_init(e->args[0], population, ok);
            double b = eval_init(e->args[1], population, ok);
            if (e->builtin == Builtin::min)
                return std::fmin(a, b);
            if (e->builtin == Builtin::max)
                return std::fmax(a, b);
            double c = eval_init(e->args[2], population, ok);
            return std::clamp(a, b, c);
        }
        }
        return 0.0;
    }

    void rule_e3_init_masses()
    {
        const double population = cfg_.reference_population;
        double total = 0.0;
        bool ok = true;
        std::set<std::string> inited;
        for (const auto& [comp, e] : spec_.init) {
            if (!spec_.has_compartment(comp))
                continue;
            inited.insert(comp);
            double v = eval_init(e, population, ok);
            if (!ok)
                return; // identifier problems already reported as E1
            if (!std::isfinite(v) || v < 0.0) {
                error("E3", "init mass for '" + comp + "' evaluates to " + format_number(v),
                      e ? e->span : Span{});
                return;
            }
            total += v;
        }
        // Missing compartments default to zero mass.
        if (spec_.compartments.empty())
            return;
        double rel = std::fabs(total - population) / std::fmax(population, 1.0);
        if (rel > 1e-9)
            error("E3",
                  "init masses sum to " + format_number(total) + ", expected the population " +
                      format_number(population),
                  spec_.span);
    }

    // ---- E4: observation ------------------------------------------------
    void rule_e4_observation()
    {
        if (!spec_.observation) {
            error("E4", "model declares no observation expression", spec_.span);
            return;
        }
        walk(spec_.observation, [&](const Expr& n) {
            if (n.kind == ExprKind::ident && (n.name == "SINK" || n.name == "SOURCE"))
                error("E4", "observation references " + n.name, n.span);
        });
    }

    // ---- W1: duplicate parallel flows ------------------------------------
    void rule_w1_duplicate_flows()
    {
        std::set<std::string> seen;
        for (const auto& f : spec_.flows) {
            std::string key = f.from.label() + "->" + f.to.label();
            if (!seen.insert(key).second)
                warning("W1",
                        "duplicate parallel flow " + f.from.label() + " -> " + f.to.label() +
                            "; the pair already has a flow",
                        f.span);
        }
    }

    // ---- W2: parameter as an additive standalone term --------------------
    void additive_terms(const ExprPtr& e, std::vector<ExprPtr>& out) const
    {
        if (!e)
            return;
        if (e->kind == ExprKind::binary && (e->op == BinOp::add || e->op == BinOp::sub)) {
            additive_terms(e->args[0], out);
            additive_terms(e->args[1], out);
            return;
        }
        if (e->kind == ExprKind::neg) {
            additive_terms(e->args[0], out);
            return;
        }
        out.push_back(e);
    }

    void rule_w2_additive_params()
    {
        for (const auto& f : spec_.flows) {
            std::vector<ExprPtr> terms;
            additive_terms(f.rate, terms);
            for (const auto& t : terms)
                if (t->kind == ExprKind::ident && channel_index(t->name) >= 0)
                    warning("W2",
                            "parameter '" + t->name +
                                "' enters the rate as an absolute additive flow; rates should "
                                "scale a compartment",
                            t->span);
        }
    }

    // ---- W3: role table ---------------------------------------------------
    void rule_w3_roles()
    {
        auto check_usage = [&](const ExprPtr& e, const Flow* flow, const char* where) {
            walk(e, [&](const Expr& n) {
                if (n.kind != ExprKind::ident)
                    return;
                auto it = cfg_.roles.find(n.name);
                if (it == cfg_.roles.end() || channel_index(n.name) < 0)
                    return;
                const Role& role = it->second;
                switch (role.kind) {
                case Role::Kind::any:
                    return;
                case Role::Kind::foi_only:
                    warning("W3",
                            "'" + n.name + "' is consumed by foi() and should not appear " +
                                where,
                            n.span);
                    return;
                case Role::Kind::outflow_of:
                    if (!flow || !flow->from.internal() || flow->from.name != role.compartment)
                        warning("W3",
                                "'" + n.name + "' is reserved for flows out of '" +
                                    role.compartment + "'",
                                n.span);
                    return;
                case Role::Kind::into_sink: {
                    bool to_sink = flow && (flow->to.kind == Endpoint::Kind::sink ||
                                            (flow->to.internal() && absorbing(flow->to.name)));
                    if (!to_sink)
                        warning("W3",
                                "'" + n.name +
                                    "' is reserved for flows into SINK or an absorbing "
                                    "compartment",
                                n.span);
                    return;
                }
                }
            });
        };
        for (const auto& f : spec_.flows)
            check_usage(f.rate, &f, "in a flow rate");
        check_usage(spec_.observation, nullptr, "in the observation");
    }

    // ---- W4: rate sign analysis --------------------------------------------
    Interval ieval(const ExprPtr& e) const
    {
        switch (e->kind) {
        case ExprKind::literal:
            return {e->literal, e->literal};
        case ExprKind::ident: {
            int c = channel_index(e->name);
            if (c >= 0)
                return {cfg_.bounds[static_cast<std::size_t>(c)].lo,
                        cfg_.bounds[static_cast<std::size_t>(c)].hi};
            if (e->name == "N")
                return {0.0, kInf};
            if (spec_.has_compartment(e->name))
                return {0.0, kInf}; // states are clamped nonnegative
            return {-kInf, kInf};
        }
        case ExprKind::neg: {
            Interval a = ieval(e->args[0]);
            return {-a.hi, -a.lo};
        }
        case ExprKind::binary: {
            Interval a = ieval(e->args[0]);
            Interval b = ieval(e->args[1]);
            switch (e->op) {
            case BinOp::add: return {a.lo + b.lo, a.hi + b.hi};
            case BinOp::sub: return {a.lo - b.hi, a.hi - b.lo};
            case BinOp::mul: return imul(a, b);
            case BinOp::div:
                if (b.lo <= 0.0)
                    return {-kInf, kInf}; // unguarded; E2 already flagged
                return imul(a, {1.0 / b.hi, 1.0 / b.lo});
            }
            return {-kInf, kInf};
        }
        case ExprKind::call:
            switch (e->builtin) {
            case Builtin::foi:
                return {0.0, kInf};
            case Builtin::min:
                return iminmax(ieval(e->args[0]), ieval(e->args[1]), true);
            case Builtin::max:
                return iminmax(ieval(e->args[0]), ieval(e->args[1]), false);
            case Builtin::clamp: {
                Interval x = ieval(e->args[0]);
                Interval lo = ieval(e->args[1]);
                Interval hi = ieval(e->args[2]);
                return iminmax(iminmax(x, lo, false), hi, true);
            }
            }
            return {-kInf, kInf};
        }
        return {-kInf, kInf};
    }

    void rule_w4_sign()
    {
        for (const auto& f : spec_.flows) {
            if (!f.rate)
                continue;
            Interval iv = ieval(f.rate);
            if (iv.lo < 0.0)
                warning("W4",
                        "cannot prove rate of " + f.from.label() + " -> " + f.to.label() +
                            " nonnegative (lower bound " + format_number(iv.lo) + ")",
                        f.span);
        }
    }

    const ModelSpec& spec_;
    const VerifyConfig& cfg_;
    VerifyReport report_;
    std::set<std::string> has_outflow_;
};

} // namespace

VerifyReport verify(const ModelSpec& spec, const VerifyConfig& cfg)
{
    Checker checker(spec, cfg);
    return checker.run();
}

ConservationSignature conservation_signature(const ModelSpec& spec)
{
    ConservationSignature sig;
    for (const auto& f : spec.flows) {
        if (f.from.kind == Endpoint::Kind::source) {
            sig.closed = false;
            sig.source_terms.push_back("SOURCE -> " + f.to.label() + ": " + pretty(f.rate));
        }
        if (f.to.kind == Endpoint::Kind::sink) {
            sig.closed = false;
            sig.sink_terms.push_back(f.from.label() + " -> SINK: " + pretty(f.rate));
        }
    }
    return sig;
}

} // namespace epitwin::dsl
