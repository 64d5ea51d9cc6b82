#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epitwin::dsl {

struct Span {
    int line = 0; // 1-based; 0 means unknown
    int col = 0;
};

/// The eight mechanistic parameter channels, in the order they occupy
/// in a parameter field's trailing axis.
inline constexpr std::array<std::string_view, 8> channel_names = {
    "beta", "alpha", "gamma", "delta", "kappa", "epsilon", "symprob", "mor"};

inline int channel_index(std::string_view name)
{
    for (std::size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == name)
            return static_cast<int>(i);
    return -1;
}

enum class ExprKind { literal, ident, neg, binary, call };
enum class BinOp { add, sub, mul, div };
enum class Builtin { foi, min, max, clamp };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. `name` holds identifiers, including the
/// population symbol N and the (grammar-permitted, verifier-rejected)
/// SOURCE/SINK references.
struct Expr {
    ExprKind kind = ExprKind::literal;
    double literal = 0.0;
    std::string name;
    BinOp op = BinOp::add;
    Builtin builtin = Builtin::foi;
    std::vector<ExprPtr> args;
    Span span;
};

inline ExprPtr make_literal(double v, Span s = {})
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::literal;
    e->literal = v;
    e->span = s;
    return e;
}

inline ExprPtr make_ident(std::string name, Span s = {})
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::ident;
    e->name = std::move(name);
    e->span = s;
    return e;
}

inline ExprPtr make_neg(ExprPtr inner, Span s = {})
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::neg;
    e->args = {std::move(inner)};
    e->span = s;
    return e;
}

inline ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs, Span s = {})
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::binary;
    e->op = op;
    e->args = {std::move(lhs), std::move(rhs)};
    e->span = s;
    return e;
}

inline ExprPtr make_call(Builtin b, std::vector<ExprPtr> args, Span s = {})
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::call;
    e->builtin = b;
    e->args = std::move(args);
    e->span = s;
    return e;
}

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b)
{
    if (!a || !b)
        return !a && !b;
    if (a->kind != b->kind || a->args.size() != b->args.size())
        return false;
    switch (a->kind) {
    case ExprKind::literal:
        if (a->literal != b->literal)
            return false;
        break;
    case ExprKind::ident:
        if (a->name != b->name)
            return false;
        break;
    case ExprKind::binary:
        if (a->op != b->op)
            return false;
        break;
    case ExprKind::call:
        if (a->builtin != b->builtin)
            return false;
        break;
    case ExprKind::neg:
        break;
    }
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!expr_equal(a->args[i], b->args[i]))
            return false;
    return true;
}

struct Endpoint {
    enum class Kind { compartment, source, sink };
    Kind kind = Kind::compartment;
    std::string name; // empty for SOURCE/SINK
    Span span;

    bool internal() const { return kind == Kind::compartment; }
    std::string label() const
    {
        return kind == Kind::source ? "SOURCE" : kind == Kind::sink ? "SINK" : name;
    }
};

inline bool endpoint_equal(const Endpoint& a, const Endpoint& b)
{
    return a.kind == b.kind && a.name == b.name;
}

struct Flow {
    Endpoint from;
    Endpoint to;
    ExprPtr rate;
    Span span;
};

/// Parsed compartmental model. Exactly what the text declares; all
/// semantic judgements live in the verifier.
struct ModelSpec {
    std::string name;
    std::vector<std::string> compartments;
    std::vector<Flow> flows;
    std::vector<std::pair<std::string, ExprPtr>> init; // declaration order
    ExprPtr observation;                                // null when absent
    std::optional<std::string> coupling;                // couple <compartment>;
    Span span;

    bool has_compartment(std::string_view c) const
    {
        for (const auto& x : compartments)
            if (x == c)
                return true;
        return false;
    }
    /// Compartment feeding foi(): the couple declaration, else "I".
    std::string foi_compartment() const { return coupling ? *coupling : std::string("I"); }
};

inline bool spec_equal(const ModelSpec& a, const ModelSpec& b)
{
    if (a.name != b.name || a.compartments != b.compartments ||
        a.flows.size() != b.flows.size() || a.init.size() != b.init.size() ||
        a.coupling != b.coupling)
        return false;
    for (std::size_t i = 0; i < a.flows.size(); ++i) {
        if (!endpoint_equal(a.flows[i].from, b.flows[i].from) ||
            !endpoint_equal(a.flows[i].to, b.flows[i].to) ||
            !expr_equal(a.flows[i].rate, b.flows[i].rate))
            return false;
    }
    for (std::size_t i = 0; i < a.init.size(); ++i)
        if (a.init[i].first != b.init[i].first || !expr_equal(a.init[i].second, b.init[i].second))
            return false;
    return expr_equal(a.observation, b.observation);
}

} // namespace epitwin::dsl
