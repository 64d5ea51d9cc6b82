#include "epitwin/dsl/printer.hpp"

#include <charconv>
#include <sstream>

namespace epitwin::dsl {

std::string format_number(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

int precedence(const Expr& e)
{
    switch (e.kind) {
    case ExprKind::binary:
        return (e.op == BinOp::add || e.op == BinOp::sub) ? 1 : 2;
    case ExprKind::neg:
        return 3;
    default:
        return 4;
    }
}

void print_expr(std::ostringstream& out, const Expr& e, int parent_prec, bool right_operand)
{
    int prec = precedence(e);
    // Right operands of -,/ need parens at equal precedence.
    bool parens = prec < parent_prec || (prec == parent_prec && right_operand);
    if (parens)
        out << '(';
    switch (e.kind) {
    case ExprKind::literal:
        if (e.literal < 0) {
            out << '-' << format_number(-e.literal);
        } else {
            out << format_number(e.literal);
        }
        break;
    case ExprKind::ident:
        out << e.name;
        break;
    case ExprKind::neg:
        out << '-';
        print_expr(out, *e.args[0], 3, true);
        break;
    case ExprKind::binary: {
        const char* op = e.op == BinOp::add ? " + "
                         : e.op == BinOp::sub ? " - "
                         : e.op == BinOp::mul ? " * "
                                              : " / ";
        print_expr(out, *e.args[0], prec, false);
        out << op;
        print_expr(out, *e.args[1], prec, true);
        break;
    }
    case ExprKind::call: {
        const char* name = e.builtin == Builtin::foi   ? "foi"
                           : e.builtin == Builtin::min ? "min"
                           : e.builtin == Builtin::max ? "max"
                                                       : "clamp";
        out << name << '(';
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i)
                out << ", ";
            print_expr(out, *e.args[i], 0, false);
        }
        out << ')';
        break;
    }
    }
    if (parens)
        out << ')';
}

} // namespace

std::string pretty(const ExprPtr& expr)
{
    if (!expr)
        return "";
    std::ostringstream out;
    print_expr(out, *expr, 0, false);
    return out.str();
}

std::string pretty(const ModelSpec& spec)
{
    std::ostringstream out;
    out << "model " << spec.name << " {\n";
    if (!spec.compartments.empty()) {
        out << "  compartments ";
        for (std::size_t i = 0; i < spec.compartments.size(); ++i) {
            if (i)
                out << ", ";
            out << spec.compartments[i];
        }
        out << ";\n";
    }
    if (spec.coupling)
        out << "  couple " << *spec.coupling << ";\n";
    for (const auto& f : spec.flows)
        out << "  flow " << f.from.label() << " -> " << f.to.label() << " : " << pretty(f.rate)
            << ";\n";
    for (const auto& [c, e] : spec.init)
        out << "  init " << c << " = " << pretty(e) << ";\n";
    if (spec.observation)
        out << "  observe " << pretty(spec.observation) << ";\n";
    out << "}\n";
    return out.str();
}

} // namespace epitwin::dsl
