#include "epitwin/dsl/parser.hpp"

#include "epitwin/dsl/lexer.hpp"
#include "epitwin/util/error.hpp"

#include <initializer_list>
#include <set>

namespace epitwin::dsl {

namespace {

bool reserved_name(const std::string& s)
{
    return channel_index(s) >= 0 || s == "N" || s == "foi" || s == "min" || s == "max" ||
           s == "clamp";
}

class Parser {
public:
    explicit Parser(std::string_view text) : lexer_(text) { cur_ = lexer_.next(); }

    ModelSpec parse_model(bool allow_config,
                          std::vector<std::pair<std::string, std::string>>* config_out)
    {
        ModelSpec spec;
        spec.span = cur_.span;
        expect(Tok::kw_model);
        spec.name = expect(Tok::ident).text;
        expect(Tok::lbrace);
        bool saw_compartments = false;
        while (cur_.kind != Tok::rbrace) {
            switch (cur_.kind) {
            case Tok::kw_compartments:
                if (saw_compartments)
                    fail_at(cur_.span, "duplicate compartments declaration");
                saw_compartments = true;
                parse_compartments(spec);
                break;
            case Tok::kw_flow:
                parse_flow(spec);
                break;
            case Tok::kw_init:
                parse_init(spec);
                break;
            case Tok::kw_observe:
                if (spec.observation)
                    fail_at(cur_.span, "duplicate observe declaration; exactly one is allowed");
                advance();
                spec.observation = parse_expr();
                expect(Tok::semi);
                break;
            case Tok::kw_couple:
                if (spec.coupling)
                    fail_at(cur_.span, "duplicate couple declaration");
                advance();
                spec.coupling = expect(Tok::ident).text;
                expect(Tok::semi);
                break;
            default:
                fail_expected({Tok::kw_compartments, Tok::kw_flow, Tok::kw_init,
                               Tok::kw_observe, Tok::kw_couple, Tok::rbrace});
            }
        }
        expect(Tok::rbrace);
        if (allow_config && cur_.kind == Tok::ident && cur_.text == "config")
            parse_config_block(config_out);
        expect(Tok::end);
        return spec;
    }

private:
    void parse_config_block(std::vector<std::pair<std::string, std::string>>* out)
    {
        advance(); // 'config'
        expect(Tok::lbrace);
        while (cur_.kind != Tok::rbrace) {
            Token key = expect(Tok::ident);
            expect(Tok::eq);
            std::string value;
            if (cur_.kind == Tok::number) {
                value = cur_.text;
                advance();
            } else if (cur_.kind == Tok::ident) {
                value = cur_.text;
                advance();
            } else {
                fail_expected({Tok::number, Tok::ident});
            }
            expect(Tok::semi);
            if (out)
                out->emplace_back(key.text, value);
        }
        expect(Tok::rbrace);
    }

    void parse_compartments(ModelSpec& spec)
    {
        advance();
        for (;;) {
            Token name = expect(Tok::ident);
            if (reserved_name(name.text))
                fail_at(name.span, "'" + name.text + "' is reserved and cannot name a compartment");
            for (const auto& c : spec.compartments)
                if (c == name.text)
                    fail_at(name.span, "compartment '" + name.text + "' declared twice");
            spec.compartments.push_back(name.text);
            if (cur_.kind == Tok::comma) {
                advance();
                continue;
            }
            break;
        }
        expect(Tok::semi);
    }

    Endpoint parse_endpoint()
    {
        Endpoint e;
        e.span = cur_.span;
        if (cur_.kind == Tok::kw_source) {
            e.kind = Endpoint::Kind::source;
            advance();
        } else if (cur_.kind == Tok::kw_sink) {
            e.kind = Endpoint::Kind::sink;
            advance();
        } else if (cur_.kind == Tok::ident) {
            e.kind = Endpoint::Kind::compartment;
            e.name = cur_.text;
            advance();
        } else {
            fail_expected({Tok::ident, Tok::kw_source, Tok::kw_sink});
        }
        return e;
    }

    void parse_flow(ModelSpec& spec)
    {
        Flow f;
        f.span = cur_.span;
        advance();
        f.from = parse_endpoint();
        expect(Tok::arrow);
        f.to = parse_endpoint();
        expect(Tok::colon);
        f.rate = parse_expr();
        expect(Tok::semi);
        spec.flows.push_back(std::move(f));
    }

    void parse_init(ModelSpec& spec)
    {
        advance();
        Token name = expect(Tok::ident);
        for (const auto& [c, e] : spec.init)
            if (c == name.text)
                fail_at(name.span, "init for '" + name.text + "' declared twice");
        expect(Tok::eq);
        ExprPtr e = parse_expr();
        expect(Tok::semi);
        spec.init.emplace_back(name.text, std::move(e));
    }

    ExprPtr parse_expr()
    {
        ExprPtr lhs = parse_term();
        while (cur_.kind == Tok::plus || cur_.kind == Tok::minus) {
            Span sp = cur_.span;
            BinOp op = cur_.kind == Tok::plus ? BinOp::add : BinOp::sub;
            advance();
            lhs = make_binary(op, std::move(lhs), parse_term(), sp);
        }
        return lhs;
    }

    ExprPtr parse_term()
    {
        ExprPtr lhs = parse_factor();
        while (cur_.kind == Tok::star || cur_.kind == Tok::slash) {
            Span sp = cur_.span;
            BinOp op = cur_.kind == Tok::star ? BinOp::mul : BinOp::div;
            advance();
            lhs = make_binary(op, std::move(lhs), parse_factor(), sp);
        }
        return lhs;
    }

    ExprPtr parse_factor()
    {
        if (cur_.kind == Tok::minus) {
            Span sp = cur_.span;
            advance();
            return make_neg(parse_factor(), sp);
        }
        return parse_primary();
    }

    ExprPtr parse_primary()
    {
        Span sp = cur_.span;
        switch (cur_.kind) {
        case Tok::number: {
            double v = cur_.number;
            advance();
            return make_literal(v, sp);
        }
        case Tok::kw_source: {
            advance();
            return make_ident("SOURCE", sp);
        }
        case Tok::kw_sink: {
            advance();
            return make_ident("SINK", sp);
        }
        case Tok::lparen: {
            advance();
            ExprPtr e = parse_expr();
            expect(Tok::rparen);
            return e;
        }
        case Tok::ident: {
            std::string name = cur_.text;
            advance();
            if (cur_.kind == Tok::lparen)
                return parse_call(name, sp);
            return make_ident(std::move(name), sp);
        }
        default:
            fail_expected({Tok::number, Tok::ident, Tok::lparen, Tok::minus});
        }
    }

    ExprPtr parse_call(const std::string& name, Span sp)
    {
        Builtin b;
        std::size_t arity_lo, arity_hi;
        if (name == "foi") {
            b = Builtin::foi;
            arity_lo = 0;
            arity_hi = 1;
        } else if (name == "min") {
            b = Builtin::min;
            arity_lo = arity_hi = 2;
        } else if (name == "max") {
            b = Builtin::max;
            arity_lo = arity_hi = 2;
        } else if (name == "clamp") {
            b = Builtin::clamp;
            arity_lo = arity_hi = 3;
        } else {
            fail_at(sp, "unknown function '" + name + "'; builtins are foi, min, max, clamp");
        }
        expect(Tok::lparen);
        std::vector<ExprPtr> args;
        if (cur_.kind != Tok::rparen) {
            args.push_back(parse_expr());
            while (cur_.kind == Tok::comma) {
                advance();
                args.push_back(parse_expr());
            }
        }
        expect(Tok::rparen);
        if (args.size() < arity_lo || args.size() > arity_hi)
            fail_at(sp, name + "() takes " +
                            (arity_lo == arity_hi
                                 ? std::to_string(arity_lo)
                                 : std::to_string(arity_lo) + " to " + std::to_string(arity_hi)) +
                            " arguments, got " + std::to_string(args.size()));
        return make_call(b, std::move(args), sp);
    }

    void advance() { cur_ = lexer_.next(); }

    Token expect(Tok kind)
    {
        if (cur_.kind != kind)
            fail_expected({kind});
        Token t = cur_;
        advance();
        return t;
    }

    [[noreturn]] void fail_expected(std::initializer_list<Tok> expected)
    {
        std::string list;
        for (Tok t : expected) {
            if (!list.empty())
                list += ", ";
            list += tok_name(t);
        }
        fail_at(cur_.span, std::string("unexpected ") + tok_name(cur_.kind) +
                               (cur_.text.empty() ? "" : " '" + cur_.text + "'") +
                               "; expected one of: " + list);
    }

    [[noreturn]] void fail_at(Span sp, const std::string& msg)
    {
        raise(Errc::parse_error,
              "line " + std::to_string(sp.line) + ", col " + std::to_string(sp.col) + ": " + msg);
    }

    Lexer lexer_;
    Token cur_;
};

} // namespace

ModelSpec parse(std::string_view text)
{
    Parser p(text);
    return p.parse_model(false, nullptr);
}

ModelAndConfig parse_with_config(std::string_view text)
{
    Parser p(text);
    ModelAndConfig out;
    out.spec = p.parse_model(true, &out.config);
    return out;
}

} // namespace epitwin::dsl
