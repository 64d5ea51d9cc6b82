#include "epitwin/dsl/lexer.hpp"

#include "epitwin/util/error.hpp"

#include <cctype>
#include <charconv>

namespace epitwin::dsl {

const char* tok_name(Tok t)
{
    switch (t) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::kw_model: return "'model'";
    case Tok::kw_compartments: return "'compartments'";
    case Tok::kw_flow: return "'flow'";
    case Tok::kw_init: return "'init'";
    case Tok::kw_observe: return "'observe'";
    case Tok::kw_couple: return "'couple'";
    case Tok::kw_source: return "'SOURCE'";
    case Tok::kw_sink: return "'SINK'";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::semi: return "';'";
    case Tok::colon: return "':'";
    case Tok::eq: return "'='";
    case Tok::arrow: return "'->'";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::end: return "end of input";
    }
    return "?";
}

Lexer::Lexer(std::string_view src) : src_(src) {}

char Lexer::peek() const
{
    return pos_ < src_.size() ? src_[pos_] : '\0';
}

char Lexer::advance()
{
    char c = src_[pos_++];
    if (c == '\n') {
        ++line_;
        col_ = 1;
    } else {
        ++col_;
    }
    return c;
}

void Lexer::fail(const std::string& msg) const
{
    raise(Errc::parse_error,
          "line " + std::to_string(line_) + ", col " + std::to_string(col_) + ": " + msg);
}

Token Lexer::next()
{
    for (;;) {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(peek())))
            advance();
        if (peek() == '#') {
            while (pos_ < src_.size() && peek() != '\n')
                advance();
            continue;
        }
        break;
    }

    Token t;
    t.span = {line_, col_};
    if (pos_ >= src_.size()) {
        t.kind = Tok::end;
        return t;
    }

    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string word;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
            word.push_back(advance());
        t.text = word;
        if (word == "model") t.kind = Tok::kw_model;
        else if (word == "compartments") t.kind = Tok::kw_compartments;
        else if (word == "flow") t.kind = Tok::kw_flow;
        else if (word == "init") t.kind = Tok::kw_init;
        else if (word == "observe") t.kind = Tok::kw_observe;
        else if (word == "couple") t.kind = Tok::kw_couple;
        else if (word == "SOURCE") t.kind = Tok::kw_source;
        else if (word == "SINK") t.kind = Tok::kw_sink;
        else t.kind = Tok::ident;
        return t;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        std::string num;
        bool seen_dot = false, seen_exp = false;
        while (pos_ < src_.size()) {
            char d = peek();
            if (std::isdigit(static_cast<unsigned char>(d))) {
                num.push_back(advance());
            } else if (d == '.' && !seen_dot && !seen_exp) {
                seen_dot = true;
                num.push_back(advance());
            } else if ((d == 'e' || d == 'E') && !seen_exp && !num.empty()) {
                seen_exp = true;
                num.push_back(advance());
                if (peek() == '+' || peek() == '-')
                    num.push_back(advance());
            } else {
                break;
            }
        }
        double value = 0.0;
        auto res = std::from_chars(num.data(), num.data() + num.size(), value);
        if (res.ec != std::errc{} || res.ptr != num.data() + num.size())
            fail("malformed number '" + num + "'");
        t.kind = Tok::number;
        t.text = num;
        t.number = value;
        return t;
    }

    advance();
    switch (c) {
    case '{': t.kind = Tok::lbrace; return t;
    case '}': t.kind = Tok::rbrace; return t;
    case '(': t.kind = Tok::lparen; return t;
    case ')': t.kind = Tok::rparen; return t;
    case ',': t.kind = Tok::comma; return t;
    case ';': t.kind = Tok::semi; return t;
    case ':': t.kind = Tok::colon; return t;
    case '=': t.kind = Tok::eq; return t;
    case '+': t.kind = Tok::plus; return t;
    case '*': t.kind = Tok::star; return t;
    case '/': t.kind = Tok::slash; return t;
    case '-':
        if (peek() == '>') {
            advance();
            t.kind = Tok::arrow;
        } else {
            t.kind = Tok::minus;
        }
        return t;
    default:
        break;
    }
    raise(Errc::parse_error, "line " + std::to_string(t.span.line) + ", col " +
                                 std::to_string(t.span.col) + ": unexpected character '" +
                                 std::string(1, c) + "'");
}

} // namespace epitwin::dsl
