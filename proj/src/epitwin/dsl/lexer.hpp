#pragma once

#include "epitwin/dsl/ast.hpp"

#include <string>
#include <string_view>

namespace epitwin::dsl {

enum class Tok {
    ident,
    number,
    kw_model,
    kw_compartments,
    kw_flow,
    kw_init,
    kw_observe,
    kw_couple,
    kw_source,
    kw_sink,
    lbrace,
    rbrace,
    lparen,
    rparen,
    comma,
    semi,
    colon,
    eq,
    arrow,
    plus,
    minus,
    star,
    slash,
    end,
};

const char* tok_name(Tok t);

struct Token {
    Tok kind = Tok::end;
    std::string text;
    double number = 0.0;
    Span span;
};

/// Hand-rolled scanner; '#' starts a line comment.
class Lexer {
public:
    explicit Lexer(std::string_view src);
    Token next();

private:
    char peek() const;
    char advance();
    [[noreturn]] void fail(const std::string& msg) const;

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

} // namespace epitwin::dsl
