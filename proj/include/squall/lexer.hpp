#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "squall/errors.hpp"

namespace squall {

enum class TokenKind {
    Identifier,
    Integer,
    Decimal,
    String,      // "name"
    LParen,      // (
    RParen,      // )
    LBracket,    // [
    RBracket,    // ]
    LBrace,      // {
    RBrace,      // }
    Semicolon,   // ;
    Comma,       // ,
    Colon,       // :
    Prime,       // '
    Question,    // ?
    Plus,        // +
    Minus,       // -
    Star,        // *
    Slash,       // /
    Eq,          // =
    Neq,         // !=
    Lt,          // <
    Le,          // <=
    Gt,          // >
    Ge,          // >=
    Amp,         // &
    Pipe,        // |
    PipePipe,    // || (conditional separator in path formulas)
    Bang,        // !
    Arrow,       // ->
    Implies,     // =>
    Iff,         // <=>
    DotDot,      // ..
    EndOfInput,
};

std::string token_kind_name(TokenKind kind);

struct Token {
    TokenKind kind;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Splits source text into tokens. Whitespace separates tokens; `//` starts a
/// comment running to the end of the line. The final token is EndOfInput.
std::vector<Token> tokenize(std::string const& source);

}  // namespace squall
