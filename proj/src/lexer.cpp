#include "squall/lexer.hpp"

#include <cctype>

namespace squall {

std::string token_kind_name(TokenKind kind) {
    switch (kind) {
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Integer: return "integer literal";
        case TokenKind::Decimal: return "decimal literal";
        case TokenKind::String: return "quoted name";
        case TokenKind::LParen: return "'('";
        case TokenKind::RParen: return "')'";
        case TokenKind::LBracket: return "'['";
        case TokenKind::RBracket: return "']'";
        case TokenKind::LBrace: return "'{'";
        case TokenKind::RBrace: return "'}'";
        case TokenKind::Semicolon: return "';'";
        case TokenKind::Comma: return "','";
        case TokenKind::Colon: return "':'";
        case TokenKind::Prime: return "'''";
        case TokenKind::Question: return "'?'";
        case TokenKind::Plus: return "'+'";
        case TokenKind::Minus: return "'-'";
        case TokenKind::Star: return "'*'";
        case TokenKind::Slash: return "'/'";
        case TokenKind::Eq: return "'='";
        case TokenKind::Neq: return "'!='";
        case TokenKind::Lt: return "'<'";
        case TokenKind::Le: return "'<='";
        case TokenKind::Gt: return "'>'";
        case TokenKind::Ge: return "'>='";
        case TokenKind::Amp: return "'&'";
        case TokenKind::Pipe: return "'|'";
        case TokenKind::PipePipe: return "'||'";
        case TokenKind::Bang: return "'!'";
        case TokenKind::Arrow: return "'->'";
        case TokenKind::Implies: return "'=>'";
        case TokenKind::Iff: return "'<=>'";
        case TokenKind::DotDot: return "'..'";
        case TokenKind::EndOfInput: return "end of input";
    }
    return "?";
}

std::vector<Token> tokenize(std::string const& source) {
    std::vector<Token> tokens;
    std::size_t line = 1, column = 1;
    std::size_t i = 0, n = source.size();

    auto peek = [&](std::size_t ahead = 0) -> char {
        return i + ahead < n ? source[i + ahead] : '\0';
    };
    auto advance = [&]() {
        if (source[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
        ++i;
    };
    auto emit = [&](TokenKind kind, std::string text, std::size_t l, std::size_t c) {
        tokens.push_back({kind, std::move(text), l, c});
    };

    while (i < n) {
        char c = peek();
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance();
            continue;
        }
        if (c == '/' && peek(1) == '/') {
            while (i < n && peek() != '\n') advance();
            continue;
        }
        std::size_t tl = line, tc = column;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string text;
            while (i < n && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
                text += peek();
                advance();
            }
            emit(TokenKind::Identifier, std::move(text), tl, tc);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string text;
            while (i < n && std::isdigit(static_cast<unsigned char>(peek()))) {
                text += peek();
                advance();
            }
            bool decimal = false;
            // A single dot followed by a digit continues a decimal; a double
            // dot is a range and belongs to the next token.
            if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
                decimal = true;
                text += '.';
                advance();
                while (i < n && std::isdigit(static_cast<unsigned char>(peek()))) {
                    text += peek();
                    advance();
                }
            }
            if ((peek() == 'e' || peek() == 'E') &&
                (std::isdigit(static_cast<unsigned char>(peek(1))) ||
                 ((peek(1) == '+' || peek(1) == '-') &&
                  std::isdigit(static_cast<unsigned char>(peek(2)))))) {
                decimal = true;
                text += peek();
                advance();
                if (peek() == '+' || peek() == '-') {
                    text += peek();
                    advance();
                }
                while (i < n && std::isdigit(static_cast<unsigned char>(peek()))) {
                    text += peek();
                    advance();
                }
            }
            emit(decimal ? TokenKind::Decimal : TokenKind::Integer, std::move(text), tl, tc);
            continue;
        }
        if (c == '"') {
            advance();
            std::string text;
            while (i < n && peek() != '"' && peek() != '\n') {
                text += peek();
                advance();
            }
            if (peek() != '"') throw ParseError("unterminated quoted name", tl, tc);
            advance();
            emit(TokenKind::String, std::move(text), tl, tc);
            continue;
        }

        switch (c) {
            case '(': advance(); emit(TokenKind::LParen, "(", tl, tc); break;
            case ')': advance(); emit(TokenKind::RParen, ")", tl, tc); break;
            case '[': advance(); emit(TokenKind::LBracket, "[", tl, tc); break;
            case ']': advance(); emit(TokenKind::RBracket, "]", tl, tc); break;
            case '{': advance(); emit(TokenKind::LBrace, "{", tl, tc); break;
            case '}': advance(); emit(TokenKind::RBrace, "}", tl, tc); break;
            case ';': advance(); emit(TokenKind::Semicolon, ";", tl, tc); break;
            case ',': advance(); emit(TokenKind::Comma, ",", tl, tc); break;
            case ':': advance(); emit(TokenKind::Colon, ":", tl, tc); break;
            case '\'': advance(); emit(TokenKind::Prime, "'", tl, tc); break;
            case '?': advance(); emit(TokenKind::Question, "?", tl, tc); break;
            case '+': advance(); emit(TokenKind::Plus, "+", tl, tc); break;
            case '*': advance(); emit(TokenKind::Star, "*", tl, tc); break;
            case '/': advance(); emit(TokenKind::Slash, "/", tl, tc); break;
            case '&': advance(); emit(TokenKind::Amp, "&", tl, tc); break;
            case '|':
                advance();
                if (peek() == '|') {
                    advance();
                    emit(TokenKind::PipePipe, "||", tl, tc);
                } else {
                    emit(TokenKind::Pipe, "|", tl, tc);
                }
                break;
            case '-':
                advance();
                if (peek() == '>') {
                    advance();
                    emit(TokenKind::Arrow, "->", tl, tc);
                } else {
                    emit(TokenKind::Minus, "-", tl, tc);
                }
                break;
            case '=':
                advance();
                if (peek() == '>') {
                    advance();
                    emit(TokenKind::Implies, "=>", tl, tc);
                } else {
                    emit(TokenKind::Eq, "=", tl, tc);
                }
                break;
            case '!':
                advance();
                if (peek() == '=') {
                    advance();
                    emit(TokenKind::Neq, "!=", tl, tc);
                } else {
                    emit(TokenKind::Bang, "!", tl, tc);
                }
                break;
            case '<':
                advance();
                if (peek() == '=') {
                    advance();
                    if (peek() == '>') {
                        advance();
                        emit(TokenKind::Iff, "<=>", tl, tc);
                    } else {
                        emit(TokenKind::Le, "<=", tl, tc);
                    }
                } else {
                    emit(TokenKind::Lt, "<", tl, tc);
                }
                break;
            case '>':
                advance();
                if (peek() == '=') {
                    advance();
                    emit(TokenKind::Ge, ">=", tl, tc);
                } else {
                    emit(TokenKind::Gt, ">", tl, tc);
                }
                break;
            case '.':
                advance();
                if (peek() == '.') {
                    advance();
                    emit(TokenKind::DotDot, "..", tl, tc);
                } else {
                    throw ParseError("stray '.'", tl, tc);
                }
                break;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", tl, tc);
        }
    }
    tokens.push_back({TokenKind::EndOfInput, "", line, column});
    return tokens;
}

}  // namespace squall
