#pragma once

#include <string>
#include <vector>

#include "squall/expressions.hpp"
#include "squall/lexer.hpp"

namespace squall {

/// Recursive-descent parser for the expression language, operating on a token
/// stream with an explicit cursor so surrounding grammars (model files,
/// property lists) can interleave their own productions. The property parser
/// derives from this and extends the primary production with label atoms and
/// quantitative operators via parse_special_primary().
class ExpressionParser {
  public:
    explicit ExpressionParser(std::vector<Token> const& tokens, std::size_t position = 0)
        : tokens_(&tokens), position_(position) {}
    virtual ~ExpressionParser() = default;

    /// Parses one expression at the loosest precedence level.
    ExprPtr parse_expression();

    Token const& peek(std::size_t ahead = 0) const {
        std::size_t i = position_ + ahead;
        return i < tokens_->size() ? (*tokens_)[i] : tokens_->back();
    }
    bool at(TokenKind kind) const { return peek().kind == kind; }
    bool at_keyword(std::string const& word) const {
        return at(TokenKind::Identifier) && peek().text == word;
    }
    bool accept(TokenKind kind) {
        if (!at(kind)) return false;
        ++position_;
        return true;
    }
    bool accept_keyword(std::string const& word) {
        if (!at_keyword(word)) return false;
        ++position_;
        return true;
    }
    Token expect(TokenKind kind, std::string const& context = "");
    Token expect_keyword(std::string const& word);
    Token advance() { return (*tokens_)[position_ < tokens_->size() - 1 ? position_++ : position_]; }

    std::size_t position() const { return position_; }
    void set_position(std::size_t position) { position_ = position; }

    [[noreturn]] void fail(std::string const& message) const {
        throw ParseError(message, peek().line, peek().column);
    }

  protected:
    /// Extension point: parse a primary this base grammar does not know.
    /// Returns null when the current token starts no such production.
    virtual ExprPtr parse_special_primary() { return nullptr; }

    ExprPtr parse_ite();
    ExprPtr parse_implies();
    ExprPtr parse_iff();
    ExprPtr parse_or();
    ExprPtr parse_and();
    ExprPtr parse_equality();
    ExprPtr parse_relational();
    ExprPtr parse_additive();
    ExprPtr parse_multiplicative();
    ExprPtr parse_unary();
    ExprPtr parse_primary();

  private:
    std::vector<Token> const* tokens_;
    std::size_t position_;
};

}  // namespace squall
