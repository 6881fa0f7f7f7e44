#include "squall/expr_parser.hpp"

#include <cstdint>

namespace squall {

Token ExpressionParser::expect(TokenKind kind, std::string const& context) {
    if (!at(kind)) {
        std::string msg = "expected " + token_kind_name(kind);
        if (!context.empty()) msg += " " + context;
        msg += ", got " + token_kind_name(peek().kind);
        fail(msg);
    }
    return advance();
}

Token ExpressionParser::expect_keyword(std::string const& word) {
    if (!at_keyword(word)) fail("expected '" + word + "', got " + token_kind_name(peek().kind));
    return advance();
}

ExprPtr ExpressionParser::parse_expression() { return parse_ite(); }

ExprPtr ExpressionParser::parse_ite() {
    ExprPtr condition = parse_implies();
    if (!accept(TokenKind::Question)) return condition;
    ExprPtr then_branch = parse_ite();
    expect(TokenKind::Colon, "between the branches of '?'");
    ExprPtr else_branch = parse_ite();
    return make_ite(std::move(condition), std::move(then_branch), std::move(else_branch));
}

ExprPtr ExpressionParser::parse_implies() {
    ExprPtr left = parse_iff();
    if (!accept(TokenKind::Implies)) return left;
    // Right-associative.
    return make_binary(BinaryKind::Implies, std::move(left), parse_implies());
}

ExprPtr ExpressionParser::parse_iff() {
    ExprPtr left = parse_or();
    while (accept(TokenKind::Iff)) left = make_binary(BinaryKind::Iff, std::move(left), parse_or());
    return left;
}

ExprPtr ExpressionParser::parse_or() {
    ExprPtr left = parse_and();
    while (accept(TokenKind::Pipe)) left = make_binary(BinaryKind::Or, std::move(left), parse_and());
    return left;
}

ExprPtr ExpressionParser::parse_and() {
    ExprPtr left = parse_equality();
    while (accept(TokenKind::Amp)) left = make_binary(BinaryKind::And, std::move(left), parse_equality());
    return left;
}

ExprPtr ExpressionParser::parse_equality() {
    ExprPtr left = parse_relational();
    while (true) {
        if (accept(TokenKind::Eq))
            left = make_binary(BinaryKind::Eq, std::move(left), parse_relational());
        else if (accept(TokenKind::Neq))
            left = make_binary(BinaryKind::Neq, std::move(left), parse_relational());
        else
            return left;
    }
}

ExprPtr ExpressionParser::parse_relational() {
    ExprPtr left = parse_additive();
    while (true) {
        BinaryKind kind;
        if (at(TokenKind::Lt))
            kind = BinaryKind::Lt;
        else if (at(TokenKind::Le))
            kind = BinaryKind::Le;
        else if (at(TokenKind::Gt))
            kind = BinaryKind::Gt;
        else if (at(TokenKind::Ge))
            kind = BinaryKind::Ge;
        else
            return left;
        advance();
        left = make_binary(kind, std::move(left), parse_additive());
    }
}

ExprPtr ExpressionParser::parse_additive() {
    ExprPtr left = parse_multiplicative();
    while (true) {
        if (accept(TokenKind::Plus))
            left = make_binary(BinaryKind::Plus, std::move(left), parse_multiplicative());
        else if (accept(TokenKind::Minus))
            left = make_binary(BinaryKind::Minus, std::move(left), parse_multiplicative());
        else
            return left;
    }
}

ExprPtr ExpressionParser::parse_multiplicative() {
    ExprPtr left = parse_unary();
    while (true) {
        if (accept(TokenKind::Star))
            left = make_binary(BinaryKind::Times, std::move(left), parse_unary());
        else if (accept(TokenKind::Slash))
            left = make_binary(BinaryKind::Divide, std::move(left), parse_unary());
        else
            return left;
    }
}

ExprPtr ExpressionParser::parse_unary() {
    if (accept(TokenKind::Minus)) return make_unary(UnaryKind::Negate, parse_unary());
    if (accept(TokenKind::Bang)) return make_unary(UnaryKind::Not, parse_unary());
    return parse_primary();
}

ExprPtr ExpressionParser::parse_primary() {
    if (ExprPtr special = parse_special_primary()) return special;

    Token const& token = peek();
    switch (token.kind) {
        case TokenKind::Integer: {
            advance();
            return make_int(Integer(token.text), token.line, token.column);
        }
        case TokenKind::Decimal: {
            advance();
            return make_rational(rational_from_literal(token.text), token.line, token.column);
        }
        case TokenKind::LParen: {
            advance();
            ExprPtr inner = parse_expression();
            expect(TokenKind::RParen, "to close '('");
            return inner;
        }
        case TokenKind::Identifier: {
            if (token.text == "true" || token.text == "false") {
                advance();
                return make_bool(token.text == "true", token.line, token.column);
            }
            FunctionKind fn;
            bool is_fn = true;
            std::size_t min_args = 2, max_args = SIZE_MAX;
            if (token.text == "min")
                fn = FunctionKind::Min;
            else if (token.text == "max")
                fn = FunctionKind::Max;
            else if (token.text == "floor")
                fn = FunctionKind::Floor, min_args = max_args = 1;
            else if (token.text == "ceil")
                fn = FunctionKind::Ceil, min_args = max_args = 1;
            else if (token.text == "pow")
                fn = FunctionKind::Pow, min_args = max_args = 2;
            else if (token.text == "mod")
                fn = FunctionKind::Mod, min_args = max_args = 2;
            else
                is_fn = false;
            if (is_fn && peek(1).kind == TokenKind::LParen) {
                advance();
                advance();
                std::vector<ExprPtr> args;
                if (!at(TokenKind::RParen)) {
                    args.push_back(parse_expression());
                    while (accept(TokenKind::Comma)) args.push_back(parse_expression());
                }
                expect(TokenKind::RParen, "to close the argument list");
                if (args.size() < min_args || args.size() > max_args)
                    throw ParseError("wrong number of arguments for " + token.text, token.line,
                                     token.column);
                auto call = make_call(fn, std::move(args));
                return call;
            }
            advance();
            return make_ident(token.text, token.line, token.column);
        }
        case TokenKind::String:
            fail("labels cannot be referenced here");
        default:
            fail("expected an expression, got " + token_kind_name(token.kind));
    }
}

}  // namespace squall
