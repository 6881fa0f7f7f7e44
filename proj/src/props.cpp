#include "squall/props.hpp"

#include "squall/expr_parser.hpp"
#include "squall/lexer.hpp"

namespace squall {

std::string to_string(BoundComparison c) {
    switch (c) {
        case BoundComparison::Less: return "<";
        case BoundComparison::LessEq: return "<=";
        case BoundComparison::Greater: return ">";
        case BoundComparison::GreaterEq: return ">=";
    }
    return "?";
}

namespace {

bool is_literal_zero(Expr const& e) {
    return (e.node == Expr::Node::IntLit && e.int_value == 0) ||
           (e.node == Expr::Node::RatLit && e.rat_value == 0);
}

/// Extends the expression grammar with label atoms and the P/R/LRA/S
/// operators.
class PropertyParser : public ExpressionParser {
  public:
    using ExpressionParser::ExpressionParser;

  protected:
    ExprPtr parse_special_primary() override {
        Token const& token = peek();
        if (token.kind == TokenKind::String) {
            advance();
            return make_label(token.text, token.line, token.column);
        }
        if (token.kind != TokenKind::Identifier) return nullptr;

        PropOperatorKind kind;
        std::optional<OptimizationDirection> direction;
        std::string const& head = token.text;
        if (head == "P" || head == "Pmax" || head == "Pmin")
            kind = PropOperatorKind::Probability;
        else if (head == "R" || head == "Rmax" || head == "Rmin")
            kind = PropOperatorKind::Reward;
        else if (head == "LRA" || head == "LRAmax" || head == "LRAmin")
            kind = PropOperatorKind::LongRunAverage;
        else if (head == "S" || head == "Smax" || head == "Smin")
            kind = PropOperatorKind::SteadyState;
        else
            return nullptr;
        if (head.ends_with("max"))
            direction = OptimizationDirection::Max;
        else if (head.ends_with("min"))
            direction = OptimizationDirection::Min;

        // Only commit when operator syntax follows; otherwise the name is a
        // plain identifier.
        TokenKind next = peek(1).kind;
        bool looks_like_operator = next == TokenKind::Lt || next == TokenKind::Le ||
                                   next == TokenKind::Gt || next == TokenKind::Ge ||
                                   next == TokenKind::LBrace ||
                                   (next == TokenKind::Eq && peek(2).kind == TokenKind::Question);
        if (!looks_like_operator) return nullptr;
        advance();

        auto op = std::make_shared<OperatorFormula>();
        op->kind = kind;
        op->direction = direction;

        if (at(TokenKind::LBrace)) {
            if (kind != PropOperatorKind::Reward)
                fail("only the R operator takes a reward model name");
            advance();
            op->reward_model = expect(TokenKind::String, "naming a reward model").text;
            expect(TokenKind::RBrace, "to close the reward model name");
            // The direction may follow the braces, as in R{"time"}max=?.
            if (at_keyword("max") || at_keyword("min")) {
                if (op->direction) fail("direction given twice");
                op->direction = peek().text == "max" ? OptimizationDirection::Max
                                                     : OptimizationDirection::Min;
                advance();
            }
        }

        op->bound = parse_bound();
        expect(TokenKind::LBracket, "to open the operator body");
        switch (kind) {
            case PropOperatorKind::Probability:
                op->path = parse_path_formula();
                break;
            case PropOperatorKind::Reward:
                op->reward_path = parse_reward_path();
                break;
            case PropOperatorKind::LongRunAverage:
            case PropOperatorKind::SteadyState:
                op->state = parse_expression();
                break;
        }
        expect(TokenKind::RBracket, "to close the operator body");
        return make_operator(std::move(op), token.line, token.column);
    }

  private:
    OperatorBound parse_bound() {
        OperatorBound bound;
        if (accept(TokenKind::Eq)) {
            expect(TokenKind::Question, "for a value query ('=?')");
            return bound;
        }
        if (accept(TokenKind::Lt))
            bound.comparison = BoundComparison::Less;
        else if (accept(TokenKind::Le))
            bound.comparison = BoundComparison::LessEq;
        else if (accept(TokenKind::Gt))
            bound.comparison = BoundComparison::Greater;
        else if (accept(TokenKind::Ge))
            bound.comparison = BoundComparison::GreaterEq;
        else
            fail("expected a threshold ('<p', '<=p', '>p', '>=p') or a query ('=?')");
        bound.threshold = parse_additive();
        return bound;
    }

    /// Time bound after a temporal operator: either '<= t' or '[0, t]'. The
    /// lower end of a written interval must be the literal zero — paths with
    /// a delayed start are out of scope. Returns the upper bound or null.
    ExprPtr parse_time_bound() {
        if (accept(TokenKind::Le)) return parse_additive();
        if (accept(TokenKind::LBracket)) {
            ExprPtr lower = parse_additive();
            expect(TokenKind::Comma, "between interval bounds");
            ExprPtr upper = parse_additive();
            expect(TokenKind::RBracket, "to close the time interval");
            if (!is_literal_zero(*lower))
                throw ParseError("the lower time bound must be zero", lower->line, lower->column);
            return upper;
        }
        return nullptr;
    }

    std::shared_ptr<PathFormula> parse_single_path() {
        auto path = std::make_shared<PathFormula>();
        if (accept_keyword("X")) {
            path->kind = PathKind::Next;
            path->right = parse_expression();
            return path;
        }
        if (at_keyword("F") || at_keyword("G")) {
            bool eventually = peek().text == "F";
            advance();
            ExprPtr upper = parse_time_bound();
            path->kind = eventually ? PathKind::Until : PathKind::Globally;
            path->left = eventually ? make_bool(true) : nullptr;
            path->printed_as_eventually = eventually;
            path->upper_bound = std::move(upper);
            path->right = parse_expression();
            return path;
        }
        path->left = parse_expression();
        if (accept_keyword("U"))
            path->kind = PathKind::Until;
        else if (accept_keyword("W"))
            path->kind = PathKind::WeakUntil;
        else
            fail("expected 'U' or 'W' after the left path operand");
        ExprPtr upper = parse_time_bound();
        if (path->kind == PathKind::WeakUntil && upper)
            fail("'W' cannot carry a time bound");
        path->upper_bound = std::move(upper);
        path->right = parse_expression();
        return path;
    }

    std::shared_ptr<PathFormula const> parse_path_formula() {
        auto path = parse_single_path();
        if (accept(TokenKind::PipePipe)) path->condition = parse_single_path();
        return path;
    }

    RewardPath parse_reward_path() {
        RewardPath rp;
        if (accept_keyword("F")) {
            rp.kind = RewardPath::Kind::Reach;
            rp.target = parse_expression();
            return rp;
        }
        if (accept_keyword("C")) {
            expect(TokenKind::Le, "for a cumulative horizon ('C<=k')");
            rp.kind = RewardPath::Kind::Cumulative;
            rp.bound = parse_additive();
            return rp;
        }
        if (accept_keyword("I")) {
            expect(TokenKind::Eq, "for an instant ('I=k')");
            rp.kind = RewardPath::Kind::Instant;
            rp.bound = parse_additive();
            return rp;
        }
        if (accept_keyword("S")) {
            fail("long-run rewards are written LRA=?[...], not R=?[S]");
        }
        fail("expected 'F goal', 'C<=k' or 'I=k' in a reward operator");
    }
};

}  // namespace

Property parse_property(std::string const& text) {
    auto tokens = tokenize(text);
    PropertyParser parser(tokens);
    Property property;
    property.formula = parser.parse_expression();
    if (!parser.at(TokenKind::EndOfInput)) parser.fail("trailing input after the property");
    return property;
}

std::vector<Property> parse_properties(std::string const& text) {
    auto tokens = tokenize(text);
    PropertyParser parser(tokens);
    std::vector<Property> properties;
    while (!parser.at(TokenKind::EndOfInput)) {
        Property property;
        if (parser.at(TokenKind::String) && parser.peek(1).kind == TokenKind::Colon) {
            property.name = parser.peek().text;
            parser.advance();
            parser.advance();
        }
        property.formula = parser.parse_expression();
        properties.push_back(std::move(property));
        if (!parser.accept(TokenKind::Semicolon)) {
            if (!parser.at(TokenKind::EndOfInput)) parser.fail("expected ';' between properties");
        }
    }
    return properties;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

std::string bound_suffix(OperatorBound const& bound) {
    if (bound.is_query()) return "=?";
    return to_string(*bound.comparison) + to_string(*bound.threshold);
}

std::string direction_suffix(std::optional<OptimizationDirection> const& direction) {
    if (!direction) return "";
    return *direction == OptimizationDirection::Max ? "max" : "min";
}

std::string time_bound_suffix(ExprPtr const& upper) {
    if (!upper) return "";
    return "<=" + to_string(*upper);
}

std::string print_single_path(PathFormula const& path) {
    switch (path.kind) {
        case PathKind::Next: return "X " + to_string(*path.right);
        case PathKind::Globally:
            return "G" + time_bound_suffix(path.upper_bound) + " " + to_string(*path.right);
        case PathKind::Until:
        case PathKind::WeakUntil:
            if (path.printed_as_eventually)
                return "F" + time_bound_suffix(path.upper_bound) + " " + to_string(*path.right);
            return to_string(*path.left) + (path.kind == PathKind::Until ? " U" : " W") +
                   time_bound_suffix(path.upper_bound) + " " + to_string(*path.right);
    }
    return "?";
}

}  // namespace

std::string to_string(PathFormula const& path) {
    std::string s = print_single_path(path);
    if (path.condition) s += " || " + print_single_path(*path.condition);
    return s;
}

std::string operator_formula_to_string(OperatorFormula const& op) {
    std::string s;
    switch (op.kind) {
        case PropOperatorKind::Probability: s = "P"; break;
        case PropOperatorKind::Reward: s = "R"; break;
        case PropOperatorKind::LongRunAverage: s = "LRA"; break;
        case PropOperatorKind::SteadyState: s = "S"; break;
    }
    if (op.kind == PropOperatorKind::Reward && !op.reward_model.empty())
        s += "{\"" + op.reward_model + "\"}";
    s += direction_suffix(op.direction);
    s += bound_suffix(op.bound);
    s += " [ ";
    switch (op.kind) {
        case PropOperatorKind::Probability: s += to_string(*op.path); break;
        case PropOperatorKind::Reward:
            switch (op.reward_path.kind) {
                case RewardPath::Kind::Reach: s += "F " + to_string(*op.reward_path.target); break;
                case RewardPath::Kind::Cumulative: s += "C<=" + to_string(*op.reward_path.bound); break;
                case RewardPath::Kind::Instant: s += "I=" + to_string(*op.reward_path.bound); break;
            }
            break;
        case PropOperatorKind::LongRunAverage:
        case PropOperatorKind::SteadyState: s += to_string(*op.state); break;
    }
    s += " ]";
    return s;
}

Type operator_formula_type(OperatorFormula const& op) {
    return op.bound.is_query() ? Type::Real : Type::Bool;
}

std::string to_string(Property const& property) {
    std::string s;
    if (!property.name.empty()) s += "\"" + property.name + "\": ";
    return s + to_string(*property.formula);
}

}  // namespace squall
