#include "squall/expressions.hpp"

namespace squall {

namespace {

ExprPtr node(Expr&& e) { return std::make_shared<Expr const>(std::move(e)); }

}  // namespace

ExprPtr make_bool(bool value, std::size_t line, std::size_t column) {
    Expr e;
    e.node = Expr::Node::BoolLit;
    e.bool_value = value;
    e.line = line;
    e.column = column;
    return node(std::move(e));
}

ExprPtr make_int(Integer value, std::size_t line, std::size_t column) {
    Expr e;
    e.node = Expr::Node::IntLit;
    e.int_value = std::move(value);
    e.line = line;
    e.column = column;
    return node(std::move(e));
}

ExprPtr make_rational(Rational value, std::size_t line, std::size_t column) {
    Expr e;
    e.node = Expr::Node::RatLit;
    value.canonicalize();
    e.rat_value = std::move(value);
    e.line = line;
    e.column = column;
    return node(std::move(e));
}

ExprPtr make_ident(std::string name, std::size_t line, std::size_t column) {
    Expr e;
    e.node = Expr::Node::Ident;
    e.name = std::move(name);
    e.line = line;
    e.column = column;
    return node(std::move(e));
}

ExprPtr make_label(std::string name, std::size_t line, std::size_t column) {
    Expr e;
    e.node = Expr::Node::Label;
    e.name = std::move(name);
    e.line = line;
    e.column = column;
    return node(std::move(e));
}

ExprPtr make_unary(UnaryKind kind, ExprPtr operand) {
    Expr e;
    e.node = Expr::Node::Unary;
    e.unary_kind = kind;
    e.line = operand->line;
    e.column = operand->column;
    e.children = {std::move(operand)};
    return node(std::move(e));
}

ExprPtr make_binary(BinaryKind kind, ExprPtr left, ExprPtr right) {
    Expr e;
    e.node = Expr::Node::Binary;
    e.binary_kind = kind;
    e.line = left->line;
    e.column = left->column;
    e.children = {std::move(left), std::move(right)};
    return node(std::move(e));
}

ExprPtr make_ite(ExprPtr condition, ExprPtr then_branch, ExprPtr else_branch) {
    Expr e;
    e.node = Expr::Node::Ite;
    e.line = condition->line;
    e.column = condition->column;
    e.children = {std::move(condition), std::move(then_branch), std::move(else_branch)};
    return node(std::move(e));
}

ExprPtr make_call(FunctionKind kind, std::vector<ExprPtr> arguments) {
    Expr e;
    e.node = Expr::Node::Call;
    e.call_kind = kind;
    if (!arguments.empty()) {
        e.line = arguments.front()->line;
        e.column = arguments.front()->column;
    }
    e.children = std::move(arguments);
    return node(std::move(e));
}

ExprPtr make_operator(std::shared_ptr<OperatorFormula const> op, std::size_t line, std::size_t column) {
    Expr e;
    e.node = Expr::Node::Operator;
    e.op = std::move(op);
    e.line = line;
    e.column = column;
    return node(std::move(e));
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

Value numeric_negate(Value const& v) {
    if (v.is_int()) return Value(Integer(-v.as_int()));
    return Value(Rational(-v.to_rational()));
}

Value arith(BinaryKind kind, Value const& a, Value const& b) {
    if (!a.is_numeric() || !b.is_numeric())
        throw EvalError("arithmetic on " + a.type_name() + " and " + b.type_name());
    if (kind == BinaryKind::Divide) {
        Rational denom = b.to_rational();
        if (denom == 0) throw EvalError("division by zero");
        return Value(Rational(a.to_rational() / denom));
    }
    if (a.is_int() && b.is_int()) {
        Integer const& x = a.as_int();
        Integer const& y = b.as_int();
        switch (kind) {
            case BinaryKind::Plus: return Value(Integer(x + y));
            case BinaryKind::Minus: return Value(Integer(x - y));
            case BinaryKind::Times: return Value(Integer(x * y));
            default: break;
        }
    }
    Rational x = a.to_rational();
    Rational y = b.to_rational();
    switch (kind) {
        case BinaryKind::Plus: return Value(Rational(x + y));
        case BinaryKind::Minus: return Value(Rational(x - y));
        case BinaryKind::Times: return Value(Rational(x * y));
        default: break;
    }
    throw EvalError("bad arithmetic operator");
}

int compare_values(Value const& a, Value const& b) {
    if (!a.is_numeric() || !b.is_numeric())
        throw EvalError("comparison of " + a.type_name() + " and " + b.type_name());
    Rational x = a.to_rational();
    Rational y = b.to_rational();
    return x < y ? -1 : (x == y ? 0 : 1);
}

Value call_pow(Value const& base, Value const& exponent) {
    if (!exponent.is_int()) throw EvalError("pow needs an integer exponent");
    Integer const& e = exponent.as_int();
    if (e < 0) throw EvalError("pow needs a nonnegative exponent");
    if (!e.fits_ulong_p()) throw EvalError("pow exponent is too large");
    unsigned long ue = e.get_ui();
    if (base.is_int()) {
        Integer r;
        mpz_pow_ui(r.get_mpz_t(), base.as_int().get_mpz_t(), ue);
        return Value(std::move(r));
    }
    Rational q = base.to_rational();
    Integer num, den;
    mpz_pow_ui(num.get_mpz_t(), q.get_num_mpz_t(), ue);
    mpz_pow_ui(den.get_mpz_t(), q.get_den_mpz_t(), ue);
    Rational r(num, den);
    r.canonicalize();
    return Value(std::move(r));
}

Value call_mod(Value const& a, Value const& b) {
    if (!a.is_int() || !b.is_int()) throw EvalError("mod needs integer operands");
    Integer const& n = b.as_int();
    if (n <= 0) throw EvalError("mod needs a positive modulus");
    Integer r;
    mpz_fdiv_r(r.get_mpz_t(), a.as_int().get_mpz_t(), n.get_mpz_t());
    return Value(std::move(r));
}

Value call_floor(Value const& v, bool up) {
    if (v.is_int()) return v;
    Rational q = v.to_rational();
    Integer r;
    if (up)
        mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    else
        mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Value(std::move(r));
}

}  // namespace

Value evaluate(Expr const& expr, EvalEnv const& env) {
    switch (expr.node) {
        case Expr::Node::BoolLit: return Value(expr.bool_value);
        case Expr::Node::IntLit: return Value(expr.int_value);
        case Expr::Node::RatLit: return Value(expr.rat_value);
        case Expr::Node::Ident: {
            if (expr.slot >= 0 && env.slots) return (*env.slots)[static_cast<std::size_t>(expr.slot)];
            if (env.named) {
                auto it = env.named->find(expr.name);
                if (it != env.named->end()) return it->second;
            }
            throw EvalError("unresolved identifier \"" + expr.name + "\"");
        }
        case Expr::Node::Label:
        case Expr::Node::Operator: {
            if (env.special) return env.special(expr);
            throw EvalError(expr.node == Expr::Node::Label
                                ? "label \"" + expr.name + "\" cannot be evaluated here"
                                : "operator formula cannot be evaluated here");
        }
        case Expr::Node::Unary: {
            Value v = evaluate(*expr.children[0], env);
            if (expr.unary_kind == UnaryKind::Not) return Value(!v.as_bool());
            if (!v.is_numeric()) throw EvalError("negation of " + v.type_name());
            return numeric_negate(v);
        }
        case Expr::Node::Binary: {
            BinaryKind k = expr.binary_kind;
            // Short-circuit the boolean connectives so guarded subexpressions
            // (like a division behind a zero test) stay safe.
            if (k == BinaryKind::And || k == BinaryKind::Or || k == BinaryKind::Implies) {
                bool left = evaluate(*expr.children[0], env).as_bool();
                if (k == BinaryKind::And && !left) return Value(false);
                if (k == BinaryKind::Or && left) return Value(true);
                if (k == BinaryKind::Implies && !left) return Value(true);
                return Value(evaluate(*expr.children[1], env).as_bool());
            }
            Value a = evaluate(*expr.children[0], env);
            Value b = evaluate(*expr.children[1], env);
            switch (k) {
                case BinaryKind::Iff: return Value(a.as_bool() == b.as_bool());
                case BinaryKind::Eq:
                case BinaryKind::Neq: {
                    bool eq;
                    if (a.is_bool() && b.is_bool())
                        eq = a.as_bool() == b.as_bool();
                    else
                        eq = compare_values(a, b) == 0;
                    return Value(k == BinaryKind::Eq ? eq : !eq);
                }
                case BinaryKind::Lt: return Value(compare_values(a, b) < 0);
                case BinaryKind::Le: return Value(compare_values(a, b) <= 0);
                case BinaryKind::Gt: return Value(compare_values(a, b) > 0);
                case BinaryKind::Ge: return Value(compare_values(a, b) >= 0);
                default: return arith(k, a, b);
            }
        }
        case Expr::Node::Ite: {
            bool c = evaluate(*expr.children[0], env).as_bool();
            return evaluate(*expr.children[c ? 1 : 2], env);
        }
        case Expr::Node::Call: {
            switch (expr.call_kind) {
                case FunctionKind::Min:
                case FunctionKind::Max: {
                    Value best = evaluate(*expr.children[0], env);
                    for (std::size_t i = 1; i < expr.children.size(); ++i) {
                        Value v = evaluate(*expr.children[i], env);
                        int cmp = compare_values(v, best);
                        if (expr.call_kind == FunctionKind::Min ? cmp < 0 : cmp > 0) best = v;
                    }
                    return best;
                }
                case FunctionKind::Floor: return call_floor(evaluate(*expr.children[0], env), false);
                case FunctionKind::Ceil: return call_floor(evaluate(*expr.children[0], env), true);
                case FunctionKind::Pow:
                    return call_pow(evaluate(*expr.children[0], env), evaluate(*expr.children[1], env));
                case FunctionKind::Mod:
                    return call_mod(evaluate(*expr.children[0], env), evaluate(*expr.children[1], env));
            }
            throw EvalError("bad function");
        }
    }
    throw EvalError("bad expression node");
}

Value evaluate(Expr const& expr) {
    EvalEnv env;
    return evaluate(expr, env);
}

// ---------------------------------------------------------------------------
// Structural rewrites
// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
ExprPtr rewrite(ExprPtr const& expr, Fn&& leaf) {
    // `leaf` may return a replacement for the node; otherwise children are
    // rewritten and the node is rebuilt when anything changed.
    if (ExprPtr replaced = leaf(expr)) return replaced;
    bool changed = false;
    std::vector<ExprPtr> children;
    children.reserve(expr->children.size());
    for (auto const& child : expr->children) {
        ExprPtr next = rewrite(child, leaf);
        changed = changed || next != child;
        children.push_back(std::move(next));
    }
    if (!changed) return expr;
    Expr copy = *expr;
    copy.children = std::move(children);
    return std::make_shared<Expr const>(std::move(copy));
}

}  // namespace

ExprPtr bind(ExprPtr const& expr, std::map<std::string, int> const& slot_of) {
    return rewrite(expr, [&](ExprPtr const& e) -> ExprPtr {
        if (e->node != Expr::Node::Ident) return nullptr;
        auto it = slot_of.find(e->name);
        if (it == slot_of.end())
            throw ParseError("undefined identifier \"" + e->name + "\"", e->line, e->column);
        Expr copy = *e;
        copy.slot = it->second;
        return std::make_shared<Expr const>(std::move(copy));
    });
}

ExprPtr substitute(ExprPtr const& expr, std::map<std::string, ExprPtr> const& replacement) {
    return rewrite(expr, [&](ExprPtr const& e) -> ExprPtr {
        if (e->node != Expr::Node::Ident) return nullptr;
        auto it = replacement.find(e->name);
        return it == replacement.end() ? nullptr : it->second;
    });
}

void collect_identifiers(Expr const& expr, std::set<std::string>& out) {
    if (expr.node == Expr::Node::Ident) out.insert(expr.name);
    for (auto const& child : expr.children) collect_identifiers(*child, out);
}

// ---------------------------------------------------------------------------
// Typing
// ---------------------------------------------------------------------------

namespace {

Type join(Type a, Type b) { return a == Type::Int && b == Type::Int ? Type::Int : Type::Real; }

[[noreturn]] void type_error(Expr const& at, std::string const& message) {
    throw ParseError(message, at.line, at.column);
}

}  // namespace

Type type_of(Expr const& expr, std::function<Type(Expr const&)> const& type_of_ident) {
    auto recurse = [&](Expr const& e) { return type_of(e, type_of_ident); };
    switch (expr.node) {
        case Expr::Node::BoolLit: return Type::Bool;
        case Expr::Node::IntLit: return Type::Int;
        case Expr::Node::RatLit: return Type::Real;
        case Expr::Node::Ident: return type_of_ident(expr);
        case Expr::Node::Label: return Type::Bool;
        case Expr::Node::Operator: return operator_formula_type(*expr.op);
        case Expr::Node::Unary: {
            Type t = recurse(*expr.children[0]);
            if (expr.unary_kind == UnaryKind::Not) {
                if (t != Type::Bool) type_error(expr, "'!' needs a boolean operand");
                return Type::Bool;
            }
            if (!is_numeric(t)) type_error(expr, "'-' needs a numeric operand");
            return t;
        }
        case Expr::Node::Binary: {
            Type a = recurse(*expr.children[0]);
            Type b = recurse(*expr.children[1]);
            switch (expr.binary_kind) {
                case BinaryKind::Plus:
                case BinaryKind::Minus:
                case BinaryKind::Times:
                    if (!is_numeric(a) || !is_numeric(b))
                        type_error(expr, "arithmetic needs numeric operands");
                    return join(a, b);
                case BinaryKind::Divide:
                    if (!is_numeric(a) || !is_numeric(b))
                        type_error(expr, "'/' needs numeric operands");
                    return Type::Real;
                case BinaryKind::And:
                case BinaryKind::Or:
                case BinaryKind::Implies:
                case BinaryKind::Iff:
                    if (a != Type::Bool || b != Type::Bool)
                        type_error(expr, "boolean connective needs boolean operands");
                    return Type::Bool;
                case BinaryKind::Eq:
                case BinaryKind::Neq:
                    if (!((a == Type::Bool && b == Type::Bool) || (is_numeric(a) && is_numeric(b))))
                        type_error(expr, "'='/'!=' needs two booleans or two numbers");
                    return Type::Bool;
                case BinaryKind::Lt:
                case BinaryKind::Le:
                case BinaryKind::Gt:
                case BinaryKind::Ge:
                    if (!is_numeric(a) || !is_numeric(b))
                        type_error(expr, "comparison needs numeric operands");
                    return Type::Bool;
            }
            type_error(expr, "bad binary operator");
        }
        case Expr::Node::Ite: {
            if (recurse(*expr.children[0]) != Type::Bool)
                type_error(expr, "'?' needs a boolean condition");
            Type a = recurse(*expr.children[1]);
            Type b = recurse(*expr.children[2]);
            if (a == Type::Bool && b == Type::Bool) return Type::Bool;
            if (is_numeric(a) && is_numeric(b)) return join(a, b);
            type_error(expr, "'?' branches must both be boolean or both numeric");
        }
        case Expr::Node::Call: {
            std::vector<Type> ts;
            for (auto const& c : expr.children) ts.push_back(recurse(*c));
            switch (expr.call_kind) {
                case FunctionKind::Min:
                case FunctionKind::Max: {
                    Type t = ts[0];
                    for (Type u : ts) {
                        if (!is_numeric(u)) type_error(expr, "min/max needs numeric arguments");
                        t = join(t, u);
                    }
                    return t;
                }
                case FunctionKind::Floor:
                case FunctionKind::Ceil:
                    if (!is_numeric(ts[0])) type_error(expr, "floor/ceil needs a numeric argument");
                    return Type::Int;
                case FunctionKind::Pow:
                    if (!is_numeric(ts[0]) || !is_numeric(ts[1]))
                        type_error(expr, "pow needs numeric arguments");
                    return join(ts[0], ts[1]);
                case FunctionKind::Mod:
                    if (ts[0] != Type::Int || ts[1] != Type::Int)
                        type_error(expr, "mod needs integer arguments");
                    return Type::Int;
            }
            type_error(expr, "bad function");
        }
    }
    throw ParseError("bad expression node", expr.line, expr.column);
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

int precedence(Expr const& e) {
    switch (e.node) {
        case Expr::Node::Ite: return 0;
        case Expr::Node::Binary:
            switch (e.binary_kind) {
                case BinaryKind::Implies: return 1;
                case BinaryKind::Iff: return 2;
                case BinaryKind::Or: return 3;
                case BinaryKind::And: return 4;
                case BinaryKind::Eq:
                case BinaryKind::Neq: return 5;
                case BinaryKind::Lt:
                case BinaryKind::Le:
                case BinaryKind::Gt:
                case BinaryKind::Ge: return 6;
                case BinaryKind::Plus:
                case BinaryKind::Minus: return 7;
                case BinaryKind::Times:
                case BinaryKind::Divide: return 8;
            }
            return 0;
        case Expr::Node::Unary: return 9;
        default: return 10;
    }
}

std::string binary_symbol(BinaryKind kind) {
    switch (kind) {
        case BinaryKind::Plus: return "+";
        case BinaryKind::Minus: return "-";
        case BinaryKind::Times: return "*";
        case BinaryKind::Divide: return "/";
        case BinaryKind::And: return "&";
        case BinaryKind::Or: return "|";
        case BinaryKind::Implies: return "=>";
        case BinaryKind::Iff: return "<=>";
        case BinaryKind::Eq: return "=";
        case BinaryKind::Neq: return "!=";
        case BinaryKind::Lt: return "<";
        case BinaryKind::Le: return "<=";
        case BinaryKind::Gt: return ">";
        case BinaryKind::Ge: return ">=";
    }
    return "?";
}

/// Rational literals have no dedicated source syntax, so they are printed in
/// a form that parses back to the same value: an exact decimal expansion when
/// the denominator divides a power of ten, otherwise an exact division.
std::string print_rational_literal(Rational const& q) {
    Integer den = q.get_den();
    if (den == 1) return q.get_num().get_str() + ".0";
    Integer rest = den;
    unsigned long twos = 0, fives = 0;
    while (mpz_divisible_ui_p(rest.get_mpz_t(), 2)) {
        rest /= 2;
        ++twos;
    }
    while (mpz_divisible_ui_p(rest.get_mpz_t(), 5)) {
        rest /= 5;
        ++fives;
    }
    if (rest == 1) {
        unsigned long k = std::max(twos, fives);
        Integer factor, f2, f5;
        mpz_ui_pow_ui(f2.get_mpz_t(), 2, k - twos);
        mpz_ui_pow_ui(f5.get_mpz_t(), 5, k - fives);
        Integer scaled = q.get_num() * f2 * f5;
        bool negative = scaled < 0;
        std::string digits = Integer(abs(scaled)).get_str();
        if (digits.size() <= k) digits = std::string(k + 1 - digits.size(), '0') + digits;
        std::string out = digits.substr(0, digits.size() - k) + "." + digits.substr(digits.size() - k);
        return negative ? "-" + out : out;
    }
    return q.get_num().get_str() + " / " + den.get_str();
}

std::string function_name(FunctionKind kind) {
    switch (kind) {
        case FunctionKind::Min: return "min";
        case FunctionKind::Max: return "max";
        case FunctionKind::Floor: return "floor";
        case FunctionKind::Ceil: return "ceil";
        case FunctionKind::Pow: return "pow";
        case FunctionKind::Mod: return "mod";
    }
    return "?";
}

std::string print(Expr const& e);

std::string print_child(Expr const& child, int min_precedence) {
    std::string s = print(child);
    if (precedence(child) < min_precedence) return "(" + s + ")";
    return s;
}

std::string print(Expr const& e) {
    switch (e.node) {
        case Expr::Node::BoolLit: return e.bool_value ? "true" : "false";
        case Expr::Node::IntLit: return e.int_value.get_str();
        case Expr::Node::RatLit: return print_rational_literal(e.rat_value);
        case Expr::Node::Ident: return e.name;
        case Expr::Node::Label: return "\"" + e.name + "\"";
        case Expr::Node::Operator: return operator_formula_to_string(*e.op);
        case Expr::Node::Unary: {
            Expr const& c = *e.children[0];
            bool parens = precedence(c) < 9 ||
                          (c.node == Expr::Node::Unary && e.unary_kind == c.unary_kind);
            std::string inner = print(c);
            if (parens) inner = "(" + inner + ")";
            return (e.unary_kind == UnaryKind::Not ? "!" : "-") + inner;
        }
        case Expr::Node::Binary: {
            int prec = precedence(e);
            bool right_assoc = e.binary_kind == BinaryKind::Implies;
            std::string left = print_child(*e.children[0], right_assoc ? prec + 1 : prec);
            std::string right = print_child(*e.children[1], right_assoc ? prec : prec + 1);
            return left + " " + binary_symbol(e.binary_kind) + " " + right;
        }
        case Expr::Node::Ite: {
            auto guard = [&](Expr const& c) {
                std::string s = print(c);
                return c.node == Expr::Node::Ite ? "(" + s + ")" : s;
            };
            return guard(*e.children[0]) + " ? " + guard(*e.children[1]) + " : " +
                   print(*e.children[2]);
        }
        case Expr::Node::Call: {
            std::string s = function_name(e.call_kind) + "(";
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) s += ", ";
                s += print(*e.children[i]);
            }
            return s + ")";
        }
    }
    return "?";
}

}  // namespace

std::string to_string(Expr const& expr) { return print(expr); }

}  // namespace squall
