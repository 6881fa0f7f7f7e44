#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "squall/errors.hpp"
#include "squall/rational.hpp"

namespace squall {

/// Runtime value of an expression: boolean, unbounded integer, or exact
/// rational. Integers embed into rationals on demand; nothing here ever
/// rounds.
class Value {
  public:
    Value() : kind_(Kind::Bool), bool_(false) {}
    Value(bool b) : kind_(Kind::Bool), bool_(b) {}
    Value(Integer i) : kind_(Kind::Int), int_(std::move(i)) {}
    Value(Rational q) : kind_(Kind::Rat), rat_(std::move(q)) { rat_.canonicalize(); }
    Value(int i) : kind_(Kind::Int), int_(i) {}
    Value(long i) : kind_(Kind::Int), int_(static_cast<long>(i)) {}

    bool is_bool() const { return kind_ == Kind::Bool; }
    bool is_int() const { return kind_ == Kind::Int; }
    bool is_rational() const { return kind_ == Kind::Rat; }
    bool is_numeric() const { return kind_ != Kind::Bool; }

    bool as_bool() const {
        if (!is_bool()) throw EvalError("expected a boolean, got " + type_name());
        return bool_;
    }
    Integer const& as_int() const {
        if (!is_int()) throw EvalError("expected an integer, got " + type_name());
        return int_;
    }
    /// Numeric view; integers promote exactly.
    Rational to_rational() const {
        if (is_int()) return Rational(int_);
        if (is_rational()) return rat_;
        throw EvalError("expected a number, got " + type_name());
    }

    std::string type_name() const {
        switch (kind_) {
            case Kind::Bool: return "bool";
            case Kind::Int: return "int";
            case Kind::Rat: return "real";
        }
        return "?";
    }

    std::string to_string() const {
        switch (kind_) {
            case Kind::Bool: return bool_ ? "true" : "false";
            case Kind::Int: return int_.get_str();
            case Kind::Rat: return rational_to_string(rat_);
        }
        return "?";
    }

    friend bool operator==(Value const& a, Value const& b) {
        if (a.is_bool() || b.is_bool()) return a.is_bool() && b.is_bool() && a.bool_ == b.bool_;
        return a.to_rational() == b.to_rational();
    }

  private:
    enum class Kind { Bool, Int, Rat };
    Kind kind_;
    bool bool_ = false;
    Integer int_;
    Rational rat_;
};

enum class Type { Bool, Int, Real };

inline std::string to_string(Type t) {
    switch (t) {
        case Type::Bool: return "bool";
        case Type::Int: return "int";
        case Type::Real: return "real";
    }
    return "?";
}

inline bool is_numeric(Type t) { return t != Type::Bool; }

/// Subtype-aware: Int is assignable where Real is expected.
inline bool assignable(Type from, Type to) { return from == to || (from == Type::Int && to == Type::Real); }

enum class UnaryKind { Negate, Not };
enum class BinaryKind { Plus, Minus, Times, Divide, And, Or, Implies, Iff, Eq, Neq, Lt, Le, Gt, Ge };
enum class FunctionKind { Min, Max, Floor, Ceil, Pow, Mod };

struct OperatorFormula;  // probability/reward/steady-state operator; defined with the property language

class Expr;
using ExprPtr = std::shared_ptr<Expr const>;

/// Expression tree node. One closed type covers plain arithmetic/boolean
/// expressions as well as the two extensions used by properties: label atoms
/// ("name") and quantitative operator formulas.
class Expr {
  public:
    enum class Node { BoolLit, IntLit, RatLit, Ident, Label, Unary, Binary, Ite, Call, Operator };

    Node node;
    std::size_t line = 0, column = 0;

    // Literals.
    bool bool_value = false;
    Integer int_value;
    Rational rat_value;

    // Ident (variable/constant reference; slot is filled by bind()) and Label.
    std::string name;
    int slot = -1;

    UnaryKind unary_kind = UnaryKind::Negate;
    BinaryKind binary_kind = BinaryKind::Plus;
    FunctionKind call_kind = FunctionKind::Min;
    std::vector<ExprPtr> children;  // operands; for Ite: {condition, then, else}

    std::shared_ptr<OperatorFormula const> op;  // Node::Operator payload
};

ExprPtr make_bool(bool value, std::size_t line = 0, std::size_t column = 0);
ExprPtr make_int(Integer value, std::size_t line = 0, std::size_t column = 0);
ExprPtr make_rational(Rational value, std::size_t line = 0, std::size_t column = 0);
ExprPtr make_ident(std::string name, std::size_t line = 0, std::size_t column = 0);
ExprPtr make_label(std::string name, std::size_t line = 0, std::size_t column = 0);
ExprPtr make_unary(UnaryKind kind, ExprPtr operand);
ExprPtr make_binary(BinaryKind kind, ExprPtr left, ExprPtr right);
ExprPtr make_ite(ExprPtr condition, ExprPtr then_branch, ExprPtr else_branch);
ExprPtr make_call(FunctionKind kind, std::vector<ExprPtr> arguments);
ExprPtr make_operator(std::shared_ptr<OperatorFormula const> op, std::size_t line = 0,
                      std::size_t column = 0);

/// Evaluation environment. Identifiers resolve through `slots` when bound,
/// else through `named`; labels and operator formulas resolve through
/// `special` (normally supplied by the model checker with per-state truth).
struct EvalEnv {
    std::vector<Value> const* slots = nullptr;
    std::map<std::string, Value> const* named = nullptr;
    std::function<Value(Expr const&)> special;
};

/// Evaluates exactly; throws EvalError for type errors, division by zero,
/// unresolvable names, and the other runtime failures documented per
/// operation.
Value evaluate(Expr const& expr, EvalEnv const& env);

/// Convenience for closed expressions.
Value evaluate(Expr const& expr);

/// Rebuilds the tree with identifier slots resolved via `slot_of`; unknown
/// identifiers raise ParseError at their source location.
ExprPtr bind(ExprPtr const& expr, std::map<std::string, int> const& slot_of);

/// Rebuilds the tree replacing identifiers by the mapped expressions.
ExprPtr substitute(ExprPtr const& expr, std::map<std::string, ExprPtr> const& replacement);

/// Static type of the expression; identifier types come from `type_of_ident`
/// (throw from there to reject unknown names). Type errors raise ParseError
/// carrying the offending node's location.
Type type_of(Expr const& expr, std::function<Type(Expr const&)> const& type_of_ident);

/// All identifier names occurring in the tree (labels excluded).
void collect_identifiers(Expr const& expr, std::set<std::string>& out);

/// Source form with minimal parentheses; parses back to the same tree.
std::string to_string(Expr const& expr);

/// Hooks implemented with the property language so operator formulas can be
/// printed and typed from expression context.
std::string operator_formula_to_string(OperatorFormula const& op);
Type operator_formula_type(OperatorFormula const& op);

}  // namespace squall
