#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "squall/expressions.hpp"
#include "squall/matrix.hpp"

namespace squall {

/// The property language: state formulas are plain expressions extended with
/// label atoms and the quantitative operators below. Operators nest — a
/// threshold operator is a boolean state formula and can appear anywhere a
/// boolean expression can.

enum class PropOperatorKind { Probability, Reward, LongRunAverage, SteadyState };

enum class BoundComparison { Less, LessEq, Greater, GreaterEq };

std::string to_string(BoundComparison c);

/// Threshold against the computed value, e.g. ">= 0.5". Without a comparison
/// the operator is a query ("=?") yielding a number instead of a truth value.
struct OperatorBound {
    std::optional<BoundComparison> comparison;
    ExprPtr threshold;  // set iff comparison is

    bool is_query() const { return !comparison.has_value(); }
};

enum class PathKind { Next, Until, WeakUntil, Globally };

/// Path formula under a probability operator. Until/WeakUntil use left and
/// right; Next and Globally only right. An upper time bound restricts the
/// path to [0, upper] (steps for discrete time, time for continuous time);
/// the lower end of a written interval must be zero. `condition`, when set,
/// conditions the probability on a second path formula.
struct PathFormula {
    PathKind kind = PathKind::Until;
    ExprPtr left;
    ExprPtr right;
    ExprPtr upper_bound;                    // null = unbounded
    bool printed_as_eventually = false;     // F sugar (Until with left = true)
    std::shared_ptr<PathFormula const> condition;
};

/// Accumulation target under a reward operator.
struct RewardPath {
    enum class Kind { Reach, Cumulative, Instant };
    Kind kind = Kind::Reach;
    ExprPtr target;  // Reach: goal state formula
    ExprPtr bound;   // Cumulative: horizon; Instant: time point
};

/// One quantitative operator: P / R / LRA / S with optional min/max
/// direction and threshold-or-query bound.
struct OperatorFormula {
    PropOperatorKind kind = PropOperatorKind::Probability;
    std::optional<OptimizationDirection> direction;
    OperatorBound bound;
    std::string reward_model;  // Reward only; empty picks the unique one

    std::shared_ptr<PathFormula const> path;  // Probability
    RewardPath reward_path;                   // Reward
    ExprPtr state;                            // LongRunAverage / SteadyState subject
};

/// A checkable property: a state formula, normally an operator at the top.
struct Property {
    std::string name;  // optional
    ExprPtr formula;
};

/// Parses a single state formula, requiring the whole input to be consumed.
Property parse_property(std::string const& text);

/// Parses a semicolon-separated list of properties. An optional quoted name
/// may precede each property as in `"safe": P>=0.9 [ G !"crash" ];`.
/// `//` comments and blank lines are allowed.
std::vector<Property> parse_properties(std::string const& text);

std::string to_string(Property const& property);
std::string to_string(PathFormula const& path);

}  // namespace squall
