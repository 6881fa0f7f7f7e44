#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "squall/expressions.hpp"
#include "squall/model.hpp"

/// Guarded-command modeling language frontend.
///
/// The accepted language is the subset documented in docs/prism-subset.md:
/// a model-kind keyword, typed constants, formula and label macros, one or
/// more modules over bool and bounded-int variables, reward structures, and
/// an optional init block.  Parsing produces a Program whose expressions have
/// all formula references inlined; substitute_constants then closes the
/// program so that every expression only mentions module variables.
namespace squall::prism {

struct Constant {
    std::string name;
    Type type = Type::Int;
    ExprPtr definition;  // null for constants given on the command line
    std::size_t line = 0, column = 0;
};

struct Formula {
    std::string name;
    ExprPtr body;  // stored with other formulas already inlined
    std::size_t line = 0, column = 0;
};

struct Variable {
    std::string name;
    Type type = Type::Int;  // Bool or Int
    ExprPtr lower, upper;   // int only; constant expressions
    ExprPtr init;           // null = lower bound / false
    std::size_t line = 0, column = 0;
};

struct Assignment {
    std::string variable;
    ExprPtr value;
    std::size_t line = 0, column = 0;
};

/// One probabilistic branch of a command: weight : (x'=e) & (y'=e).
struct Update {
    ExprPtr weight;  // probability, or rate for ctmc commands
    std::vector<Assignment> assignments;
};

struct Command {
    std::string action;      // empty = silent
    bool markovian = false;  // true for `<>` commands (ma only)
    ExprPtr guard;
    std::vector<Update> updates;
    std::size_t line = 0, column = 0;
};

struct Module {
    std::string name;
    std::vector<Variable> variables;
    std::vector<Command> commands;
    std::size_t line = 0, column = 0;
};

struct StateRewardItem {
    ExprPtr guard;
    ExprPtr value;
};

struct ActionRewardItem {
    std::string action;  // empty = silent transitions
    ExprPtr guard;
    ExprPtr value;
};

struct RewardStruct {
    std::string name;  // may be empty for the single default structure
    std::vector<StateRewardItem> state_items;
    std::vector<ActionRewardItem> action_items;
    std::size_t line = 0, column = 0;
};

struct Label {
    std::string name;
    ExprPtr condition;
    std::size_t line = 0, column = 0;
};

struct Program {
    ModelKind kind = ModelKind::Dtmc;
    std::vector<Constant> constants;
    std::vector<Formula> formulas;
    std::vector<Module> modules;
    std::vector<Label> labels;
    std::vector<RewardStruct> rewards;
    ExprPtr init_expression;  // null unless an init...endinit block is present

    /// Names of constants that still need a value from the caller.
    std::vector<std::string> undefined_constants() const;

    /// True when every constant has a defining expression.
    bool closed() const;

    /// The variable list flattened across modules, in declaration order.
    std::vector<Variable const*> all_variables() const;

    /// Looks up a constant or variable type by name (for property parsing).
    std::map<std::string, Type> identifier_types() const;
};

/// Parses and validates a program.  Structural problems (syntax, unknown or
/// duplicate identifiers, type errors, cyclic definitions) throw ParseError
/// with a source position.  Value-dependent checks (variable bounds and
/// initial values) run here too when the program is closed, otherwise they
/// are deferred to substitute_constants.
Program parse_program(std::string const& text);

/// Closes a program: every undefined constant is given by `bindings`, all
/// constant occurrences are replaced by literal values, and the deferred
/// bound checks run.  Throws InputError for missing/extra/mistyped bindings.
Program substitute_constants(Program const& program,
                             std::map<std::string, Value> const& bindings);

/// Evaluated values of all constants (after closing).  Keyed by name.
std::map<std::string, Value> constant_values(Program const& program);

/// Canonical pretty-printer; its output parses back to the same program.
std::string to_string(Program const& program);

}  // namespace squall::prism
