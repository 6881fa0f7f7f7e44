#include "squall/prism.hpp"

#include <functional>
#include <set>
#include <sstream>

#include "squall/expr_parser.hpp"
#include "squall/lexer.hpp"

namespace squall::prism {
namespace {

std::set<std::string> const& reserved_words() {
    static std::set<std::string> const words{
        "dtmc",   "ctmc",      "mdp",       "ma",         "probabilistic", "stochastic",
        "nondeterministic",    "const",     "int",        "double",        "bool",
        "formula", "label",    "module",    "endmodule",  "rewards",       "endrewards",
        "init",   "endinit",   "global",    "system",     "endsystem",     "true",
        "false",  "min",       "max",       "floor",      "ceil",          "pow",
        "mod"};
    return words;
}

std::string type_keyword(Type type) {
    switch (type) {
        case Type::Bool: return "bool";
        case Type::Int: return "int";
        case Type::Real: return "double";
    }
    return "?";
}

ExprPtr make_literal(Value const& value) {
    if (value.is_bool()) return make_bool(value.as_bool());
    if (value.is_int()) return make_int(value.as_int());
    return make_rational(value.to_rational());
}

/// Grammar layer: consumes tokens into the raw AST. All semantic analysis
/// (name resolution, typing, inlining) happens in later passes.
class ProgramParser : public ExpressionParser {
  public:
    explicit ProgramParser(std::vector<Token> const& tokens) : ExpressionParser(tokens) {}

    Program parse() {
        Program program;
        program.kind = parse_model_kind();
        while (!at(TokenKind::EndOfInput)) {
            if (at_keyword("const")) {
                parse_constant(program);
            } else if (at_keyword("formula")) {
                parse_formula(program);
            } else if (at_keyword("label")) {
                parse_label(program);
            } else if (at_keyword("module")) {
                parse_module(program);
            } else if (at_keyword("rewards")) {
                parse_rewards(program);
            } else if (at_keyword("init")) {
                parse_init(program);
            } else if (at_keyword("global")) {
                fail("global variables are not supported");
            } else if (at_keyword("system")) {
                fail("system...endsystem composition is not supported");
            } else if (at_keyword("dtmc") || at_keyword("ctmc") || at_keyword("mdp") ||
                       at_keyword("ma") || at_keyword("probabilistic") ||
                       at_keyword("stochastic") || at_keyword("nondeterministic")) {
                fail("duplicate model type declaration");
            } else {
                fail("expected a declaration (const, formula, label, module, rewards, or init)");
            }
        }
        if (program.modules.empty()) fail("a model needs at least one module");
        return program;
    }

  private:
    ModelKind parse_model_kind() {
        if (accept_keyword("dtmc") || accept_keyword("probabilistic")) return ModelKind::Dtmc;
        if (accept_keyword("ctmc") || accept_keyword("stochastic")) return ModelKind::Ctmc;
        if (accept_keyword("mdp") || accept_keyword("nondeterministic")) return ModelKind::Mdp;
        if (accept_keyword("ma")) return ModelKind::Ma;
        fail("a model starts with its type: dtmc, ctmc, mdp, or ma");
    }

    Token declared_name() {
        Token name = expect(TokenKind::Identifier, "declaration");
        if (reserved_words().count(name.text))
            throw ParseError("'" + name.text + "' is a reserved word", name.line, name.column);
        return name;
    }

    void parse_constant(Program& program) {
        expect_keyword("const");
        Type type;
        if (accept_keyword("int"))
            type = Type::Int;
        else if (accept_keyword("double"))
            type = Type::Real;
        else if (accept_keyword("bool"))
            type = Type::Bool;
        else
            fail("expected 'int', 'double', or 'bool' after 'const'");
        Token name = declared_name();
        Constant constant{name.text, type, nullptr, name.line, name.column};
        if (accept(TokenKind::Eq)) constant.definition = parse_expression();
        expect(TokenKind::Semicolon, "constant declaration");
        program.constants.push_back(std::move(constant));
    }

    void parse_formula(Program& program) {
        expect_keyword("formula");
        Token name = declared_name();
        expect(TokenKind::Eq, "formula declaration");
        ExprPtr body = parse_expression();
        expect(TokenKind::Semicolon, "formula declaration");
        program.formulas.push_back({name.text, std::move(body), name.line, name.column});
    }

    void parse_label(Program& program) {
        expect_keyword("label");
        Token name = expect(TokenKind::String, "label declaration");
        if (name.text == "init" || name.text == "deadlock")
            throw ParseError("label \"" + name.text + "\" is reserved", name.line, name.column);
        expect(TokenKind::Eq, "label declaration");
        ExprPtr condition = parse_expression();
        expect(TokenKind::Semicolon, "label declaration");
        program.labels.push_back({name.text, std::move(condition), name.line, name.column});
    }

    void parse_module(Program& program) {
        Token keyword = expect_keyword("module");
        Token name = declared_name();
        if (at(TokenKind::Eq)) fail("module renaming is not supported");
        Module module;
        module.name = name.text;
        module.line = keyword.line;
        module.column = keyword.column;
        while (!at_keyword("endmodule")) {
            if (at(TokenKind::EndOfInput)) fail("unterminated module (missing 'endmodule')");
            if (at(TokenKind::Identifier) && peek(1).kind == TokenKind::Colon)
                parse_variable(module);
            else if (at(TokenKind::LBracket) || at(TokenKind::Lt))
                parse_command(module);
            else
                fail("expected a variable declaration or a command");
        }
        expect_keyword("endmodule");
        program.modules.push_back(std::move(module));
    }

    void parse_variable(Module& module) {
        Token name = declared_name();
        expect(TokenKind::Colon, "variable declaration");
        Variable variable;
        variable.name = name.text;
        variable.line = name.line;
        variable.column = name.column;
        if (accept_keyword("bool")) {
            variable.type = Type::Bool;
        } else {
            variable.type = Type::Int;
            expect(TokenKind::LBracket, "variable range");
            variable.lower = parse_expression();
            expect(TokenKind::DotDot, "variable range");
            variable.upper = parse_expression();
            expect(TokenKind::RBracket, "variable range");
        }
        if (accept_keyword("init")) variable.init = parse_expression();
        expect(TokenKind::Semicolon, "variable declaration");
        module.variables.push_back(std::move(variable));
    }

    void parse_command(Module& module) {
        Command command;
        command.line = peek().line;
        command.column = peek().column;
        if (accept(TokenKind::LBracket)) {
            if (at(TokenKind::Identifier)) command.action = declared_name().text;
            expect(TokenKind::RBracket, "action label");
        } else {
            expect(TokenKind::Lt, "command");
            if (!accept(TokenKind::Gt)) fail("Markovian commands cannot carry an action label");
            command.markovian = true;
        }
        command.guard = parse_expression();
        expect(TokenKind::Arrow, "command");
        do {
            command.updates.push_back(parse_update());
        } while (accept(TokenKind::Plus));
        expect(TokenKind::Semicolon, "command");
        module.commands.push_back(std::move(command));
    }

    Update parse_update() {
        Update update;
        // An update is `weight : targets` or bare `targets` (weight 1). The
        // two are told apart by attempting the weight expression first: the
        // attempt fails or ends without a ':' exactly for bare targets.
        std::size_t start = position();
        bool weighted = false;
        try {
            ExprPtr weight = parse_expression();
            if (at(TokenKind::Colon)) {
                advance();
                update.weight = std::move(weight);
                weighted = true;
            }
        } catch (ParseError const&) {
        }
        if (!weighted) {
            set_position(start);
            update.weight = make_int(1);
        }
        if (accept_keyword("true")) return update;  // no assignments
        do {
            expect(TokenKind::LParen, "assignment");
            Token variable = expect(TokenKind::Identifier, "assignment");
            expect(TokenKind::Prime, "assignment");
            expect(TokenKind::Eq, "assignment");
            Assignment assignment{variable.text, parse_expression(), variable.line,
                                  variable.column};
            expect(TokenKind::RParen, "assignment");
            update.assignments.push_back(std::move(assignment));
        } while (accept(TokenKind::Amp));
        return update;
    }

    void parse_rewards(Program& program) {
        Token keyword = expect_keyword("rewards");
        RewardStruct rewards;
        rewards.line = keyword.line;
        rewards.column = keyword.column;
        if (at(TokenKind::String)) rewards.name = advance().text;
        while (!at_keyword("endrewards")) {
            if (at(TokenKind::EndOfInput)) fail("unterminated rewards block");
            if (accept(TokenKind::LBracket)) {
                ActionRewardItem item;
                if (at(TokenKind::Identifier)) item.action = advance().text;
                expect(TokenKind::RBracket, "reward item");
                item.guard = parse_expression();
                expect(TokenKind::Colon, "reward item");
                item.value = parse_expression();
                expect(TokenKind::Semicolon, "reward item");
                rewards.action_items.push_back(std::move(item));
            } else {
                StateRewardItem item;
                item.guard = parse_expression();
                expect(TokenKind::Colon, "reward item");
                item.value = parse_expression();
                expect(TokenKind::Semicolon, "reward item");
                rewards.state_items.push_back(std::move(item));
            }
        }
        expect_keyword("endrewards");
        program.rewards.push_back(std::move(rewards));
    }

    void parse_init(Program& program) {
        Token keyword = expect_keyword("init");
        if (program.init_expression)
            throw ParseError("duplicate init block", keyword.line, keyword.column);
        program.init_expression = parse_expression();
        expect_keyword("endinit");
    }
};

/// Name table produced by the resolution pass.
struct Names {
    std::map<std::string, Type> types;                  // constants and variables
    std::map<std::string, Constant const*> constants;   // by name
    std::map<std::string, std::string> variable_owner;  // variable -> module name
};

void check_unique(std::map<std::string, Type>& types, std::string const& name, Type type,
                  std::size_t line, std::size_t column) {
    if (!types.emplace(name, type).second)
        throw ParseError("duplicate identifier '" + name + "'", line, column);
}

Names collect_names(Program const& program) {
    Names names;
    for (auto const& constant : program.constants) {
        check_unique(names.types, constant.name, constant.type, constant.line, constant.column);
        names.constants.emplace(constant.name, &constant);
    }
    std::set<std::string> formula_names;
    for (auto const& formula : program.formulas) {
        if (names.types.count(formula.name) || !formula_names.insert(formula.name).second)
            throw ParseError("duplicate identifier '" + formula.name + "'", formula.line,
                             formula.column);
    }
    std::set<std::string> module_names;
    for (auto const& module : program.modules) {
        if (!module_names.insert(module.name).second)
            throw ParseError("duplicate module name '" + module.name + "'", module.line,
                             module.column);
        for (auto const& variable : module.variables) {
            if (formula_names.count(variable.name))
                throw ParseError("duplicate identifier '" + variable.name + "'", variable.line,
                                 variable.column);
            check_unique(names.types, variable.name, variable.type, variable.line,
                         variable.column);
            names.variable_owner.emplace(variable.name, module.name);
        }
    }
    std::set<std::string> label_names;
    for (auto const& label : program.labels)
        if (!label_names.insert(label.name).second)
            throw ParseError("duplicate label \"" + label.name + "\"", label.line, label.column);
    std::set<std::string> reward_names;
    for (auto const& rewards : program.rewards)
        if (!reward_names.insert(rewards.name).second)
            throw ParseError(rewards.name.empty()
                                 ? "duplicate unnamed rewards block"
                                 : "duplicate rewards block \"" + rewards.name + "\"",
                             rewards.line, rewards.column);
    return names;
}

/// Replaces formula references everywhere, rejecting cyclic definitions.
/// Formula bodies themselves are stored fully expanded so printing them
/// round-trips without re-resolution.
void inline_formulas(Program& program) {
    std::map<std::string, Formula*> by_name;
    for (auto& formula : program.formulas) by_name.emplace(formula.name, &formula);

    std::map<std::string, int> state;  // 0 fresh, 1 expanding, 2 done
    std::map<std::string, ExprPtr> expanded;
    std::function<ExprPtr(Formula&)> expand = [&](Formula& formula) -> ExprPtr {
        int& mark = state[formula.name];
        if (mark == 2) return expanded.at(formula.name);
        if (mark == 1)
            throw ParseError("cyclic formula definition involving '" + formula.name + "'",
                             formula.line, formula.column);
        mark = 1;
        std::set<std::string> used;
        collect_identifiers(*formula.body, used);
        std::map<std::string, ExprPtr> replacement;
        for (auto const& name : used)
            if (auto it = by_name.find(name); it != by_name.end())
                replacement.emplace(name, expand(*it->second));
        ExprPtr result =
            replacement.empty() ? formula.body : substitute(formula.body, replacement);
        mark = 2;
        expanded.emplace(formula.name, result);
        return result;
    };
    for (auto& formula : program.formulas) formula.body = expand(formula);

    if (program.formulas.empty()) return;
    std::map<std::string, ExprPtr> replacement;
    for (auto const& formula : program.formulas)
        replacement.emplace(formula.name, formula.body);
    auto apply = [&](ExprPtr& expr) {
        if (expr) expr = substitute(expr, replacement);
    };
    for (auto& constant : program.constants) apply(constant.definition);
    for (auto& module : program.modules) {
        for (auto& variable : module.variables) {
            apply(variable.lower);
            apply(variable.upper);
            apply(variable.init);
        }
        for (auto& command : module.commands) {
            apply(command.guard);
            for (auto& update : command.updates) {
                apply(update.weight);
                for (auto& assignment : update.assignments) apply(assignment.value);
            }
        }
    }
    for (auto& label : program.labels) apply(label.condition);
    for (auto& rewards : program.rewards) {
        for (auto& item : rewards.state_items) {
            apply(item.guard);
            apply(item.value);
        }
        for (auto& item : rewards.action_items) {
            apply(item.guard);
            apply(item.value);
        }
    }
    apply(program.init_expression);
}

/// Type environment over the full identifier table.
Type lookup_type(Names const& names, Expr const& ident) {
    auto it = names.types.find(ident.name);
    if (it == names.types.end())
        throw ParseError("unknown identifier '" + ident.name + "'", ident.line, ident.column);
    return it->second;
}

/// Type environment restricted to constants (variable bounds, constant
/// definitions, and initial values may not look at the state).
Type lookup_constant_type(Names const& names, Expr const& ident, std::string const& where) {
    auto it = names.constants.find(ident.name);
    if (it == names.constants.end()) {
        if (names.types.count(ident.name))
            throw ParseError(where + " may only reference constants, not variable '" +
                                 ident.name + "'",
                             ident.line, ident.column);
        throw ParseError("unknown identifier '" + ident.name + "'", ident.line, ident.column);
    }
    return it->second->type;
}

void require(bool condition, std::string const& message, std::size_t line, std::size_t column) {
    if (!condition) throw ParseError(message, line, column);
}

void type_check(Program const& program, Names const& names) {
    auto full = [&](Expr const& ident) { return lookup_type(names, ident); };

    for (auto const& constant : program.constants) {
        if (!constant.definition) continue;
        Type type = type_of(*constant.definition, [&](Expr const& ident) {
            return lookup_constant_type(names, ident, "a constant definition");
        });
        require(assignable(type, constant.type),
                "constant '" + constant.name + "' is declared " + type_keyword(constant.type) +
                    " but defined as " + squall::to_string(type),
                constant.line, constant.column);
    }

    for (auto const& module : program.modules) {
        for (auto const& variable : module.variables) {
            auto constant_env = [&](Expr const& ident) {
                return lookup_constant_type(names, ident, "a variable declaration");
            };
            if (variable.type == Type::Int) {
                require(type_of(*variable.lower, constant_env) == Type::Int,
                        "the bounds of '" + variable.name + "' must be integers", variable.line,
                        variable.column);
                require(type_of(*variable.upper, constant_env) == Type::Int,
                        "the bounds of '" + variable.name + "' must be integers", variable.line,
                        variable.column);
            }
            if (variable.init)
                require(type_of(*variable.init, constant_env) == variable.type,
                        "the initial value of '" + variable.name + "' must have type " +
                            type_keyword(variable.type),
                        variable.line, variable.column);
        }
        for (auto const& command : module.commands) {
            require(type_of(*command.guard, full) == Type::Bool, "a guard must be boolean",
                    command.line, command.column);
            for (auto const& update : command.updates) {
                require(type_of(*update.weight, full) != Type::Bool,
                        command.markovian || program.kind == ModelKind::Ctmc
                            ? "a rate must be numeric"
                            : "a probability must be numeric",
                        command.line, command.column);
                std::set<std::string> assigned;
                for (auto const& assignment : update.assignments) {
                    auto owner = names.variable_owner.find(assignment.variable);
                    if (owner == names.variable_owner.end())
                        throw ParseError(names.types.count(assignment.variable)
                                             ? "cannot assign to constant '" +
                                                   assignment.variable + "'"
                                             : "unknown variable '" + assignment.variable + "'",
                                         assignment.line, assignment.column);
                    require(owner->second == module.name,
                            "module '" + module.name + "' cannot assign variable '" +
                                assignment.variable + "' owned by module '" + owner->second + "'",
                            assignment.line, assignment.column);
                    require(assigned.insert(assignment.variable).second,
                            "variable '" + assignment.variable +
                                "' is assigned twice in one update",
                            assignment.line, assignment.column);
                    require(assignable(type_of(*assignment.value, full),
                                       names.types.at(assignment.variable)),
                            "assignment to '" + assignment.variable + "' has the wrong type",
                            assignment.line, assignment.column);
                }
            }
        }
    }

    for (auto const& label : program.labels)
        require(type_of(*label.condition, full) == Type::Bool,
                "label \"" + label.name + "\" must be boolean", label.line, label.column);

    for (auto const& rewards : program.rewards) {
        for (auto const& item : rewards.state_items) {
            require(type_of(*item.guard, full) == Type::Bool, "a reward guard must be boolean",
                    rewards.line, rewards.column);
            require(type_of(*item.value, full) != Type::Bool, "a reward must be numeric",
                    rewards.line, rewards.column);
        }
        for (auto const& item : rewards.action_items) {
            require(type_of(*item.guard, full) == Type::Bool, "a reward guard must be boolean",
                    rewards.line, rewards.column);
            require(type_of(*item.value, full) != Type::Bool, "a reward must be numeric",
                    rewards.line, rewards.column);
        }
    }

    if (program.init_expression)
        require(type_of(*program.init_expression, full) == Type::Bool,
                "the init block must contain a boolean expression", 0, 0);
}

void check_structure(Program const& program) {
    for (auto const& module : program.modules) {
        for (auto const& command : module.commands) {
            if (command.markovian && program.kind != ModelKind::Ma)
                throw ParseError("Markovian commands are only allowed in ma models",
                                 command.line, command.column);
        }
        if (program.init_expression)
            for (auto const& variable : module.variables)
                if (variable.init)
                    throw ParseError("variable '" + variable.name +
                                         "' has an initial value although the program has an "
                                         "init block",
                                     variable.line, variable.column);
    }
}

/// Topological evaluation of constant definitions; `values` starts out with
/// the command-line bindings and ends up covering every constant.
void evaluate_constants_into(Program const& program, std::map<std::string, Value>& values) {
    std::map<std::string, Constant const*> by_name;
    for (auto const& constant : program.constants) by_name.emplace(constant.name, &constant);

    std::map<std::string, int> state;  // 0 fresh, 1 evaluating, 2 done
    std::function<void(Constant const&)> resolve = [&](Constant const& constant) {
        int& mark = state[constant.name];
        if (mark == 2) return;
        if (mark == 1)
            throw ParseError("cyclic constant definition involving '" + constant.name + "'",
                             constant.line, constant.column);
        mark = 1;
        if (!values.count(constant.name)) {
            if (!constant.definition)
                throw InputError("no value for undefined constant '" + constant.name + "'");
            std::set<std::string> used;
            collect_identifiers(*constant.definition, used);
            for (auto const& name : used)
                if (auto it = by_name.find(name); it != by_name.end()) resolve(*it->second);
            EvalEnv env;
            env.named = &values;
            values.emplace(constant.name, evaluate(*constant.definition, env));
        }
        mark = 2;
    };
    for (auto const& constant : program.constants) resolve(constant);
}

/// Cycle detection alone, for programs that cannot be evaluated yet because
/// some constants are still undefined.
void check_constant_cycles(Program const& program) {
    std::map<std::string, Constant const*> by_name;
    for (auto const& constant : program.constants) by_name.emplace(constant.name, &constant);
    std::map<std::string, int> state;
    std::function<void(Constant const&)> visit = [&](Constant const& constant) {
        int& mark = state[constant.name];
        if (mark == 2) return;
        if (mark == 1)
            throw ParseError("cyclic constant definition involving '" + constant.name + "'",
                             constant.line, constant.column);
        mark = 1;
        if (constant.definition) {
            std::set<std::string> used;
            collect_identifiers(*constant.definition, used);
            for (auto const& name : used)
                if (auto it = by_name.find(name); it != by_name.end()) visit(*it->second);
        }
        mark = 2;
    };
    for (auto const& constant : program.constants) visit(constant);
}

/// Bound checks that need constant values: non-empty ranges and in-range
/// initial values.
void check_bounds(Program const& program, std::map<std::string, Value> const& values) {
    EvalEnv env;
    env.named = &values;
    for (auto const& module : program.modules) {
        for (auto const& variable : module.variables) {
            if (variable.type == Type::Bool) continue;
            Integer lower = evaluate(*variable.lower, env).as_int();
            Integer upper = evaluate(*variable.upper, env).as_int();
            require(lower <= upper,
                    "empty range [" + lower.get_str() + ".." + upper.get_str() +
                        "] for variable '" + variable.name + "'",
                    variable.line, variable.column);
            if (variable.init) {
                Integer init = evaluate(*variable.init, env).as_int();
                require(lower <= init && init <= upper,
                        "init out of bounds for variable '" + variable.name + "': " +
                            init.get_str() + " is outside [" + lower.get_str() + ".." +
                            upper.get_str() + "]",
                        variable.line, variable.column);
            }
        }
    }
}

}  // namespace

std::vector<std::string> Program::undefined_constants() const {
    std::vector<std::string> result;
    for (auto const& constant : constants)
        if (!constant.definition) result.push_back(constant.name);
    return result;
}

bool Program::closed() const { return undefined_constants().empty(); }

std::vector<Variable const*> Program::all_variables() const {
    std::vector<Variable const*> result;
    for (auto const& module : modules)
        for (auto const& variable : module.variables) result.push_back(&variable);
    return result;
}

std::map<std::string, Type> Program::identifier_types() const {
    std::map<std::string, Type> result;
    for (auto const& constant : constants) result.emplace(constant.name, constant.type);
    for (auto const& module : modules)
        for (auto const& variable : module.variables)
            result.emplace(variable.name, variable.type);
    return result;
}

Program parse_program(std::string const& text) {
    std::vector<Token> tokens = tokenize(text);
    ProgramParser parser(tokens);
    Program program = parser.parse();

    Names names = collect_names(program);
    inline_formulas(program);
    type_check(program, names);
    check_structure(program);
    check_constant_cycles(program);
    if (program.closed()) {
        std::map<std::string, Value> values;
        evaluate_constants_into(program, values);
        check_bounds(program, values);
    }
    return program;
}

std::map<std::string, Value> constant_values(Program const& program) {
    std::map<std::string, Value> values;
    evaluate_constants_into(program, values);
    return values;
}

Program substitute_constants(Program const& program,
                             std::map<std::string, Value> const& bindings) {
    std::vector<std::string> undefined = program.undefined_constants();
    std::set<std::string> undefined_set(undefined.begin(), undefined.end());
    std::string missing;
    for (auto const& name : undefined)
        if (!bindings.count(name)) missing += (missing.empty() ? "" : ", ") + name;
    if (!missing.empty()) throw InputError("missing value for constant(s): " + missing);
    for (auto const& [name, value] : bindings) {
        if (!undefined_set.count(name))
            throw InputError("'" + name + "' is not an undefined constant of this model");
        for (auto const& constant : program.constants) {
            if (constant.name != name) continue;
            bool matches = (constant.type == Type::Bool && value.is_bool()) ||
                           (constant.type == Type::Int && value.is_int()) ||
                           (constant.type == Type::Real && value.is_numeric());
            if (!matches)
                throw InputError("constant '" + name + "' is declared " +
                                 type_keyword(constant.type) + " but bound to a " +
                                 value.type_name() + " value");
        }
    }

    std::map<std::string, Value> values(bindings);
    evaluate_constants_into(program, values);

    std::map<std::string, ExprPtr> replacement;
    for (auto const& [name, value] : values) replacement.emplace(name, make_literal(value));

    Program result = program;
    auto apply = [&](ExprPtr& expr) {
        if (expr) expr = substitute(expr, replacement);
    };
    for (auto& constant : result.constants)
        constant.definition = make_literal(values.at(constant.name));
    for (auto& formula : result.formulas) apply(formula.body);
    for (auto& module : result.modules) {
        for (auto& variable : module.variables) {
            apply(variable.lower);
            apply(variable.upper);
            apply(variable.init);
        }
        for (auto& command : module.commands) {
            apply(command.guard);
            for (auto& update : command.updates) {
                apply(update.weight);
                for (auto& assignment : update.assignments) apply(assignment.value);
            }
        }
    }
    for (auto& label : result.labels) apply(label.condition);
    for (auto& rewards : result.rewards) {
        for (auto& item : rewards.state_items) {
            apply(item.guard);
            apply(item.value);
        }
        for (auto& item : rewards.action_items) {
            apply(item.guard);
            apply(item.value);
        }
    }
    apply(result.init_expression);

    check_bounds(result, values);
    return result;
}

std::string to_string(Program const& program) {
    std::ostringstream out;
    out << squall::to_string(program.kind) << "\n";

    if (!program.constants.empty()) out << "\n";
    for (auto const& constant : program.constants) {
        out << "const " << type_keyword(constant.type) << " " << constant.name;
        if (constant.definition) out << " = " << squall::to_string(*constant.definition);
        out << ";\n";
    }

    if (!program.formulas.empty()) out << "\n";
    for (auto const& formula : program.formulas)
        out << "formula " << formula.name << " = " << squall::to_string(*formula.body) << ";\n";

    for (auto const& module : program.modules) {
        out << "\nmodule " << module.name << "\n";
        for (auto const& variable : module.variables) {
            out << "    " << variable.name << " : ";
            if (variable.type == Type::Bool)
                out << "bool";
            else
                out << "[" << squall::to_string(*variable.lower) << ".."
                    << squall::to_string(*variable.upper) << "]";
            if (variable.init) out << " init " << squall::to_string(*variable.init);
            out << ";\n";
        }
        if (!module.variables.empty() && !module.commands.empty()) out << "\n";
        for (auto const& command : module.commands) {
            out << "    " << (command.markovian ? "<>" : "[" + command.action + "]") << " "
                << squall::to_string(*command.guard) << " -> ";
            for (std::size_t i = 0; i < command.updates.size(); ++i) {
                Update const& update = command.updates[i];
                if (i > 0) out << " + ";
                out << squall::to_string(*update.weight) << " : ";
                if (update.assignments.empty()) {
                    out << "true";
                } else {
                    for (std::size_t j = 0; j < update.assignments.size(); ++j) {
                        if (j > 0) out << " & ";
                        out << "(" << update.assignments[j].variable << "' = "
                            << squall::to_string(*update.assignments[j].value) << ")";
                    }
                }
            }
            out << ";\n";
        }
        out << "endmodule\n";
    }

    if (!program.labels.empty()) out << "\n";
    for (auto const& label : program.labels)
        out << "label \"" << label.name << "\" = " << squall::to_string(*label.condition)
            << ";\n";

    for (auto const& rewards : program.rewards) {
        out << "\nrewards";
        if (!rewards.name.empty()) out << " \"" << rewards.name << "\"";
        out << "\n";
        for (auto const& item : rewards.state_items)
            out << "    " << squall::to_string(*item.guard) << " : "
                << squall::to_string(*item.value) << ";\n";
        for (auto const& item : rewards.action_items)
            out << "    [" << item.action << "] " << squall::to_string(*item.guard) << " : "
                << squall::to_string(*item.value) << ";\n";
        out << "endrewards\n";
    }

    if (program.init_expression)
        out << "\ninit\n    " << squall::to_string(*program.init_expression) << "\nendinit\n";
    return out.str();
}

}  // namespace squall::prism
