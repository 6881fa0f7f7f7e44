#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "squall/errors.hpp"
#include "squall/expressions.hpp"
#include "squall/matrix.hpp"
#include "squall/model.hpp"
#include "squall/prism.hpp"
#include "squall/value_traits.hpp"

/// Explicit-state model construction: breadth-first exploration of the
/// reachable variable valuations of a closed program.  State indices are
/// assigned in discovery order, so identical inputs always produce identical
/// models.
namespace squall {

struct BuildOptions {
    enum class DtmcOverlap {
        Error,   // several enabled dtmc commands in one state is an error
        Uniform  // pick uniformly among the enabled commands
    };

    bool fix_deadlocks = true;
    index_t max_states = index_t(1) << 26;
    DtmcOverlap dtmc_overlap = DtmcOverlap::Error;
};

struct BuildStats {
    index_t num_states = 0;
    index_t num_rows = 0;
    index_t num_transitions = 0;
    index_t deadlocks_fixed = 0;
    double build_seconds = 0.0;
};

/// Compact per-state variable valuations: each state is a fixed-width packed
/// bit vector (bools one bit, bounded ints just enough bits for their range).
/// Doubles as the exploration key and as the lookup table that property
/// checking uses to evaluate state expressions.
class StateValuations {
  public:
    struct VariableLayout {
        std::string name;
        bool is_bool = false;
        Integer lower;             // int variables: value = lower + packed bits
        unsigned bit_offset = 0;
        unsigned bit_width = 0;    // 0 for single-value ranges
    };

    StateValuations() = default;
    StateValuations(std::vector<VariableLayout> layout, unsigned words_per_state)
        : layout_(std::move(layout)), words_(std::max(1u, words_per_state)) {}

    index_t num_states() const { return static_cast<index_t>(storage_.size() / words_); }
    std::size_t num_variables() const { return layout_.size(); }
    std::vector<VariableLayout> const& layout() const { return layout_; }

    /// Slot index of a variable name, or -1.
    int slot_of(std::string const& name) const {
        for (std::size_t i = 0; i < layout_.size(); ++i)
            if (layout_[i].name == name) return static_cast<int>(i);
        return -1;
    }

    /// Packs a full valuation (one Value per variable, in layout order).
    std::vector<std::uint64_t> pack(std::vector<Value> const& slots) const {
        std::vector<std::uint64_t> words(words_, 0);
        for (std::size_t i = 0; i < layout_.size(); ++i) {
            VariableLayout const& var = layout_[i];
            if (var.is_bool) {
                if (slots[i].as_bool()) set_bit(words.data(), var.bit_offset);
                continue;
            }
            Integer diff = slots[i].as_int() - var.lower;
            if (mpz_fits_ulong_p(diff.get_mpz_t())) {
                write_bits(words.data(), var.bit_offset, var.bit_width, diff.get_ui());
            } else {
                for (unsigned b = 0; b < var.bit_width; ++b)
                    if (mpz_tstbit(diff.get_mpz_t(), b)) set_bit(words.data(), var.bit_offset + b);
            }
        }
        return words;
    }

    /// Decodes one variable of one state.
    Value value(index_t state, std::size_t slot) const {
        std::uint64_t const* words = &storage_[state * words_];
        VariableLayout const& var = layout_[slot];
        if (var.is_bool) return Value(get_bit(words, var.bit_offset));
        if (var.bit_width <= 64)
            return Value(Integer(var.lower + Integer(static_cast<unsigned long>(
                                     read_bits(words, var.bit_offset, var.bit_width)))));
        Integer diff = 0;
        for (unsigned b = 0; b < var.bit_width; ++b)
            if (get_bit(words, var.bit_offset + b)) mpz_setbit(diff.get_mpz_t(), b);
        return Value(Integer(var.lower + diff));
    }

    /// Decodes a full state into `slots` (resized to the variable count).
    void fill(index_t state, std::vector<Value>& slots) const {
        slots.resize(layout_.size());
        for (std::size_t i = 0; i < layout_.size(); ++i) slots[i] = value(state, i);
    }

    /// Human-readable valuation, e.g. "s=3, d=0".
    std::string describe(index_t state) const {
        std::string out;
        for (std::size_t i = 0; i < layout_.size(); ++i) {
            if (i > 0) out += ", ";
            out += layout_[i].name + "=" + value(state, i).to_string();
        }
        return out;
    }

    /// Appends one packed state; used during exploration.
    void append(std::vector<std::uint64_t> const& words) {
        storage_.insert(storage_.end(), words.begin(), words.end());
    }

  private:
    static void set_bit(std::uint64_t* words, unsigned bit) {
        words[bit / 64] |= std::uint64_t(1) << (bit % 64);
    }
    static bool get_bit(std::uint64_t const* words, unsigned bit) {
        return (words[bit / 64] >> (bit % 64)) & 1;
    }
    static void write_bits(std::uint64_t* words, unsigned offset, unsigned width,
                           std::uint64_t value) {
        for (unsigned b = 0; b < width; ++b)
            if ((value >> b) & 1) set_bit(words, offset + b);
    }
    static std::uint64_t read_bits(std::uint64_t const* words, unsigned offset, unsigned width) {
        std::uint64_t value = 0;
        for (unsigned b = 0; b < width; ++b)
            if (get_bit(words, offset + b)) value |= std::uint64_t(1) << b;
        return value;
    }

    std::vector<VariableLayout> layout_;
    unsigned words_ = 1;
    std::vector<std::uint64_t> storage_;
};

template <typename V>
struct BuildResult {
    Model<V> model;
    StateValuations valuations;
    BuildStats stats;
};

namespace detail {

struct WordVectorHash {
    std::size_t operator()(std::vector<std::uint64_t> const& words) const {
        std::size_t h = 1469598103934665603ull;
        for (std::uint64_t w : words) {
            h ^= static_cast<std::size_t>(w);
            h *= 1099511628211ull;
        }
        return h;
    }
};

/// One command with its expressions rebound to variable slots.
struct BoundCommand {
    prism::Command const* source = nullptr;
    std::size_t module_index = 0;
    std::string action;
    bool markovian = false;
    ExprPtr guard;
    std::vector<ExprPtr> weights;                           // one per update
    std::vector<std::vector<std::pair<int, ExprPtr>>> assignments;  // (slot, value)
};

/// Exploration engine; one instance per build_model call.
template <typename V>
class Explorer {
  public:
    Explorer(prism::Program const& program, BuildOptions const& options)
        : program_(program), options_(options) {}

    BuildResult<V> run() {
        auto start_time = std::chrono::steady_clock::now();
        if (!program_.closed()) {
            std::string names;
            for (auto const& name : program_.undefined_constants())
                names += (names.empty() ? "" : ", ") + name;
            throw BuildError("the program still has undefined constants: " + names);
        }
        layout_variables();
        bind_expressions();
        seed_initial_states();

        // States are processed in index order; the queue is implicit because
        // breadth-first discovery appends new states at the back.
        for (index_t state = 0; state < num_states(); ++state) explore(state);

        return finalize(start_time);
    }

  private:
    using Row = std::map<index_t, Rational>;

    // ---- preparation ----

    void layout_variables() {
        std::vector<StateValuations::VariableLayout> layout;
        unsigned offset = 0;
        EvalEnv empty;
        for (auto const* variable : program_.all_variables()) {
            StateValuations::VariableLayout entry;
            entry.name = variable->name;
            entry.bit_offset = offset;
            if (variable->type == Type::Bool) {
                entry.is_bool = true;
                entry.bit_width = 1;
                uppers_.push_back(Integer());  // placeholder, keeps slots aligned
            } else {
                entry.lower = evaluate(*variable->lower, empty).as_int();
                Integer range = evaluate(*variable->upper, empty).as_int() - entry.lower;
                entry.bit_width =
                    range == 0 ? 0
                               : static_cast<unsigned>(mpz_sizeinbase(range.get_mpz_t(), 2));
                uppers_.push_back(entry.lower + range);
            }
            offset += entry.bit_width;
            slot_of_.emplace(variable->name, static_cast<int>(layout.size()));
            layout.push_back(std::move(entry));
            defaults_.push_back(default_value(*variable));
        }
        valuations_ = StateValuations(std::move(layout), (offset + 63) / 64);
    }

    Value default_value(prism::Variable const& variable) const {
        EvalEnv empty;
        if (variable.init) return evaluate(*variable.init, empty);
        if (variable.type == Type::Bool) return Value(false);
        return evaluate(*variable.lower, empty);
    }

    void bind_expressions() {
        for (std::size_t m = 0; m < program_.modules.size(); ++m) {
            for (auto const& command : program_.modules[m].commands) {
                BoundCommand bound;
                bound.source = &command;
                bound.module_index = m;
                bound.action = command.action;
                bound.markovian = command.markovian;
                bound.guard = squall::bind(command.guard, slot_of_);
                for (auto const& update : command.updates) {
                    bound.weights.push_back(squall::bind(update.weight, slot_of_));
                    std::vector<std::pair<int, ExprPtr>> assignments;
                    for (auto const& assignment : update.assignments)
                        assignments.emplace_back(slot_of_.at(assignment.variable),
                                                 squall::bind(assignment.value, slot_of_));
                    bound.assignments.push_back(std::move(assignments));
                }
                if (command.markovian) {
                    markovian_.push_back(std::move(bound));
                } else if (command.action.empty()) {
                    silent_.push_back(std::move(bound));
                } else {
                    auto& buckets = sync_buckets_[command.action];
                    buckets.resize(program_.modules.size());
                    buckets[m].push_back(std::move(bound));
                }
            }
        }
        // Per action: the modules that declare it, each with its command list.
        for (auto& [action, per_module] : sync_buckets_) {
            std::vector<std::vector<BoundCommand>*> participating;
            for (auto& commands : per_module)
                if (!commands.empty()) participating.push_back(&commands);
            sync_[action] = std::move(participating);
        }

        for (auto const& label : program_.labels)
            bound_labels_.emplace_back(label.name, squall::bind(label.condition, slot_of_));
        if (program_.init_expression) bound_init_ = squall::bind(program_.init_expression, slot_of_);

        for (auto const& rewards : program_.rewards) {
            BoundRewards bound;
            bound.source = &rewards;
            for (auto const& item : rewards.state_items)
                bound.state_items.push_back(
                    {squall::bind(item.guard, slot_of_), squall::bind(item.value, slot_of_)});
            for (auto const& item : rewards.action_items)
                bound.action_items.push_back(
                    {item.action, squall::bind(item.guard, slot_of_), squall::bind(item.value, slot_of_)});
            bound_rewards_.push_back(std::move(bound));
        }
    }

    void seed_initial_states() {
        if (bound_init_) {
            // Enumerate the variable hypercube and keep the valuations
            // satisfying the init expression.  The work is capped so a huge
            // cube fails fast rather than spinning.
            std::uint64_t combinations = 1;
            std::uint64_t const limit = std::uint64_t(1) << 27;
            for (std::size_t i = 0; i < valuations_.num_variables(); ++i) {
                auto const& var = valuations_.layout()[i];
                Integer count = var.is_bool ? Integer(2) : uppers_[i] - var.lower + 1;
                if (!mpz_fits_ulong_p(count.get_mpz_t()) || count.get_ui() > limit ||
                    combinations > limit / count.get_ui())
                    throw BuildError(
                        "the init block ranges over too many valuations to enumerate");
                combinations *= count.get_ui();
            }
            std::vector<Value> slots(defaults_);
            enumerate_init(0, slots);
            if (states_.empty()) throw BuildError("the init block is satisfied by no valuation");
        } else {
            intern(defaults_);
        }
        for (index_t state = 0; state < num_states(); ++state)
            initial_states_.push_back(state);
    }

    void enumerate_init(std::size_t slot, std::vector<Value>& slots) {
        if (slot == slots.size()) {
            EvalEnv env;
            env.slots = &slots;
            if (evaluate(*bound_init_, env).as_bool()) intern(slots);
            return;
        }
        auto const& var = valuations_.layout()[slot];
        if (var.is_bool) {
            for (bool b : {false, true}) {
                slots[slot] = Value(b);
                enumerate_init(slot + 1, slots);
            }
            return;
        }
        for (Integer v = var.lower; v <= uppers_[slot]; ++v) {
            slots[slot] = Value(v);
            enumerate_init(slot + 1, slots);
        }
    }

    // ---- state interning ----

    index_t num_states() const { return static_cast<index_t>(states_.size()); }

    index_t intern(std::vector<Value> const& slots) {
        std::vector<std::uint64_t> key = valuations_.pack(slots);
        auto it = index_of_.find(key);
        if (it != index_of_.end()) return it->second;
        if (num_states() >= options_.max_states)
            throw BuildError("state space exceeds the limit of " +
                             std::to_string(options_.max_states) + " states");
        index_t index = num_states();
        index_of_.emplace(key, index);
        states_.push_back(key);
        valuations_.append(key);
        return index;
    }

    // ---- per-state exploration ----

    struct Instance {
        std::string const* action;                  // "" for silent
        std::vector<BoundCommand const*> commands;  // one per participating module
    };

    void explore(index_t state) {
        current_state_ = state;
        std::vector<Value> slots;
        valuations_.fill(state, slots);
        EvalEnv env;
        env.slots = &slots;

        // Enabled command instances: silent commands alone, action-labelled
        // commands as one instance per combination across the modules that
        // declare the action.
        std::vector<Instance> instances;
        for (auto const& command : silent_)
            if (evaluate(*command.guard, env).as_bool())
                instances.push_back({&command.action, {&command}});
        for (auto const& [action, participating] : sync_) {
            std::vector<std::vector<BoundCommand const*>> enabled(participating.size());
            bool possible = true;
            for (std::size_t m = 0; m < participating.size() && possible; ++m) {
                for (auto const& command : *participating[m])
                    if (evaluate(*command.guard, env).as_bool())
                        enabled[m].push_back(&command);
                possible = !enabled[m].empty();
            }
            if (!possible) continue;
            std::vector<std::size_t> pick(enabled.size(), 0);
            while (true) {
                Instance instance;
                instance.action = &action;
                for (std::size_t m = 0; m < enabled.size(); ++m)
                    instance.commands.push_back(enabled[m][pick[m]]);
                instances.push_back(std::move(instance));
                std::size_t wheel = 0;
                while (wheel < pick.size() && ++pick[wheel] == enabled[wheel].size())
                    pick[wheel++] = 0;
                if (wheel == pick.size()) break;
            }
        }

        // Cache evaluated weights and apply the per-command validity rules.
        std::map<BoundCommand const*, std::vector<Rational>> weights;
        for (auto const& instance : instances)
            for (auto const* command : instance.commands)
                if (!weights.count(command)) weights.emplace(command, evaluate_weights(*command, state, env));

        bool const continuous = program_.kind == ModelKind::Ctmc;
        std::vector<Row> rows;                    // rows emitted for this state
        std::vector<std::vector<std::pair<std::string const*, Rational>>> row_sources;

        if (program_.kind == ModelKind::Dtmc) {
            if (instances.size() > 1 && options_.dtmc_overlap == BuildOptions::DtmcOverlap::Error)
                throw BuildError("state (" + valuations_.describe(state) + ") enables " +
                                 std::to_string(instances.size()) +
                                 " commands; a dtmc needs a unique choice (or the uniform "
                                 "overlap option)");
            if (!instances.empty()) {
                Rational share(1, static_cast<unsigned long>(instances.size()));
                Row row;
                std::vector<std::pair<std::string const*, Rational>> sources;
                for (auto const& instance : instances) {
                    accumulate(instance, share, slots, env, weights, row);
                    sources.emplace_back(instance.action, share);
                }
                rows.push_back(std::move(row));
                row_sources.push_back(std::move(sources));
            }
        } else if (program_.kind == ModelKind::Ctmc) {
            Row row;
            std::vector<std::pair<std::string const*, Rational>> sources;
            for (auto const& instance : instances) {
                accumulate(instance, Rational(1), slots, env, weights, row);
                sources.emplace_back(instance.action, Rational(1));
            }
            if (!row.empty()) {
                rows.push_back(std::move(row));
                row_sources.push_back(std::move(sources));
            }
        } else {  // Mdp and Ma probabilistic rows
            for (auto const& instance : instances) {
                Row row;
                accumulate(instance, Rational(1), slots, env, weights, row);
                rows.push_back(std::move(row));
                row_sources.push_back({{instance.action, Rational(1)}});
            }
        }

        bool markovian_state = false;
        Rational exit_rate;
        if (program_.kind == ModelKind::Ma && rows.empty()) {
            // Maximal progress: the Markovian row only survives in states
            // without an enabled probabilistic command.
            Row row;
            std::vector<std::pair<std::string const*, Rational>> sources;
            for (auto const& command : markovian_) {
                if (!evaluate(*command.guard, env).as_bool()) continue;
                if (!weights.count(&command))
                    weights.emplace(&command, evaluate_weights(command, state, env));
                Instance instance{&command.action, {&command}};
                accumulate(instance, Rational(1), slots, env, weights, row);
                sources.emplace_back(&command.action, Rational(1));
            }
            if (!row.empty()) {
                markovian_state = true;
                for (auto const& [target, rate] : row) {
                    (void)target;
                    exit_rate += rate;
                }
                // The matrix stores the embedded probabilities; the total rate
                // lives in exit_rates.
                for (auto& [target, rate] : row) {
                    (void)target;
                    rate /= exit_rate;
                }
                rows.push_back(std::move(row));
                row_sources.push_back(std::move(sources));
            }
        }

        if (rows.empty()) {
            if (!options_.fix_deadlocks)
                throw BuildError("deadlock in state (" + valuations_.describe(state) +
                                 ") and deadlock fixing is disabled");
            Row loop;
            loop.emplace(state, Rational(1));
            rows.push_back(std::move(loop));
            row_sources.push_back({});
            deadlock_states_.push_back(state);
            if (program_.kind == ModelKind::Ma) {
                markovian_state = true;
                exit_rate = Rational(1);
            }
            ++stats_.deadlocks_fixed;
        }

        if (continuous) {
            Rational total;
            for (auto const& [target, rate] : rows.front()) {
                (void)target;
                total += rate;
            }
            exit_rates_.push_back(total);
        }
        if (program_.kind == ModelKind::Ma) {
            if (markovian_state) markovian_list_.push_back(state);
            exit_rates_.push_back(markovian_state ? exit_rate : Rational());
        }

        // Emit the rows into the growing sparse structure.
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (auto const& [target, probability] : rows[r]) {
                if (probability == 0) continue;
                columns_.push_back(target);
                entries_.push_back(probability);
            }
            row_offsets_.push_back(static_cast<index_t>(columns_.size()));
            emit_action_rewards(row_sources[r], env);
        }
        group_offsets_.push_back(static_cast<index_t>(row_offsets_.size()) - 1);

        // State labels and state rewards are evaluated while the valuation is
        // unpacked anyway.
        for (std::size_t l = 0; l < bound_labels_.size(); ++l)
            if (evaluate(*bound_labels_[l].second, env).as_bool())
                label_states_[l].push_back(state);
        for (std::size_t r = 0; r < bound_rewards_.size(); ++r) {
            Rational reward;
            for (auto const& item : bound_rewards_[r].state_items)
                if (evaluate(*item.guard, env).as_bool()) {
                    Value v = evaluate(*item.value, env);
                    reward += v.to_rational();
                }
            if (reward < 0)
                throw BuildError("negative state reward in \"" + bound_rewards_[r].source->name +
                                 "\" at state (" + valuations_.describe(state) + ")");
            state_rewards_[r].push_back(reward);
        }
    }

    /// Evaluates one command's update weights in `env` and runs the per-kind
    /// validity rules (probabilities sum to one, rates are nonnegative).
    std::vector<Rational> evaluate_weights(BoundCommand const& command, index_t state,
                                           EvalEnv const& env) {
        std::vector<Rational> result;
        Rational sum;
        for (auto const& weight : command.weights) {
            Rational w = evaluate(*weight, env).to_rational();
            bool const rate = command.markovian || program_.kind == ModelKind::Ctmc;
            if (w < 0)
                throw BuildError(std::string("negative ") + (rate ? "rate" : "probability") +
                                 " in the command at line " +
                                 std::to_string(command.source->line) + " at state (" +
                                 valuations_.describe(state) + ")");
            sum += w;
            result.push_back(std::move(w));
        }
        if (!command.markovian && program_.kind != ModelKind::Ctmc) {
            bool ok = ValueTraits<V>::is_exact
                          ? sum == 1
                          : abs(sum - 1) <= Rational(1, 10000000000ul);
            if (!ok)
                throw BuildError("the update probabilities of the command at line " +
                                 std::to_string(command.source->line) + " sum to " +
                                 rational_to_string(sum) + " at state (" +
                                 valuations_.describe(state) + ")");
        }
        return result;
    }

    /// Adds one instance's update cross-product to `row`, scaled by `scale`.
    /// All right-hand sides read the source state.
    void accumulate(Instance const& instance, Rational const& scale,
                    std::vector<Value> const& source, EvalEnv const& env,
                    std::map<BoundCommand const*, std::vector<Rational>> const& weights,
                    Row& row) {
        std::vector<Value> target(source);
        accumulate_rec(instance, 0, scale, source, env, weights, target, row);
    }

    void accumulate_rec(Instance const& instance, std::size_t depth, Rational weight,
                        std::vector<Value> const& source, EvalEnv const& env,
                        std::map<BoundCommand const*, std::vector<Rational>> const& weights,
                        std::vector<Value>& target, Row& row) {
        if (weight == 0) return;
        if (depth == instance.commands.size()) {
            row[intern(target)] += weight;
            return;
        }
        BoundCommand const& command = *instance.commands[depth];
        std::vector<Rational> const& command_weights = weights.at(&command);
        for (std::size_t u = 0; u < command.weights.size(); ++u) {
            // Apply this update's assignments on top of the current target,
            // remembering what they overwrote so the branch can be undone.
            std::vector<std::pair<int, Value>> saved;
            for (auto const& [slot, value] : command.assignments[u]) {
                saved.emplace_back(slot, target[slot]);
                target[slot] = checked_assignment(command, slot, *value, env);
            }
            accumulate_rec(instance, depth + 1, weight * command_weights[u], source, env,
                           weights, target, row);
            for (auto it = saved.rbegin(); it != saved.rend(); ++it)
                target[it->first] = it->second;
        }
    }

    Value checked_assignment(BoundCommand const& command, int slot, Expr const& value,
                             EvalEnv const& env) {
        Value result = evaluate(value, env);
        auto const& var = valuations_.layout()[slot];
        if (var.is_bool) {
            result.as_bool();  // type guard
            return result;
        }
        Integer const& v = result.as_int();
        if (v < var.lower || v > uppers_[slot])
            throw BuildError("assignment sets '" + var.name + "' to " + v.get_str() +
                             ", outside [" + var.lower.get_str() + ".." +
                             uppers_[slot].get_str() + "], in the command at line " +
                             std::to_string(command.source->line) + " from state (" +
                             valuations_.describe(current_state_) + ")");
        return result;
    }

    void emit_action_rewards(
        std::vector<std::pair<std::string const*, Rational>> const& sources, EvalEnv const& env) {
        for (std::size_t r = 0; r < bound_rewards_.size(); ++r) {
            Rational reward;
            for (auto const& [action, scale] : sources) {
                for (auto const& item : bound_rewards_[r].action_items) {
                    if (item.action != *action) continue;
                    if (!evaluate(*item.guard, env).as_bool()) continue;
                    reward += evaluate(*item.value, env).to_rational() * scale;
                }
            }
            if (reward < 0)
                throw BuildError("negative action reward in \"" +
                                 bound_rewards_[r].source->name + "\"");
            action_rewards_[r].push_back(reward);
        }
    }

    // ---- finalization ----

    BuildResult<V> finalize(std::chrono::steady_clock::time_point start_time) {
        index_t n = num_states();
        Model<V> model;
        model.kind = program_.kind;

        std::vector<V> values;
        values.reserve(entries_.size());
        for (auto const& q : entries_) values.push_back(ValueTraits<V>::from_rational(q));
        index_t num_rows = static_cast<index_t>(row_offsets_.size()) - 1;
        model.matrix = SparseMatrix<V>(num_rows, n, std::move(row_offsets_),
                                       std::move(columns_), std::move(values));

        if (model.kind == ModelKind::Dtmc || model.kind == ModelKind::Ctmc) {
            model.grouping = RowGrouping::trivial(n);
        } else {
            RowGrouping grouping;
            grouping.group_offsets = std::move(group_offsets_);
            model.grouping = std::move(grouping);
        }

        model.labeling = StateLabeling(n);
        for (index_t state : initial_states_) model.labeling.add_to_label("init", state);
        for (index_t state : deadlock_states_) model.labeling.add_to_label("deadlock", state);
        for (std::size_t l = 0; l < bound_labels_.size(); ++l) {
            Bitset bits(n);
            for (index_t state : label_states_[l]) bits.set(state);
            model.labeling.add_label(bound_labels_[l].first, std::move(bits));
        }

        for (std::size_t r = 0; r < bound_rewards_.size(); ++r) {
            RewardModel<V> rewards;
            rewards.name = bound_rewards_[r].source->name;
            if (!bound_rewards_[r].state_items.empty()) {
                std::vector<V> state_rewards;
                state_rewards.reserve(n);
                for (auto const& q : state_rewards_[r])
                    state_rewards.push_back(ValueTraits<V>::from_rational(q));
                rewards.state_rewards = std::move(state_rewards);
            }
            if (!bound_rewards_[r].action_items.empty()) {
                std::vector<V> action_rewards;
                action_rewards.reserve(action_rewards_[r].size());
                for (auto const& q : action_rewards_[r])
                    action_rewards.push_back(ValueTraits<V>::from_rational(q));
                rewards.action_rewards = std::move(action_rewards);
            }
            model.rewards.emplace(rewards.name, std::move(rewards));
        }

        if (model.kind == ModelKind::Ctmc || model.kind == ModelKind::Ma) {
            model.exit_rates.reserve(n);
            for (auto const& q : exit_rates_)
                model.exit_rates.push_back(ValueTraits<V>::from_rational(q));
        }
        if (model.kind == ModelKind::Ma) {
            model.markovian_states = Bitset(n);
            for (index_t state : markovian_list_) model.markovian_states.set(state);
        }

        // Weights were already checked exactly, pre-rounding; the structural
        // check here must not trip on rounding when a sum sat right at the
        // acceptance boundary, hence the looser row tolerance.
        model.validate(1e-8);

        stats_.num_states = n;
        stats_.num_rows = model.num_rows();
        stats_.num_transitions = model.num_transitions();
        stats_.build_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time)
                .count();

        BuildResult<V> result{std::move(model), std::move(valuations_), stats_};
        return result;
    }

    // ---- data ----

    prism::Program const& program_;
    BuildOptions options_;

    StateValuations valuations_;
    std::map<std::string, int> slot_of_;
    std::vector<Value> defaults_;
    std::vector<Integer> uppers_;  // per slot; unused entries for bools

    std::vector<BoundCommand> silent_;
    std::vector<BoundCommand> markovian_;
    std::map<std::string, std::vector<std::vector<BoundCommand>>> sync_buckets_;
    std::map<std::string, std::vector<std::vector<BoundCommand>*>> sync_;

    struct BoundStateItem {
        ExprPtr guard, value;
    };
    struct BoundActionItem {
        std::string action;
        ExprPtr guard, value;
    };
    struct BoundRewards {
        prism::RewardStruct const* source = nullptr;
        std::vector<BoundStateItem> state_items;
        std::vector<BoundActionItem> action_items;
    };
    std::vector<BoundRewards> bound_rewards_;
    std::vector<std::pair<std::string, ExprPtr>> bound_labels_;
    ExprPtr bound_init_;

    std::unordered_map<std::vector<std::uint64_t>, index_t, WordVectorHash> index_of_;
    std::vector<std::vector<std::uint64_t>> states_;
    std::vector<index_t> initial_states_;
    std::vector<index_t> deadlock_states_;
    std::vector<index_t> markovian_list_;
    std::map<std::size_t, std::vector<index_t>> label_states_;
    std::map<std::size_t, std::vector<Rational>> state_rewards_;
    std::map<std::size_t, std::vector<Rational>> action_rewards_;
    std::vector<Rational> exit_rates_;
    index_t current_state_ = 0;

    std::vector<index_t> row_offsets_{0};
    std::vector<index_t> columns_;
    std::vector<Rational> entries_;
    std::vector<index_t> group_offsets_{0};

    BuildStats stats_;
};

}  // namespace detail

/// Explores a closed program into a sparse model.  V selects the numeric
/// backend: double (each exact transition probability rounded once) or
/// Rational (fully exact).
template <typename V>
BuildResult<V> build_model(prism::Program const& program, BuildOptions const& options = {}) {
    detail::Explorer<V> explorer(program, options);
    return explorer.run();
}

}  // namespace squall
