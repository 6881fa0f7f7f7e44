#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "squall/builder.hpp"
#include "squall/fox_glynn.hpp"
#include "squall/graphs.hpp"
#include "squall/model.hpp"
#include "squall/props.hpp"
#include "squall/solvers.hpp"

namespace squall {

/// Knobs for a checking run. Solver method names are passed through to
/// solve_linear / solve_bellman; empty strings pick the arithmetic's default.
struct CheckOptions {
    double precision = 1e-6;
    bool relative = true;
    std::uint64_t max_iterations = 1'000'000;
    std::string linear_method;
    std::string bellman_method;
    bool produce_scheduler = false;
    /// Accept (and ignore, with a warning) min/max annotations on models
    /// without nondeterminism instead of rejecting them.
    bool allow_direction_on_deterministic = false;
};

/// Outcome of checking one property. Quantitative operators at the top level
/// fill `values` (per state); a threshold bound additionally fills `truth`.
/// Plain state formulas fill only `truth`. Diverging expected rewards are
/// flagged per state in `infinite` (the stored value is then meaningless for
/// exact arithmetic and +inf for floating point).
template <typename V>
struct CheckResult {
    bool is_boolean = false;
    Bitset truth;
    std::vector<V> values;
    Bitset infinite;
    std::optional<std::vector<index_t>> scheduler;  // per state: row offset within its group
    SolveStats stats;                               // iterations accumulated over all solves
    std::vector<std::string> warnings;

    bool truth_at(index_t state) const { return truth.get(state); }
    V const& value_at(index_t state) const { return values[state]; }
    bool infinite_at(index_t state) const { return infinite.size() > 0 && infinite.get(state); }
};

/// Model checker for one model. Properties are evaluated per state; nested
/// threshold operators are checked bottom-up and memoized. `valuations` and
/// `constants` (both optional) resolve variable references in state formulas
/// and in bound/threshold expressions.
template <typename V>
class Checker {
  public:
    explicit Checker(Model<V> const& model, CheckOptions options = {},
                     StateValuations const* valuations = nullptr,
                     std::map<std::string, Value> const* constants = nullptr)
        : model_(model),
          options_(std::move(options)),
          valuations_(valuations),
          backward_(model.matrix, model.grouping) {
        if (constants) constants_ = *constants;
    }

    CheckResult<V> check(Property const& property) {
        warnings_.clear();
        stats_ = SolveStats{};
        operator_memo_.clear();

        CheckResult<V> result;
        Expr const& formula = *property.formula;
        if (formula.node == Expr::Node::Operator) {
            Quant q = compute_operator(*formula.op);
            result.values = std::move(q.values);
            result.infinite = std::move(q.infinite);
            result.scheduler = std::move(q.scheduler);
            if (!formula.op->bound.is_query()) {
                result.is_boolean = true;
                result.truth = threshold_truth(*formula.op, result.values, result.infinite);
            }
        } else {
            result.is_boolean = true;
            result.truth = eval_states(formula);
        }
        result.stats = stats_;
        result.warnings = warnings_;
        return result;
    }

    /// Long-run average of an arbitrary per-state quantity on a DTMC/CTMC
    /// (time-weighted for rate models). The property grammar only produces
    /// 0/1 indicator vectors, but reward vectors work the same way.
    std::vector<V> long_run_average(std::vector<V> const& state_values) {
        if (is_nondeterministic(model_.kind))
            throw CheckError("long_run_average needs a deterministic model");
        return lra_deterministic(state_values).values;
    }

    std::vector<std::string> const& warnings() const { return warnings_; }

  private:
    struct Quant {
        std::vector<V> values;
        Bitset infinite;
        std::optional<std::vector<index_t>> scheduler;
    };

    Model<V> const& model_;
    CheckOptions options_;
    StateValuations const* valuations_;
    std::map<std::string, Value> constants_;
    BackwardTransitions backward_;
    std::optional<SparseMatrix<V>> embedded_;  // CTMC jump chain, built on demand
    std::unordered_map<Expr const*, Bitset> operator_memo_;
    std::vector<std::string> warnings_;
    SolveStats stats_;

    index_t num_states() const { return model_.num_states(); }

    // -- plumbing ----------------------------------------------------------

    SolveOptions linear_options() const {
        SolveOptions o;
        o.method = options_.linear_method;
        // Iterative stopping criteria watch the change between iterates,
        // which undershoots the true error on slowly mixing systems; solving
        // two orders tighter keeps the result near the requested precision.
        o.precision = options_.precision * 1e-2;
        o.relative = options_.relative;
        o.max_iterations = options_.max_iterations;
        return o;
    }

    SolveOptions bellman_options() const {
        SolveOptions o = linear_options();
        o.method = options_.bellman_method;
        return o;
    }

    void absorb(SolveStats const& s) {
        stats_.iterations += s.iterations;
        if (!s.method.empty()) stats_.method = s.method;
    }

    void warn(std::string message) {
        if (std::find(warnings_.begin(), warnings_.end(), message) == warnings_.end())
            warnings_.push_back(std::move(message));
    }

    /// Clamps float probabilities into [0, 1]; excursions beyond harmless
    /// round-off are reported.
    void clamp_unit(std::vector<V>& x) {
        if constexpr (!ValueTraits<V>::is_exact) {
            double worst = 0.0;
            for (auto& v : x) {
                if (v < 0.0) {
                    worst = std::max(worst, -v);
                    v = 0.0;
                } else if (v > 1.0) {
                    worst = std::max(worst, v - 1.0);
                    v = 1.0;
                }
            }
            if (worst > 1e-10)
                warn("numeric drift: a probability left [0,1] by " + std::to_string(worst));
        }
    }

    Value eval_constant(Expr const& e) const {
        EvalEnv env;
        env.named = &constants_;
        return evaluate(e, env);
    }

    V threshold_value(OperatorBound const& bound) const {
        return ValueTraits<V>::from_rational(eval_constant(*bound.threshold).to_rational());
    }

    static bool compare(V const& value, BoundComparison cmp, V const& threshold) {
        switch (cmp) {
            case BoundComparison::Less: return value < threshold;
            case BoundComparison::LessEq: return value <= threshold;
            case BoundComparison::Greater: return value > threshold;
            case BoundComparison::GreaterEq: return value >= threshold;
        }
        return false;
    }

    Bitset threshold_truth(OperatorFormula const& op, std::vector<V> const& values,
                           Bitset const& infinite) {
        V threshold = threshold_value(op.bound);
        BoundComparison cmp = *op.bound.comparison;
        Bitset truth(num_states());
        for (index_t s = 0; s < num_states(); ++s) {
            bool sat;
            if (infinite.size() > 0 && infinite.get(s))
                sat = cmp == BoundComparison::Greater || cmp == BoundComparison::GreaterEq;
            else
                sat = compare(values[s], cmp, threshold);
            truth.set(s, sat);
        }
        return truth;
    }

    // -- state formula evaluation ------------------------------------------

    /// Checks every operator node inside `e` (not descending into operator
    /// bodies; those recurse through their own computation) and memoizes the
    /// per-state truth.
    void resolve_operators(Expr const& e) {
        if (e.node == Expr::Node::Operator) {
            if (operator_memo_.count(&e)) return;
            if (e.op->bound.is_query())
                throw CheckError("a value query (=?) is only allowed at the outermost operator");
            Quant q = compute_operator(*e.op);
            operator_memo_.emplace(&e, threshold_truth(*e.op, q.values, q.infinite));
            return;
        }
        for (auto const& child : e.children)
            if (child) resolve_operators(*child);
    }

    Bitset eval_states(Expr const& e) {
        resolve_operators(e);

        index_t current = 0;
        EvalEnv env;
        std::map<std::string, Value> named = constants_;
        env.named = &named;
        env.special = [&](Expr const& x) -> Value {
            if (x.node == Expr::Node::Label)
                return Value(model_.labeling.states(x.name).get(current));
            return Value(operator_memo_.at(&x).get(current));
        };

        auto const* layout = valuations_ ? &valuations_->layout() : nullptr;
        Bitset out(num_states());
        for (index_t s = 0; s < num_states(); ++s) {
            if (layout)
                for (std::size_t slot = 0; slot < layout->size(); ++slot)
                    named.insert_or_assign((*layout)[slot].name, valuations_->value(s, slot));
            current = s;
            out.set(s, evaluate(e, env).as_bool());
        }
        return out;
    }

    // -- operator dispatch -------------------------------------------------

    std::optional<OptimizationDirection> resolve_direction(OperatorFormula const& op) {
        std::optional<OptimizationDirection> dir = op.direction;
        if (is_nondeterministic(model_.kind)) {
            if (!dir)
                throw CheckError(
                    "the model is nondeterministic; annotate the operator with min or max");
            return dir;
        }
        if (dir) {
            if (!options_.allow_direction_on_deterministic)
                throw CheckError("min/max directions only apply to nondeterministic models");
            warn("ignoring the direction annotation: the model has no nondeterminism");
            dir.reset();
        }
        return dir;
    }

    Quant compute_operator(OperatorFormula const& op) {
        auto dir = resolve_direction(op);
        switch (op.kind) {
            case PropOperatorKind::Probability: return probability(op, dir);
            case PropOperatorKind::Reward: return reward(op, dir);
            case PropOperatorKind::LongRunAverage:
            case PropOperatorKind::SteadyState: return long_run(op, dir);
        }
        throw CheckError("unsupported operator");
    }

    // -- probabilities -----------------------------------------------------

    Quant probability(OperatorFormula const& op, std::optional<OptimizationDirection> dir) {
        PathFormula const& path = *op.path;
        if (path.condition) return conditional(path, *path.condition);

        switch (path.kind) {
            case PathKind::Next: {
                Bitset psi = eval_states(*path.right);
                return next_step(psi, dir);
            }
            case PathKind::Until: {
                Bitset phi = eval_states(*path.left);
                Bitset psi = eval_states(*path.right);
                return until(phi, psi, path.upper_bound.get(), dir);
            }
            case PathKind::Globally: {
                // P(G phi) = 1 - P(F !phi); the direction flips through the dual.
                Bitset not_phi = eval_states(*path.right).complement();
                Quant dual = until(Bitset(num_states(), true), not_phi, path.upper_bound.get(),
                                   flip(dir));
                return one_minus(std::move(dual));
            }
            case PathKind::WeakUntil: {
                // phi W psi = !((phi & !psi) U (!phi & !psi)).
                Bitset phi = eval_states(*path.left);
                Bitset psi = eval_states(*path.right);
                Quant dual = until(phi - psi, (phi | psi).complement(), nullptr, flip(dir));
                return one_minus(std::move(dual));
            }
        }
        throw CheckError("unsupported path formula");
    }

    static std::optional<OptimizationDirection> flip(std::optional<OptimizationDirection> dir) {
        if (!dir) return dir;
        return *dir == OptimizationDirection::Max ? OptimizationDirection::Min
                                                  : OptimizationDirection::Max;
    }

    Quant one_minus(Quant q) {
        for (auto& v : q.values) v = ValueTraits<V>::one() - v;
        clamp_unit(q.values);
        return q;
    }

    /// The one-row-per-state jump chain of a CTMC (rates divided by the exit
    /// rate; rateless states turn into self-loops).
    SparseMatrix<V> const& embedded() {
        if (!embedded_) {
            MatrixBuilder<V> b(num_states(), num_states());
            for (index_t s = 0; s < num_states(); ++s) {
                if (ValueTraits<V>::is_zero(model_.exit_rates[s])) {
                    b.add(s, s, ValueTraits<V>::one());
                    continue;
                }
                for (index_t e = model_.matrix.row_begin(s); e < model_.matrix.row_end(s); ++e)
                    b.add(s, model_.matrix.col(e), model_.matrix.value(e) / model_.exit_rates[s]);
            }
            embedded_ = b.build();
        }
        return *embedded_;
    }

    SparseMatrix<V> const& probability_matrix() {
        return model_.kind == ModelKind::Ctmc ? embedded() : model_.matrix;
    }

    Quant next_step(Bitset const& psi, std::optional<OptimizationDirection> dir) {
        if (model_.kind == ModelKind::Ma)
            throw CheckError("the next operator is not supported on Markov automata");
        std::vector<V> indicator(num_states(), ValueTraits<V>::zero());
        for (index_t s = 0; s < num_states(); ++s)
            if (psi.get(s)) indicator[s] = ValueTraits<V>::one();

        Quant q;
        if (dir) {
            auto [values, choices] =
                multiply_and_reduce(model_.matrix, model_.grouping, indicator, *dir);
            q.values = std::move(values);
            if (options_.produce_scheduler) q.scheduler = std::move(choices);
        } else {
            q.values = multiply(probability_matrix(), indicator);
        }
        clamp_unit(q.values);
        return q;
    }

    /// Evaluates a discrete step bound to a machine integer.
    std::uint64_t step_bound(Expr const& bound) const {
        Value v = eval_constant(bound);
        if (!v.is_int()) throw CheckError("step bounds must be nonnegative integers");
        Integer const& k = v.as_int();
        if (k < 0) throw CheckError("step bounds must be nonnegative integers");
        if (!mpz_fits_ulong_p(k.get_mpz_t())) throw CheckError("step bound is too large");
        return k.get_ui();
    }

    double time_bound(Expr const& bound) const {
        Rational t = eval_constant(bound).to_rational();
        if (t < 0) throw CheckError("time bounds must be nonnegative");
        return t.get_d();
    }

    Quant until(Bitset const& phi, Bitset const& psi, Expr const* upper,
                std::optional<OptimizationDirection> dir) {
        if (upper) {
            if (model_.kind == ModelKind::Ma)
                throw CheckError("time-bounded operators are not supported on Markov automata");
            if (model_.kind == ModelKind::Ctmc) return ctmc_bounded_until(phi, psi, time_bound(*upper));
            return bounded_until(phi, psi, step_bound(*upper), dir);
        }
        if (dir) return mdp_until(phi, psi, *dir);
        Quant q;
        q.values = chain_until(probability_matrix(), phi, psi);
        return q;
    }

    /// Unbounded until on an arbitrary one-row-per-state stochastic matrix:
    /// qualitative precomputation, then a linear solve on the undecided part.
    std::vector<V> chain_until(SparseMatrix<V> const& chain, Bitset const& phi, Bitset const& psi) {
        RowGrouping trivial = RowGrouping::trivial(chain.num_rows());
        BackwardTransitions back(chain, trivial);
        Bitset p0 = prob0(back, phi, psi);
        Bitset p1 = prob1(back, phi, psi, p0);

        index_t n = chain.num_rows();
        std::vector<V> values(n, ValueTraits<V>::zero());
        for (index_t s = 0; s < n; ++s)
            if (p1.get(s)) values[s] = ValueTraits<V>::one();

        Bitset maybe = (p0 | p1).complement();
        if (maybe.any()) {
            Submatrix<V> sub = submatrix(chain, trivial, maybe);
            std::vector<V> b(sub.matrix.num_rows(), ValueTraits<V>::zero());
            for (index_t i = 0; i < sub.matrix.num_rows(); ++i) {
                index_t old_s = sub.new_to_old_state[i];
                for (index_t e = chain.row_begin(old_s); e < chain.row_end(old_s); ++e)
                    if (p1.get(chain.col(e))) b[i] += chain.value(e);
            }
            auto solved = solve_linear(sub.matrix, b, linear_options());
            absorb(solved.stats);
            for (index_t i = 0; i < sub.matrix.num_rows(); ++i)
                values[sub.new_to_old_state[i]] = solved.values[i];
        }
        clamp_unit(values);
        return values;
    }

    /// Step-bounded until by backward sweeps (deterministic models).
    Quant bounded_until(Bitset const& phi, Bitset const& psi, std::uint64_t steps,
                        std::optional<OptimizationDirection> dir) {
        std::vector<V> x(num_states(), ValueTraits<V>::zero());
        for (index_t s = 0; s < num_states(); ++s)
            if (psi.get(s)) x[s] = ValueTraits<V>::one();

        for (std::uint64_t k = 0; k < steps; ++k) {
            std::vector<V> next;
            if (dir)
                next = multiply_and_reduce(model_.matrix, model_.grouping, x, *dir).first;
            else
                next = multiply(probability_matrix(), x);
            for (index_t s = 0; s < num_states(); ++s) {
                if (psi.get(s))
                    next[s] = ValueTraits<V>::one();
                else if (!phi.get(s))
                    next[s] = ValueTraits<V>::zero();
            }
            x = std::move(next);
        }
        Quant q;
        q.values = std::move(x);
        clamp_unit(q.values);
        stats_.iterations += steps;
        return q;
    }

    /// Time-bounded until on a CTMC via uniformization: make psi and the
    /// failure region absorbing, discretize with a Poisson-weighted sum of
    /// powers of the uniformized chain.
    Quant ctmc_bounded_until(Bitset const& phi, Bitset const& psi, double t) {
        if constexpr (ValueTraits<V>::is_exact) {
            throw CheckError("exact arithmetic does not support time-bounded operators");
        } else {
            index_t n = num_states();
            Bitset absorbing = psi | (phi | psi).complement();

            double max_rate = 0.0;
            for (index_t s = 0; s < n; ++s)
                if (!absorbing.get(s)) max_rate = std::max(max_rate, model_.exit_rates[s]);

            std::vector<V> x(n, ValueTraits<V>::zero());
            for (index_t s = 0; s < n; ++s)
                if (psi.get(s)) x[s] = ValueTraits<V>::one();
            Quant q;
            if (max_rate == 0.0 || t == 0.0) {  // nothing moves before the deadline
                q.values = std::move(x);
                return q;
            }

            double uniform_rate = 1.02 * max_rate;
            MatrixBuilder<V> pb(n, n);
            for (index_t s = 0; s < n; ++s) {
                if (absorbing.get(s)) {
                    pb.add(s, s, 1.0);
                    continue;
                }
                pb.add(s, s, 1.0 - model_.exit_rates[s] / uniform_rate);
                for (index_t e = model_.matrix.row_begin(s); e < model_.matrix.row_end(s); ++e)
                    pb.add(s, model_.matrix.col(e), model_.matrix.value(e) / uniform_rate);
            }
            SparseMatrix<V> P = pb.build();

            PoissonWindow window = poisson_window(uniform_rate * t, options_.precision);
            std::vector<V> result(n, 0.0);
            for (std::uint64_t k = 0; k <= window.right; ++k) {
                if (k >= window.left) {
                    double weight = window.weight(k) / window.total_weight;
                    for (index_t s = 0; s < n; ++s) result[s] += weight * x[s];
                }
                if (k < window.right) x = multiply(P, x);
            }
            stats_.iterations += window.right;
            clamp_unit(result);
            q.values = std::move(result);
            return q;
        }
    }

    // -- MDP until ---------------------------------------------------------

    Quant mdp_until(Bitset const& phi, Bitset const& psi, OptimizationDirection dir) {
        index_t n = num_states();
        Bitset p0, p1;
        std::vector<index_t> boundary_rows(n, 0);  // witness/avoidance offsets
        if (dir == OptimizationDirection::Max) {
            p0 = prob0_max(backward_, phi, psi);
            p1 = prob1_max(model_.matrix, model_.grouping, phi, psi,
                           options_.produce_scheduler ? &boundary_rows : nullptr);
        } else {
            p0 = prob0_min(model_.matrix, model_.grouping, phi, psi,
                           options_.produce_scheduler ? &boundary_rows : nullptr);
            p1 = prob1_min(model_.matrix, model_.grouping, backward_, phi, psi);
        }

        Quant q;
        q.values.assign(n, ValueTraits<V>::zero());
        for (index_t s = 0; s < n; ++s)
            if (p1.get(s)) q.values[s] = ValueTraits<V>::one();
        if (options_.produce_scheduler) {
            // On decided states the recorded rows matter for the optimizing
            // side (reaching for Max on p1, avoiding for Min on p0); the rest
            // are arbitrary and keep offset 0.
            q.scheduler = std::vector<index_t>(n, 0);
            Bitset const& decided = dir == OptimizationDirection::Max ? p1 : p0;
            for (index_t s = 0; s < n; ++s)
                if (decided.get(s)) (*q.scheduler)[s] = boundary_rows[s];
        }

        Bitset maybe = (p0 | p1).complement();
        if (maybe.any()) {
            Submatrix<V> sub = submatrix(model_.matrix, model_.grouping, maybe);
            std::vector<V> b(sub.matrix.num_rows(), ValueTraits<V>::zero());
            for (index_t r = 0; r < sub.matrix.num_rows(); ++r) {
                index_t old_row = sub.new_to_old_row[r];
                for (index_t e = model_.matrix.row_begin(old_row); e < model_.matrix.row_end(old_row); ++e)
                    if (p1.get(model_.matrix.col(e))) b[r] += model_.matrix.value(e);
            }
            auto solved = solve_bellman(sub.matrix, sub.grouping, b, dir, bellman_options());
            absorb(solved.stats);
            for (index_t i = 0; i < sub.grouping.num_states(); ++i) {
                q.values[sub.new_to_old_state[i]] = solved.values[i];
                if (q.scheduler) (*q.scheduler)[sub.new_to_old_state[i]] = solved.choices[i];
            }
        }
        clamp_unit(q.values);
        return q;
    }

    // -- reward operators --------------------------------------------------

    Quant reward(OperatorFormula const& op, std::optional<OptimizationDirection> dir) {
        if (model_.kind == ModelKind::Ma) return ma_expected_time(op, dir);

        RewardModel<V> const& rm = model_.reward_model(op.reward_model);
        switch (op.reward_path.kind) {
            case RewardPath::Kind::Reach: {
                Bitset goal = eval_states(*op.reward_path.target);
                if (model_.kind == ModelKind::Mdp) {
                    std::vector<V> cost(model_.num_rows());
                    for (index_t r = 0; r < model_.num_rows(); ++r)
                        cost[r] = rm.state_reward(model_.grouping.state_of_row(r)) + rm.action_reward(r);
                    return mdp_reach_reward(goal, cost, *dir);
                }
                if (model_.kind == ModelKind::Ctmc) {
                    std::vector<V> cost(num_states());
                    for (index_t s = 0; s < num_states(); ++s) {
                        cost[s] = rm.action_reward(s);
                        if (!ValueTraits<V>::is_zero(model_.exit_rates[s]))
                            cost[s] += rm.state_reward(s) / model_.exit_rates[s];
                    }
                    return chain_reach_reward(embedded(), goal, cost);
                }
                std::vector<V> cost(num_states());
                for (index_t s = 0; s < num_states(); ++s)
                    cost[s] = rm.state_reward(s) + rm.action_reward(s);
                return chain_reach_reward(model_.matrix, goal, cost);
            }
            case RewardPath::Kind::Cumulative: {
                if (is_continuous_time(model_.kind))
                    throw CheckError("cumulative reward bounds are only supported in discrete time");
                return cumulative_reward(rm, step_bound(*op.reward_path.bound), dir);
            }
            case RewardPath::Kind::Instant: {
                if (is_continuous_time(model_.kind))
                    throw CheckError("instant rewards are only supported in discrete time");
                return instant_reward(rm, step_bound(*op.reward_path.bound), dir);
            }
        }
        throw CheckError("unsupported reward operator");
    }

    /// Expected reward until reaching `goal` on a one-row-per-state chain.
    /// States that miss the goal with positive probability diverge.
    Quant chain_reach_reward(SparseMatrix<V> const& chain, Bitset const& goal,
                             std::vector<V> const& cost) {
        RowGrouping trivial = RowGrouping::trivial(chain.num_rows());
        BackwardTransitions back(chain, trivial);
        index_t n = chain.num_rows();

        Bitset all(n, true);
        Bitset p0 = prob0(back, all, goal);
        Bitset certain = prob1(back, all, goal, p0);

        Quant q;
        q.values.assign(n, ValueTraits<V>::zero());
        q.infinite = certain.complement();
        if constexpr (!ValueTraits<V>::is_exact) {
            for (index_t s = 0; s < n; ++s)
                if (q.infinite.get(s)) q.values[s] = std::numeric_limits<double>::infinity();
        }

        Bitset maybe = certain - goal;
        if (maybe.any()) {
            Submatrix<V> sub = submatrix(chain, trivial, maybe);
            std::vector<V> b(sub.matrix.num_rows());
            for (index_t i = 0; i < sub.matrix.num_rows(); ++i)
                b[i] = cost[sub.new_to_old_state[i]];
            auto solved = solve_linear(sub.matrix, b, linear_options());
            absorb(solved.stats);
            for (index_t i = 0; i < sub.matrix.num_rows(); ++i)
                q.values[sub.new_to_old_state[i]] = solved.values[i];
        }
        return q;
    }

    Quant cumulative_reward(RewardModel<V> const& rm, std::uint64_t steps,
                            std::optional<OptimizationDirection> dir) {
        std::vector<V> cost(model_.num_rows());
        for (index_t r = 0; r < model_.num_rows(); ++r)
            cost[r] = rm.state_reward(model_.grouping.state_of_row(r)) + rm.action_reward(r);

        std::vector<V> x(num_states(), ValueTraits<V>::zero());
        for (std::uint64_t k = 0; k < steps; ++k) {
            if (dir) {
                std::vector<V> row_values(model_.num_rows());
                for (index_t r = 0; r < model_.num_rows(); ++r) {
                    V acc = cost[r];
                    for (index_t e = model_.matrix.row_begin(r); e < model_.matrix.row_end(r); ++e)
                        acc += model_.matrix.value(e) * x[model_.matrix.col(e)];
                    row_values[r] = acc;
                }
                x = reduce_rows(row_values, *dir).first;
            } else {
                std::vector<V> next = multiply(model_.matrix, x);
                for (index_t s = 0; s < num_states(); ++s) next[s] += cost[s];
                x = std::move(next);
            }
        }
        stats_.iterations += steps;
        Quant q;
        q.values = std::move(x);
        return q;
    }

    Quant instant_reward(RewardModel<V> const& rm, std::uint64_t steps,
                         std::optional<OptimizationDirection> dir) {
        std::vector<V> x(num_states());
        for (index_t s = 0; s < num_states(); ++s) x[s] = rm.state_reward(s);
        for (std::uint64_t k = 0; k < steps; ++k) {
            if (dir)
                x = multiply_and_reduce(model_.matrix, model_.grouping, x, *dir).first;
            else
                x = multiply(model_.matrix, x);
        }
        stats_.iterations += steps;
        Quant q;
        q.values = std::move(x);
        return q;
    }

    std::pair<std::vector<V>, std::vector<index_t>> reduce_rows(std::vector<V> const& row_values,
                                                                OptimizationDirection dir) {
        index_t n = num_states();
        std::vector<V> values(n);
        std::vector<index_t> choices(n, 0);
        for (index_t s = 0; s < n; ++s) {
            index_t begin = model_.grouping.group_begin(s), end = model_.grouping.group_end(s);
            V best = row_values[begin];
            index_t off = 0;
            for (index_t r = begin + 1; r < end; ++r) {
                bool better =
                    dir == OptimizationDirection::Max ? row_values[r] > best : row_values[r] < best;
                if (better) {
                    best = row_values[r];
                    off = r - begin;
                }
            }
            values[s] = best;
            choices[s] = off;
        }
        return {std::move(values), std::move(choices)};
    }

    Quant ma_expected_time(OperatorFormula const& op, std::optional<OptimizationDirection> dir) {
        if (!op.reward_model.empty())
            throw CheckError("Markov automata support only the unnamed expected-time reward");
        if (op.reward_path.kind != RewardPath::Kind::Reach)
            throw CheckError("Markov automata rewards are limited to expected time to a goal");
        Bitset goal = eval_states(*op.reward_path.target);
        std::vector<V> cost(model_.num_rows(), ValueTraits<V>::zero());
        for (index_t s = 0; s < num_states(); ++s)
            if (model_.markovian_states.get(s))
                cost[model_.grouping.group_begin(s)] = ValueTraits<V>::one() / model_.exit_rates[s];
        return mdp_reach_reward(goal, cost, *dir);
    }

    // -- MDP expected rewards ----------------------------------------------

    /// Expected total reward until `goal` on an MDP; `cost` is per row. A
    /// path that never reaches the goal counts as infinite reward, so Max
    /// diverges where some scheduler misses the goal and Min diverges where
    /// all of them do.
    Quant mdp_reach_reward(Bitset const& goal, std::vector<V> const& cost,
                           OptimizationDirection dir) {
        index_t n = num_states();
        Bitset all(n, true);

        Quant q;
        q.values.assign(n, ValueTraits<V>::zero());
        if (dir == OptimizationDirection::Max) {
            Bitset certain = prob1_min(model_.matrix, model_.grouping, backward_, all, goal);
            q.infinite = certain.complement();
            mark_infinite(q);
            Bitset maybe = certain - goal;
            if (options_.produce_scheduler) q.scheduler = std::vector<index_t>(n, 0);
            if (maybe.any()) {
                // The finite region is closed under every row and free of end
                // components, so a plain Bellman solve applies.
                Submatrix<V> sub = submatrix(model_.matrix, model_.grouping, maybe);
                std::vector<V> b(sub.matrix.num_rows());
                for (index_t r = 0; r < sub.matrix.num_rows(); ++r) b[r] = cost[sub.new_to_old_row[r]];
                auto solved = solve_bellman(sub.matrix, sub.grouping, b, dir, bellman_options());
                absorb(solved.stats);
                for (index_t i = 0; i < sub.grouping.num_states(); ++i) {
                    q.values[sub.new_to_old_state[i]] = solved.values[i];
                    if (q.scheduler) (*q.scheduler)[sub.new_to_old_state[i]] = solved.choices[i];
                }
            }
            if (q.scheduler && q.infinite.any()) {
                // The reported infinity is witnessed by a scheduler that
                // misses the goal with positive probability: the one
                // minimizing the reachability probability.
                Quant min_reach = mdp_until(all, goal, OptimizationDirection::Min);
                for (index_t s = 0; s < n; ++s)
                    if (q.infinite.get(s)) (*q.scheduler)[s] = (*min_reach.scheduler)[s];
            }
            return q;
        }
        return mdp_min_reach_reward(goal, cost);
    }

    void mark_infinite(Quant& q) {
        if constexpr (!ValueTraits<V>::is_exact) {
            for (index_t s = 0; s < num_states(); ++s)
                if (q.infinite.get(s)) q.values[s] = std::numeric_limits<double>::infinity();
        }
    }

    /// Min expected reward: restrict to rows that stay inside the finite
    /// region, collapse zero-cost end components (waiting there is never
    /// optimal since not reaching the goal costs infinity), and solve the
    /// resulting component-free system with a properly seeded policy.
    Quant mdp_min_reach_reward(Bitset const& goal, std::vector<V> const& cost) {
        index_t n = num_states();
        Bitset all(n, true);
        std::vector<index_t> witness_rows(n, 0);
        Bitset certain = prob1_max(model_.matrix, model_.grouping, all, goal, &witness_rows);

        Quant q;
        q.values.assign(n, ValueTraits<V>::zero());
        q.infinite = certain.complement();
        mark_infinite(q);
        if (options_.produce_scheduler) q.scheduler = std::vector<index_t>(n, 0);

        Bitset region = certain - goal;
        if (!region.any()) return q;

        // Negative costs could make cycling profitable, which the component
        // collapse below does not model.
        for (index_t r = 0; r < model_.num_rows(); ++r)
            if (cost[r] < ValueTraits<V>::zero())
                throw CheckError("minimal expected rewards require nonnegative rewards");

        // Rows of region states whose successors stay within reach of the
        // goal; at least the reachability witness row always qualifies.
        Bitset kept_rows(model_.num_rows());
        for (index_t s = region.find_first(); s != Bitset::npos; s = region.find_next(s))
            for (index_t r = model_.grouping.group_begin(s); r < model_.grouping.group_end(s); ++r) {
                bool ok = true;
                for (index_t e = model_.matrix.row_begin(r); e < model_.matrix.row_end(r); ++e)
                    if (!certain.get(model_.matrix.col(e))) {
                        ok = false;
                        break;
                    }
                kept_rows.set(r, ok);
            }

        // Zero-cost substructure: prune to rows that keep all mass among
        // states still owning such a row, then take its end components.
        Bitset zero_states(n);
        Bitset zero_rows(model_.num_rows());
        for (index_t s = region.find_first(); s != Bitset::npos; s = region.find_next(s))
            for (index_t r = model_.grouping.group_begin(s); r < model_.grouping.group_end(s); ++r)
                if (kept_rows.get(r) && ValueTraits<V>::is_zero(cost[r])) {
                    zero_rows.set(r);
                    zero_states.set(s);
                }
        for (bool changed = true; changed;) {
            changed = false;
            for (index_t s = zero_states.find_first(); s != Bitset::npos; s = zero_states.find_next(s)) {
                bool any_row = false;
                for (index_t r = model_.grouping.group_begin(s); r < model_.grouping.group_end(s); ++r) {
                    if (!zero_rows.get(r)) continue;
                    bool stays = true;
                    for (index_t e = model_.matrix.row_begin(r); e < model_.matrix.row_end(r); ++e)
                        if (!zero_states.get(model_.matrix.col(e))) {
                            stays = false;
                            break;
                        }
                    if (stays)
                        any_row = true;
                    else {
                        zero_rows.set(r, false);
                        changed = true;
                    }
                }
                if (!any_row) {
                    zero_states.set(s, false);
                    changed = true;
                }
            }
        }

        std::vector<EndComponent> components;
        Submatrix<V> zero_sub;
        if (zero_states.any()) {
            zero_sub = submatrix(model_.matrix, model_.grouping, zero_states, &zero_rows);
            for (auto& ec : mecs(zero_sub.matrix, zero_sub.grouping)) {
                EndComponent mapped;
                for (std::size_t i = 0; i < ec.states.size(); ++i) {
                    index_t local = ec.states[i];
                    mapped.states.push_back(zero_sub.new_to_old_state[local]);
                    // Translate choice offsets back to offsets within the
                    // original group.
                    std::vector<index_t> offsets;
                    for (index_t off : ec.choices[i]) {
                        index_t orig_row = zero_sub.new_to_old_row[zero_sub.grouping.group_begin(local) + off];
                        offsets.push_back(orig_row - model_.grouping.group_begin(mapped.states.back()));
                    }
                    mapped.choices.push_back(std::move(offsets));
                }
                components.push_back(std::move(mapped));
            }
        }

        // Quotient state space: region states not merged into a component,
        // plus one node per component.
        std::vector<index_t> state_to_quotient(n, Submatrix<V>::npos);
        std::vector<index_t> quotient_to_state;
        std::vector<index_t> component_of(n, Submatrix<V>::npos);
        for (std::size_t c = 0; c < components.size(); ++c)
            for (index_t s : components[c].states) component_of[s] = static_cast<index_t>(c);
        for (index_t s = region.find_first(); s != Bitset::npos; s = region.find_next(s))
            if (component_of[s] == Submatrix<V>::npos) {
                state_to_quotient[s] = static_cast<index_t>(quotient_to_state.size());
                quotient_to_state.push_back(s);
            }
        index_t plain_states = static_cast<index_t>(quotient_to_state.size());
        std::vector<index_t> component_node(components.size());
        for (std::size_t c = 0; c < components.size(); ++c) {
            component_node[c] = plain_states + static_cast<index_t>(c);
            for (index_t s : components[c].states) state_to_quotient[s] = component_node[c];
        }
        index_t qn = plain_states + static_cast<index_t>(components.size());

        // Quotient rows. Component nodes take their members' rows except the
        // zero-cost ones that stay inside the component.
        RowGrouping qgrouping;
        qgrouping.group_offsets.assign(1, 0);
        MatrixBuilder<V> qb(model_.num_rows(), qn);  // shrunk to the real row count below
        std::vector<V> qcost;
        std::vector<index_t> qrow_to_row;
        std::vector<char> qrow_hits_goal;
        index_t qrows = 0;

        auto add_quotient_row = [&](index_t orig_row) {
            bool hits_goal = false;
            for (index_t e = model_.matrix.row_begin(orig_row); e < model_.matrix.row_end(orig_row); ++e) {
                index_t t = model_.matrix.col(e);
                if (goal.get(t)) {
                    hits_goal = true;
                    continue;  // goal contributes value zero
                }
                qb.add(qrows, state_to_quotient[t], model_.matrix.value(e));
            }
            qcost.push_back(cost[orig_row]);
            qrow_to_row.push_back(orig_row);
            qrow_hits_goal.push_back(hits_goal ? 1 : 0);
            ++qrows;
        };

        for (index_t i = 0; i < plain_states; ++i) {
            index_t s = quotient_to_state[i];
            for (index_t r = model_.grouping.group_begin(s); r < model_.grouping.group_end(s); ++r)
                if (kept_rows.get(r)) add_quotient_row(r);
            qgrouping.group_offsets.push_back(qrows);
        }
        for (std::size_t c = 0; c < components.size(); ++c) {
            EndComponent const& ec = components[c];
            for (std::size_t i = 0; i < ec.states.size(); ++i) {
                index_t s = ec.states[i];
                for (index_t r = model_.grouping.group_begin(s); r < model_.grouping.group_end(s); ++r) {
                    if (!kept_rows.get(r)) continue;
                    index_t off = r - model_.grouping.group_begin(s);
                    if (std::find(ec.choices[i].begin(), ec.choices[i].end(), off) != ec.choices[i].end())
                        continue;  // internal waiting row
                    add_quotient_row(r);
                }
            }
            qgrouping.group_offsets.push_back(qrows);
        }

        qb.resize(qrows, qn);
        SparseMatrix<V> qmatrix = qb.build();

        // Proper starting policy: pick rows by backward distance to the goal
        // so policy evaluation never hits a reward-accumulating cycle.
        std::vector<index_t> initial_policy(qn, Submatrix<V>::npos);
        {
            std::vector<char> settled(qn, 0);
            bool progress = true;
            while (progress) {
                progress = false;
                for (index_t s = 0; s < qn; ++s) {
                    if (settled[s]) continue;
                    for (index_t r = qgrouping.group_begin(s); r < qgrouping.group_end(s); ++r) {
                        bool good = qrow_hits_goal[r] != 0;
                        for (index_t e = qmatrix.row_begin(r); !good && e < qmatrix.row_end(r); ++e)
                            if (settled[qmatrix.col(e)]) good = true;
                        if (good) {
                            initial_policy[s] = r - qgrouping.group_begin(s);
                            settled[s] = 1;
                            progress = true;
                            break;
                        }
                    }
                }
            }
            for (index_t s = 0; s < qn; ++s)
                if (!settled[s]) throw SolverError("expected reward: no proper policy found");
        }

        auto solved = solve_bellman(qmatrix, qgrouping, qcost, OptimizationDirection::Min,
                                    bellman_options(), &initial_policy);
        absorb(solved.stats);

        for (index_t i = 0; i < plain_states; ++i) q.values[quotient_to_state[i]] = solved.values[i];
        for (std::size_t c = 0; c < components.size(); ++c)
            for (index_t s : components[c].states) q.values[s] = solved.values[component_node[c]];

        if (q.scheduler) {
            for (index_t i = 0; i < plain_states; ++i) {
                index_t s = quotient_to_state[i];
                index_t qrow = qgrouping.group_begin(i) + solved.choices[i];
                (*q.scheduler)[s] = qrow_to_row[qrow] - model_.grouping.group_begin(s);
            }
            for (std::size_t c = 0; c < components.size(); ++c) {
                EndComponent const& ec = components[c];
                index_t node = component_node[c];
                index_t qrow = qgrouping.group_begin(node) + solved.choices[node];
                index_t exit_row = qrow_to_row[qrow];
                index_t exit_state = model_.grouping.state_of_row(exit_row);
                (*q.scheduler)[exit_state] = exit_row - model_.grouping.group_begin(exit_state);

                // Everyone else drifts to the exit state through the waiting
                // rows, which cost nothing.
                Bitset members(n);
                for (index_t s : ec.states) members.set(s);
                Bitset target(n);
                target.set(exit_state);
                std::vector<index_t> member_index(n, 0);
                for (std::size_t i = 0; i < ec.states.size(); ++i) member_index[ec.states[i]] = static_cast<index_t>(i);
                std::vector<index_t> routed =
                    route_into(model_.matrix, model_.grouping, members, target, &ec.choices, &member_index);
                for (index_t s : ec.states)
                    if (s != exit_state) (*q.scheduler)[s] = routed[s];
            }
            // Divergence is certain here whatever the choice, so offsets on
            // infinite states stay arbitrary.
        }
        return q;
    }

    // -- long-run averages -------------------------------------------------

    Quant long_run(OperatorFormula const& op, std::optional<OptimizationDirection> dir) {
        if (model_.kind == ModelKind::Ma)
            throw CheckError("long-run operators are not supported on Markov automata");
        if (op.kind == PropOperatorKind::SteadyState && is_nondeterministic(model_.kind))
            throw CheckError("the steady-state operator needs a deterministic model");

        Bitset subject = eval_states(*op.state);
        std::vector<V> g(num_states(), ValueTraits<V>::zero());
        for (index_t s = 0; s < num_states(); ++s)
            if (subject.get(s)) g[s] = ValueTraits<V>::one();

        Quant q = dir ? mdp_lra(g, *dir) : lra_deterministic(g);
        clamp_unit(q.values);
        return q;
    }

    /// DTMC/CTMC long-run average of `g`: the gain of each bottom component
    /// under its stationary distribution, weighted by reachability.
    Quant lra_deterministic(std::vector<V> const& g) {
        index_t n = num_states();
        ComponentDecomposition comps = bsccs(model_.matrix, model_.grouping);

        Quant q;
        q.values.assign(n, ValueTraits<V>::zero());
        Bitset recurrent(n);
        for (auto const& comp : comps.components) {
            std::vector<V> pi = steady_state_bscc(
                model_.matrix, comp, model_.kind == ModelKind::Ctmc ? &model_.exit_rates : nullptr);
            V gain = ValueTraits<V>::zero();
            for (std::size_t i = 0; i < comp.size(); ++i) gain += pi[i] * g[comp[i]];
            for (index_t s : comp) {
                q.values[s] = gain;
                recurrent.set(s);
            }
        }

        Bitset transient = recurrent.complement();
        if (transient.any()) {
            SparseMatrix<V> const& chain = probability_matrix();
            RowGrouping trivial = RowGrouping::trivial(n);
            Submatrix<V> sub = submatrix(chain, trivial, transient);
            std::vector<V> b(sub.matrix.num_rows(), ValueTraits<V>::zero());
            for (index_t i = 0; i < sub.matrix.num_rows(); ++i) {
                index_t old_s = sub.new_to_old_state[i];
                for (index_t e = chain.row_begin(old_s); e < chain.row_end(old_s); ++e)
                    if (recurrent.get(chain.col(e))) b[i] += chain.value(e) * q.values[chain.col(e)];
            }
            auto solved = solve_linear(sub.matrix, b, linear_options());
            absorb(solved.stats);
            for (index_t i = 0; i < sub.matrix.num_rows(); ++i)
                q.values[sub.new_to_old_state[i]] = solved.values[i];
        }
        return q;
    }

    /// Optimal gain of one end component together with the rows realizing it:
    /// the members of the best closed class under the best internal policy,
    /// plus drift routing for the remaining members.
    struct ComponentPlan {
        V gain = ValueTraits<V>::zero();
        std::vector<index_t> rows;  // per member (parallel to ec.states): offset within group
    };

    ComponentPlan component_gain(EndComponent const& ec, std::vector<V> const& g,
                                 OptimizationDirection dir) {
        index_t m = static_cast<index_t>(ec.states.size());
        std::vector<index_t> member_index(num_states(), 0);
        for (index_t i = 0; i < m; ++i) member_index[ec.states[i]] = i;

        // Local matrix over member space, one row per internal choice.
        RowGrouping local;
        local.group_offsets.assign(1, 0);
        std::vector<index_t> local_row_offsets;  // offset within the original group
        index_t total_choices = 0;
        for (auto const& offs : ec.choices) total_choices += static_cast<index_t>(offs.size());
        MatrixBuilder<V> lb(total_choices, m);
        index_t lrows = 0;
        for (index_t i = 0; i < m; ++i) {
            index_t s = ec.states[i];
            for (index_t off : ec.choices[i]) {
                index_t r = model_.grouping.group_begin(s) + off;
                for (index_t e = model_.matrix.row_begin(r); e < model_.matrix.row_end(r); ++e)
                    lb.add(lrows, member_index[model_.matrix.col(e)], model_.matrix.value(e));
                local_row_offsets.push_back(off);
                ++lrows;
            }
            local.group_offsets.push_back(lrows);
        }
        SparseMatrix<V> lmatrix = lb.build();

        std::vector<V> lg(m);
        for (index_t i = 0; i < m; ++i) lg[i] = g[ec.states[i]];

        // The internal policy to evaluate: exact arithmetic enumerates all of
        // them, floating point takes the greedy policy of a converged
        // relative value iteration.
        ComponentPlan best;
        bool have_best = false;

        auto evaluate_policy_chain = [&](std::vector<index_t> const& pol) {
            MatrixBuilder<V> cb(m, m);
            for (index_t i = 0; i < m; ++i) {
                index_t r = pol[i];
                for (index_t e = lmatrix.row_begin(r); e < lmatrix.row_end(r); ++e)
                    cb.add(i, lmatrix.col(e), lmatrix.value(e));
            }
            SparseMatrix<V> chain = cb.build();
            ComponentDecomposition classes = bsccs(chain, RowGrouping::trivial(m));
            for (auto const& cls : classes.components) {
                std::vector<V> pi = stationary_distribution(chain, cls);
                V gain = ValueTraits<V>::zero();
                for (std::size_t i = 0; i < cls.size(); ++i) gain += pi[i] * lg[cls[i]];
                bool better = !have_best || (dir == OptimizationDirection::Max ? gain > best.gain
                                                                               : gain < best.gain);
                if (!better) continue;
                have_best = true;
                best.gain = gain;
                // Members of the winning class follow the policy; the rest
                // drift toward the class through any internal rows.
                best.rows.assign(m, Submatrix<V>::npos);
                Bitset members(num_states());
                for (index_t s : ec.states) members.set(s);
                Bitset target(num_states());
                for (index_t i : cls) {
                    best.rows[i] = local_row_offsets[pol[i]];
                    target.set(ec.states[i]);
                }
                std::vector<index_t> routed = route_into(model_.matrix, model_.grouping, members,
                                                         target, &ec.choices, &member_index);
                for (index_t i = 0; i < m; ++i)
                    if (best.rows[i] == Submatrix<V>::npos) best.rows[i] = routed[ec.states[i]];
            }
        };

        if constexpr (ValueTraits<V>::is_exact) {
            double combinations = 1;
            for (index_t i = 0; i < m; ++i) combinations *= static_cast<double>(local.group_size(i));
            if (combinations > 4096)
                throw SolverError(
                    "exact long-run analysis enumerates the component's policies and this component "
                    "is too large; use floating-point arithmetic");
            std::vector<index_t> current(m);
            for (index_t i = 0; i < m; ++i) current[i] = local.group_begin(i);
            while (true) {
                evaluate_policy_chain(current);
                index_t i = 0;
                for (; i < m; ++i) {
                    if (current[i] + 1 < local.group_end(i)) {
                        ++current[i];
                        break;
                    }
                    current[i] = local.group_begin(i);
                }
                if (i == m) break;
            }
        } else {
            // Relative value iteration with a damped (aperiodic) operator.
            double const damping = 0.9;
            std::vector<V> x(m, ValueTraits<V>::zero());
            std::vector<index_t> greedy(m, 0);
            for (std::uint64_t iter = 1;; ++iter) {
                if (iter > options_.max_iterations)
                    throw SolverError("long-run value iteration did not converge within " +
                                      std::to_string(options_.max_iterations) + " iterations");
                std::vector<V> next(m);
                for (index_t i = 0; i < m; ++i) {
                    bool first = true;
                    V bestv = ValueTraits<V>::zero();
                    for (index_t r = local.group_begin(i); r < local.group_end(i); ++r) {
                        V acc = ValueTraits<V>::zero();
                        for (index_t e = lmatrix.row_begin(r); e < lmatrix.row_end(r); ++e)
                            acc += lmatrix.value(e) * x[lmatrix.col(e)];
                        acc = damping * acc + (1.0 - damping) * x[i];
                        bool better = first || (dir == OptimizationDirection::Max ? acc > bestv
                                                                                  : acc < bestv);
                        if (better) {
                            bestv = acc;
                            greedy[i] = r;
                        }
                        first = false;
                    }
                    next[i] = lg[i] + bestv;
                }
                V lo = next[0] - x[0], hi = lo;
                for (index_t i = 1; i < m; ++i) {
                    V d = next[i] - x[i];
                    lo = std::min(lo, d);
                    hi = std::max(hi, d);
                }
                stats_.iterations += 1;
                V shift = next[0];
                for (index_t i = 0; i < m; ++i) next[i] -= shift;
                x = std::move(next);
                // The damped operator contracts the span; the undamped gain
                // is the span midpoint rescaled by the damping factor.
                if (hi - lo <= options_.precision * damping) break;
            }
            evaluate_policy_chain(greedy);
        }
        return best;
    }

    /// MDP long-run average: optimal gain per maximal end component, then a
    /// committed-versus-leave reachability problem on the component quotient.
    Quant mdp_lra(std::vector<V> const& g, OptimizationDirection dir) {
        index_t n = num_states();
        std::vector<EndComponent> components = mecs(model_.matrix, model_.grouping);

        std::vector<ComponentPlan> plans;
        plans.reserve(components.size());
        for (auto const& ec : components) plans.push_back(component_gain(ec, g, dir));

        // Quotient: plain states keep their rows; a component node gets its
        // members' outward rows plus one "commit" row absorbing with the
        // component's gain as reward.
        std::vector<index_t> state_to_quotient(n, Submatrix<V>::npos);
        std::vector<index_t> quotient_to_state;
        std::vector<index_t> component_of(n, Submatrix<V>::npos);
        for (std::size_t c = 0; c < components.size(); ++c)
            for (index_t s : components[c].states) component_of[s] = static_cast<index_t>(c);
        for (index_t s = 0; s < n; ++s)
            if (component_of[s] == Submatrix<V>::npos) {
                state_to_quotient[s] = static_cast<index_t>(quotient_to_state.size());
                quotient_to_state.push_back(s);
            }
        index_t plain_states = static_cast<index_t>(quotient_to_state.size());
        std::vector<index_t> component_node(components.size());
        for (std::size_t c = 0; c < components.size(); ++c) {
            component_node[c] = plain_states + static_cast<index_t>(c);
            for (index_t s : components[c].states) state_to_quotient[s] = component_node[c];
        }
        index_t qn = plain_states + static_cast<index_t>(components.size());

        RowGrouping qgrouping;
        qgrouping.group_offsets.assign(1, 0);
        MatrixBuilder<V> qb(model_.num_rows() + static_cast<index_t>(components.size()), qn);
        std::vector<V> qreward;
        std::vector<index_t> qrow_to_row;  // original row; npos for commit rows
        index_t qrows = 0;

        auto add_row = [&](index_t orig_row) {
            for (index_t e = model_.matrix.row_begin(orig_row); e < model_.matrix.row_end(orig_row); ++e)
                qb.add(qrows, state_to_quotient[model_.matrix.col(e)], model_.matrix.value(e));
            qreward.push_back(ValueTraits<V>::zero());
            qrow_to_row.push_back(orig_row);
            ++qrows;
        };

        for (index_t i = 0; i < plain_states; ++i) {
            index_t s = quotient_to_state[i];
            for (index_t r = model_.grouping.group_begin(s); r < model_.grouping.group_end(s); ++r)
                add_row(r);
            qgrouping.group_offsets.push_back(qrows);
        }
        for (std::size_t c = 0; c < components.size(); ++c) {
            EndComponent const& ec = components[c];
            for (std::size_t i = 0; i < ec.states.size(); ++i) {
                index_t s = ec.states[i];
                for (index_t r = model_.grouping.group_begin(s); r < model_.grouping.group_end(s); ++r) {
                    index_t off = r - model_.grouping.group_begin(s);
                    if (std::find(ec.choices[i].begin(), ec.choices[i].end(), off) != ec.choices[i].end())
                        continue;  // internal row: subsumed by committing
                    add_row(r);
                }
            }
            // Commit row: no successors, reward = the component's gain.
            qreward.push_back(plans[c].gain);
            qrow_to_row.push_back(Submatrix<V>::npos);
            ++qrows;
            qgrouping.group_offsets.push_back(qrows);
        }

        qb.resize(qrows, qn);
        SparseMatrix<V> qmatrix = qb.build();
        auto solved = solve_bellman(qmatrix, qgrouping, qreward, dir, bellman_options());
        absorb(solved.stats);

        Quant q;
        q.values.assign(n, ValueTraits<V>::zero());
        for (index_t i = 0; i < plain_states; ++i) q.values[quotient_to_state[i]] = solved.values[i];
        for (std::size_t c = 0; c < components.size(); ++c)
            for (index_t s : components[c].states) q.values[s] = solved.values[component_node[c]];

        if (options_.produce_scheduler) {
            q.scheduler = std::vector<index_t>(n, 0);
            for (index_t i = 0; i < plain_states; ++i) {
                index_t s = quotient_to_state[i];
                index_t qrow = qgrouping.group_begin(i) + solved.choices[i];
                (*q.scheduler)[s] = qrow_to_row[qrow] - model_.grouping.group_begin(s);
            }
            for (std::size_t c = 0; c < components.size(); ++c) {
                EndComponent const& ec = components[c];
                index_t node = component_node[c];
                index_t qrow = qgrouping.group_begin(node) + solved.choices[node];
                if (qrow_to_row[qrow] == Submatrix<V>::npos) {
                    // Committed: follow the component's optimal plan.
                    for (std::size_t i = 0; i < ec.states.size(); ++i)
                        (*q.scheduler)[ec.states[i]] = plans[c].rows[i];
                } else {
                    // Leaving: drift to the state owning the exit row.
                    index_t exit_row = qrow_to_row[qrow];
                    index_t exit_state = model_.grouping.state_of_row(exit_row);
                    (*q.scheduler)[exit_state] = exit_row - model_.grouping.group_begin(exit_state);
                    Bitset members(n);
                    for (index_t s : ec.states) members.set(s);
                    Bitset target(n);
                    target.set(exit_state);
                    std::vector<index_t> member_index(n, 0);
                    for (std::size_t i = 0; i < ec.states.size(); ++i)
                        member_index[ec.states[i]] = static_cast<index_t>(i);
                    std::vector<index_t> routed = route_into(model_.matrix, model_.grouping, members,
                                                             target, &ec.choices, &member_index);
                    for (index_t s : ec.states)
                        if (s != exit_state) (*q.scheduler)[s] = routed[s];
                }
            }
        }
        return q;
    }

    // -- conditional probabilities -----------------------------------------

    /// P(main | condition) for unbounded until/eventually paths on a
    /// deterministic model, via a product with three memory modes per path
    /// (pending, succeeded, failed).
    Quant conditional(PathFormula const& main, PathFormula const& cond) {
        if (is_nondeterministic(model_.kind))
            throw CheckError("conditional probabilities need a deterministic model");
        for (PathFormula const* p : {&main, &cond}) {
            if (p->kind != PathKind::Until || p->upper_bound)
                throw CheckError(
                    "conditional probabilities support only unbounded until and eventually paths");
        }

        Bitset phi1 = eval_states(*main.left);
        Bitset psi1 = eval_states(*main.right);
        Bitset phi2 = eval_states(*cond.left);
        Bitset psi2 = eval_states(*cond.right);

        SparseMatrix<V> const& chain = probability_matrix();
        index_t n = num_states();
        Bitset all(n, true);
        std::vector<V> denominator = chain_until(chain, phi2, psi2);

        // Memory per path: 0 = pending, 1 = succeeded; failure of either path
        // and joint success collapse into two sinks.
        auto status = [](Bitset const& phi, Bitset const& psi, index_t s, int mem) {
            if (mem == 1) return 1;
            if (psi.get(s)) return 1;
            if (!phi.get(s)) return 2;
            return 0;
        };
        index_t const success_sink = 3 * n;
        index_t const failure_sink = 3 * n + 1;
        // Node layout: (s, pending/pending) = s, (s, success/pending) = n + s,
        // (s, pending/success) = 2n + s.
        auto node_of = [&](index_t s, int m1, int m2) -> index_t {
            if (m1 == 2 || m2 == 2) return failure_sink;
            if (m1 == 1 && m2 == 1) return success_sink;
            if (m1 == 1) return n + s;
            if (m2 == 1) return 2 * n + s;
            return s;
        };

        MatrixBuilder<V> pb(3 * n + 2, 3 * n + 2);
        for (index_t s = 0; s < n; ++s) {
            for (auto [m1, m2] : {std::pair<int, int>{0, 0}, {1, 0}, {0, 1}}) {
                index_t from = node_of(s, m1, m2);
                for (index_t e = chain.row_begin(s); e < chain.row_end(s); ++e) {
                    index_t t = chain.col(e);
                    index_t to = node_of(t, status(phi1, psi1, t, m1), status(phi2, psi2, t, m2));
                    pb.add(from, to, chain.value(e));
                }
            }
        }
        pb.add(success_sink, success_sink, ValueTraits<V>::one());
        pb.add(failure_sink, failure_sink, ValueTraits<V>::one());

        Bitset target(3 * n + 2);
        target.set(success_sink);
        std::vector<V> joint = chain_until(pb.build(), Bitset(3 * n + 2, true), target);

        Quant q;
        q.values.assign(n, ValueTraits<V>::zero());
        bool undefined_somewhere = false;
        for (index_t s = 0; s < n; ++s) {
            if (ValueTraits<V>::is_zero(denominator[s])) {
                if (model_.initial_states().get(s))
                    throw CheckError(
                        "conditional probability is undefined: the condition has probability zero "
                        "in an initial state");
                undefined_somewhere = true;
                continue;  // reported as zero
            }
            index_t entry = node_of(s, status(phi1, psi1, s, 0), status(phi2, psi2, s, 0));
            V numerator = entry == success_sink ? ValueTraits<V>::one()
                          : entry == failure_sink ? ValueTraits<V>::zero()
                                                  : joint[entry];
            q.values[s] = numerator / denominator[s];
        }
        if (undefined_somewhere)
            warn("the condition has probability zero in some non-initial states; their conditional "
                 "probability is reported as zero");
        clamp_unit(q.values);
        return q;
    }
};

/// One-shot convenience wrapper around Checker.
template <typename V>
CheckResult<V> check(Model<V> const& model, Property const& property, CheckOptions const& options = {},
                     StateValuations const* valuations = nullptr,
                     std::map<std::string, Value> const* constants = nullptr) {
    Checker<V> checker(model, options, valuations, constants);
    return checker.check(property);
}

}  // namespace squall
