#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "squall/errors.hpp"
#include "squall/matrix.hpp"

namespace squall {

/// Tuning knobs shared by all solvers. `method` selects the algorithm; empty
/// means a sensible default for the value type (direct elimination for exact
/// arithmetic, an iterative method for floating point).
struct SolveOptions {
    std::string method;
    double precision = 1e-6;
    bool relative = true;
    std::uint64_t max_iterations = 1000000;
    double sor_omega = 0.9;
};

struct SolveStats {
    std::string method;
    std::uint64_t iterations = 0;
};

template <typename V>
struct LinearSolveResult {
    std::vector<V> values;
    SolveStats stats;
};

template <typename V>
struct BellmanSolveResult {
    std::vector<V> values;
    std::vector<index_t> choices;  // per state: offset of the optimal row within its group
    SolveStats stats;
};

namespace detail {

/// Convergence test between successive iterates.
inline bool converged(std::vector<double> const& old_x, std::vector<double> const& new_x,
                      double precision, bool relative) {
    for (std::size_t i = 0; i < new_x.size(); ++i) {
        double diff = std::fabs(new_x[i] - old_x[i]);
        if (relative && new_x[i] != 0.0) diff /= std::fabs(new_x[i]);
        if (diff > precision) return false;
    }
    return true;
}

/// Sparse Gauss-Jordan elimination on x = Ax + b, i.e. (I - A) x = b.
/// Rows are maps for deterministic fill-in handling; a column-occurrence index
/// keeps each elimination step proportional to the column's population.
/// After eliminating every variable in order, each right-hand side holds the
/// solution. Exact over rationals; a direct (non-iterative) method for double.
template <typename V>
class EliminationSystem {
  public:
    EliminationSystem(index_t n) : rows_(n), rhs_(n, ValueTraits<V>::zero()), col_rows_(n) {}

    template <typename Matrix>
    static EliminationSystem from_fixed_point(Matrix const& A, std::vector<V> const& b) {
        EliminationSystem sys(A.num_rows());
        for (index_t r = 0; r < A.num_rows(); ++r) {
            for (index_t e = A.row_begin(r); e < A.row_end(r); ++e)
                if (!ValueTraits<V>::is_zero(A.value(e))) sys.add(r, A.col(e), A.value(e));
            sys.rhs_[r] = b[r];
        }
        return sys;
    }

    void add(index_t row, index_t col, V const& value) {
        auto [it, fresh] = rows_[row].emplace(col, value);
        if (!fresh) it->second += value;
        if (fresh) col_rows_[col].insert(row);
    }

    void set_rhs(index_t row, V const& value) { rhs_[row] = value; }

    /// Solves in place and returns the solution vector.
    std::vector<V> solve() {
        index_t n = static_cast<index_t>(rows_.size());
        for (index_t k = 0; k < n; ++k) {
            V self = ValueTraits<V>::zero();
            auto dit = rows_[k].find(k);
            if (dit != rows_[k].end()) {
                self = dit->second;
                rows_[k].erase(dit);
                col_rows_[k].erase(k);
            }
            V pivot = ValueTraits<V>::one() - self;
            if (ValueTraits<V>::is_zero(pivot))
                throw SolverError("elimination hit a zero pivot at variable " + std::to_string(k) +
                                  " (system is singular)");
            // Normalize row k.
            for (auto& [j, a] : rows_[k]) a /= pivot;
            rhs_[k] /= pivot;
            // Substitute into every other row containing variable k.
            std::vector<index_t> touching(col_rows_[k].begin(), col_rows_[k].end());
            for (index_t i : touching) {
                if (i == k) continue;
                auto it = rows_[i].find(k);
                if (it == rows_[i].end()) continue;
                V factor = it->second;
                rows_[i].erase(it);
                for (auto const& [j, a] : rows_[k]) {
                    auto [jt, fresh] = rows_[i].emplace(j, factor * a);
                    if (!fresh) jt->second += factor * a;
                    if (fresh) col_rows_[j].insert(i);
                }
                rhs_[i] += factor * rhs_[k];
            }
            col_rows_[k].clear();
        }
        return std::move(rhs_);
    }

  private:
    std::vector<std::map<index_t, V>> rows_;
    std::vector<V> rhs_;
    std::vector<std::set<index_t>> col_rows_;
};

}  // namespace detail

/// Solves x = A x + b. Methods: "jacobi", "gauss_seidel", "sor" (iterative,
/// floating point only) and "elimination" (direct, any value type). An empty
/// method picks gauss_seidel for double and elimination for exact values.
template <typename V>
LinearSolveResult<V> solve_linear(SparseMatrix<V> const& A, std::vector<V> const& b,
                                  SolveOptions const& options = {}) {
    if (A.num_rows() != A.num_cols() || b.size() != A.num_rows())
        throw InputError("solve_linear: dimension mismatch");
    std::string method = options.method.empty()
                             ? (ValueTraits<V>::is_exact ? "elimination" : "gauss_seidel")
                             : options.method;

    LinearSolveResult<V> result;
    result.stats.method = method;

    if (method == "elimination") {
        auto sys = detail::EliminationSystem<V>::from_fixed_point(A, b);
        result.values = sys.solve();
        return result;
    }
    if constexpr (ValueTraits<V>::is_exact) {
        throw SolverError("linear solver \"" + method + "\" needs floating-point arithmetic; "
                          "use elimination for exact mode");
    } else {
        if (method != "jacobi" && method != "gauss_seidel" && method != "sor")
            throw SolverError("unknown linear solver \"" + method + "\"");
        index_t n = A.num_rows();
        std::vector<double> x(n, 0.0), next(n, 0.0);
        for (std::uint64_t iter = 1; iter <= options.max_iterations; ++iter) {
            if (method == "jacobi") {
                for (index_t i = 0; i < n; ++i) {
                    double acc = b[i];
                    for (index_t e = A.row_begin(i); e < A.row_end(i); ++e)
                        acc += A.value(e) * x[A.col(e)];
                    next[i] = acc;
                }
            } else {
                next = x;
                for (index_t i = 0; i < n; ++i) {
                    double acc = b[i];
                    for (index_t e = A.row_begin(i); e < A.row_end(i); ++e)
                        acc += A.value(e) * next[A.col(e)];
                    next[i] = method == "sor" ? (1.0 - options.sor_omega) * next[i] + options.sor_omega * acc
                                              : acc;
                }
            }
            bool done = detail::converged(x, next, options.precision, options.relative);
            x.swap(next);
            result.stats.iterations = iter;
            if (done) {
                result.values = std::move(x);
                return result;
            }
        }
        throw SolverError("linear solver \"" + method + "\" did not converge within " +
                          std::to_string(options.max_iterations) + " iterations");
    }
}

namespace detail {

/// Least-solution policy evaluation: given the chain induced by a fixed
/// policy (one row per state) solve x = A_pi x + b_pi, zeroing every state
/// that cannot reach the support of b. On the remaining subsystem the
/// eliminated pivots are provably nonzero, so this is total for every policy,
/// proper or not, and yields the least fixed point (matching value iteration
/// started from zero).
template <typename V>
std::vector<V> evaluate_policy(SparseMatrix<V> const& A, RowGrouping const& grouping,
                               std::vector<V> const& b, std::vector<index_t> const& policy,
                               SolveOptions const& options, std::vector<V> const* warm_start) {
    index_t n = grouping.num_states();

    // Backward reachability of the support of b in the induced chain.
    std::vector<std::vector<index_t>> preds(n);
    std::vector<index_t> rows(n);
    for (index_t s = 0; s < n; ++s) {
        rows[s] = grouping.group_begin(s) + policy[s];
        for (index_t e = A.row_begin(rows[s]); e < A.row_end(rows[s]); ++e)
            if (!ValueTraits<V>::is_zero(A.value(e))) preds[A.col(e)].push_back(s);
    }
    Bitset relevant(n);
    std::vector<index_t> queue;
    for (index_t s = 0; s < n; ++s)
        if (!ValueTraits<V>::is_zero(b[rows[s]])) {
            relevant.set(s);
            queue.push_back(s);
        }
    while (!queue.empty()) {
        index_t cur = queue.back();
        queue.pop_back();
        for (index_t p : preds[cur])
            if (!relevant.get(p)) {
                relevant.set(p);
                queue.push_back(p);
            }
    }

    std::vector<V> x(n, ValueTraits<V>::zero());
    if (relevant.none()) return x;
    std::vector<index_t> to_old = relevant.to_indices();
    std::vector<index_t> to_new(n, 0);
    for (index_t i = 0; i < to_old.size(); ++i) to_new[to_old[i]] = i;
    index_t m = static_cast<index_t>(to_old.size());

    if constexpr (!ValueTraits<V>::is_exact) {
        if (options.method != "exact_pi" && options.method != "elimination") {
            // Warm-started Gauss-Seidel on the subsystem.
            std::vector<double> y(m, 0.0), next(m, 0.0);
            if (warm_start)
                for (index_t i = 0; i < m; ++i) y[i] = (*warm_start)[to_old[i]];
            SolveOptions inner = options;
            for (std::uint64_t iter = 1; iter <= options.max_iterations; ++iter) {
                next = y;
                for (index_t i = 0; i < m; ++i) {
                    index_t row = rows[to_old[i]];
                    double acc = b[row];
                    for (index_t e = A.row_begin(row); e < A.row_end(row); ++e) {
                        index_t dst = A.col(e);
                        if (relevant.get(dst)) acc += A.value(e) * next[to_new[dst]];
                    }
                    next[i] = acc;
                }
                bool done = converged(y, next, inner.precision, inner.relative);
                y.swap(next);
                if (done) break;
                if (iter == options.max_iterations)
                    throw SolverError("policy evaluation did not converge");
            }
            for (index_t i = 0; i < m; ++i) x[to_old[i]] = y[i];
            return x;
        }
    }
    (void)warm_start;
    EliminationSystem<V> sys(m);
    for (index_t i = 0; i < m; ++i) {
        index_t row = rows[to_old[i]];
        for (index_t e = A.row_begin(row); e < A.row_end(row); ++e) {
            index_t dst = A.col(e);
            if (relevant.get(dst) && !ValueTraits<V>::is_zero(A.value(e)))
                sys.add(i, to_new[dst], A.value(e));
        }
        sys.set_rhs(i, b[row]);
    }
    std::vector<V> y = sys.solve();
    for (index_t i = 0; i < m; ++i) x[to_old[i]] = y[i];
    return x;
}

}  // namespace detail

/// Solves the Bellman system x = opt_rows (A x + b) — b is per row — for the
/// least fixed point, returning optimal values and an optimizing choice per
/// state. Methods: "vi" (value iteration from zero), "pi" (policy iteration,
/// floating point), "exact_pi" (policy iteration with exact evaluation).
/// Empty method picks vi for double and exact_pi for exact values.
/// `initial_policy` (choice offsets per state) seeds policy iteration; callers
/// whose systems contain rows with positive b on cycles must seed a policy
/// that drains toward absorption, or evaluation hits a singular system.
template <typename V>
BellmanSolveResult<V> solve_bellman(SparseMatrix<V> const& A, RowGrouping const& grouping,
                                    std::vector<V> const& b, OptimizationDirection dir,
                                    SolveOptions const& options = {},
                                    std::vector<index_t> const* initial_policy = nullptr) {
    if (A.num_rows() != grouping.num_rows() || b.size() != A.num_rows())
        throw InputError("solve_bellman: dimension mismatch");
    std::string method =
        options.method.empty() ? (ValueTraits<V>::is_exact ? "exact_pi" : "vi") : options.method;

    BellmanSolveResult<V> result;
    result.stats.method = method;
    index_t n = grouping.num_states();

    auto step = [&](std::vector<V> const& x) {
        std::vector<V> row_values(A.num_rows());
        for (index_t r = 0; r < A.num_rows(); ++r) {
            V acc = b[r];
            for (index_t e = A.row_begin(r); e < A.row_end(r); ++e) acc += A.value(e) * x[A.col(e)];
            row_values[r] = acc;
        }
        std::vector<V> values(n);
        std::vector<index_t> choices(n, 0);
        for (index_t s = 0; s < n; ++s) {
            index_t begin = grouping.group_begin(s), end = grouping.group_end(s);
            if (begin == end) throw SolverError("solve_bellman: state without choices");
            V best = row_values[begin];
            index_t best_off = 0;
            for (index_t r = begin + 1; r < end; ++r) {
                bool better = dir == OptimizationDirection::Max ? row_values[r] > best
                                                                : row_values[r] < best;
                if (better) {
                    best = row_values[r];
                    best_off = r - begin;
                }
            }
            values[s] = best;
            choices[s] = best_off;
        }
        return std::make_pair(std::move(values), std::move(choices));
    };

    if (method == "vi") {
        if constexpr (ValueTraits<V>::is_exact) {
            throw SolverError("value iteration needs floating-point arithmetic; use exact_pi");
        } else {
            std::vector<V> x(n, ValueTraits<V>::zero());
            for (std::uint64_t iter = 1; iter <= options.max_iterations; ++iter) {
                auto [next, choices] = step(x);
                bool done = detail::converged(x, next, options.precision, options.relative);
                x = std::move(next);
                result.stats.iterations = iter;
                if (done) {
                    result.values = std::move(x);
                    result.choices = std::move(choices);
                    return result;
                }
            }
            throw SolverError("value iteration did not converge within " +
                              std::to_string(options.max_iterations) + " iterations");
        }
    }

    if (method != "pi" && method != "exact_pi")
        throw SolverError("unknown Bellman solver \"" + method + "\"");
    if (method == "pi" && ValueTraits<V>::is_exact)
        throw SolverError("pi uses floating-point policy evaluation; use exact_pi");

    SolveOptions eval_options = options;
    eval_options.method = method == "exact_pi" ? "elimination" : "gauss_seidel";
    // Tighten the evaluation so improvement decisions are not limited by it.
    eval_options.precision = options.precision * 0.01;

    std::vector<index_t> policy(n, 0);
    if (initial_policy) {
        if (initial_policy->size() != n) throw InputError("solve_bellman: initial policy size mismatch");
        policy = *initial_policy;
        for (index_t s = 0; s < n; ++s)
            if (policy[s] >= grouping.group_size(s))
                throw InputError("solve_bellman: initial policy offset out of range");
    }
    std::vector<V> x(n, ValueTraits<V>::zero());
    for (std::uint64_t round = 1; round <= options.max_iterations; ++round) {
        x = detail::evaluate_policy(A, grouping, b, policy, eval_options, &x);
        result.stats.iterations = round;
        // Greedy improvement; keep the incumbent row on ties so the loop
        // terminates, and take the lowest improving row otherwise.
        bool changed = false;
        for (index_t s = 0; s < n; ++s) {
            index_t begin = grouping.group_begin(s), end = grouping.group_end(s);
            V incumbent_value = ValueTraits<V>::zero();
            {
                index_t r = begin + policy[s];
                incumbent_value = b[r];
                for (index_t e = A.row_begin(r); e < A.row_end(r); ++e)
                    incumbent_value += A.value(e) * x[A.col(e)];
            }
            V best = incumbent_value;
            index_t best_off = policy[s];
            for (index_t r = begin; r < end; ++r) {
                V acc = b[r];
                for (index_t e = A.row_begin(r); e < A.row_end(r); ++e) acc += A.value(e) * x[A.col(e)];
                bool better = dir == OptimizationDirection::Max ? acc > best : acc < best;
                if (better) {
                    best = acc;
                    best_off = r - begin;
                }
            }
            if (best_off != policy[s]) {
                // For floating point, ignore improvements below the working
                // precision — they are evaluation noise and can cycle.
                if constexpr (!ValueTraits<V>::is_exact) {
                    double gap = std::fabs(ValueTraits<V>::to_double(best - incumbent_value));
                    double scale = 1.0 + std::fabs(ValueTraits<V>::to_double(incumbent_value));
                    if (gap <= options.precision * 0.1 * scale) continue;
                }
                policy[s] = best_off;
                changed = true;
            }
        }
        if (!changed) {
            result.values = std::move(x);
            result.choices = std::move(policy);
            return result;
        }
    }
    throw SolverError("policy iteration did not converge within " +
                      std::to_string(options.max_iterations) + " rounds");
}

/// Stationary distribution of an irreducible stochastic matrix restricted to
/// `states` (the rows/columns indexed by `states` must form a closed
/// recurrent class of P). Returns the distribution parallel to `states`.
/// Uses the Grassmann–Taksar–Heyman reduction, which needs no subtractions of
/// like-signed quantities and is exact over rationals.
template <typename V>
std::vector<V> stationary_distribution(SparseMatrix<V> const& P, std::vector<index_t> const& states) {
    index_t m = static_cast<index_t>(states.size());
    if (m == 0) throw InputError("stationary_distribution: empty component");
    std::vector<index_t> to_new(P.num_cols(), static_cast<index_t>(-1));
    for (index_t i = 0; i < m; ++i) to_new[states[i]] = i;

    std::vector<std::vector<V>> a(m, std::vector<V>(m, ValueTraits<V>::zero()));
    for (index_t i = 0; i < m; ++i) {
        for (index_t e = P.row_begin(states[i]); e < P.row_end(states[i]); ++e) {
            index_t j = to_new[P.col(e)];
            if (j == static_cast<index_t>(-1))
                throw InputError("stationary_distribution: component is not closed");
            a[i][j] += P.value(e);
        }
    }

    // GTH reduction: fold states m-1 .. 1 into the remaining chain.
    std::vector<V> scale(m, ValueTraits<V>::zero());
    for (index_t k = m; k-- > 1;) {
        V s = ValueTraits<V>::zero();
        for (index_t j = 0; j < k; ++j) s += a[k][j];
        if (ValueTraits<V>::is_zero(s))
            throw SolverError("stationary_distribution: component is not irreducible");
        scale[k] = s;
        for (index_t i = 0; i < k; ++i) {
            if (ValueTraits<V>::is_zero(a[i][k])) continue;
            V f = a[i][k] / s;
            for (index_t j = 0; j < k; ++j) a[i][j] += f * a[k][j];
        }
    }
    std::vector<V> mu(m, ValueTraits<V>::zero());
    mu[0] = ValueTraits<V>::one();
    V total = mu[0];
    for (index_t k = 1; k < m; ++k) {
        V acc = ValueTraits<V>::zero();
        for (index_t i = 0; i < k; ++i) acc += mu[i] * a[i][k];
        mu[k] = acc / scale[k];
        total += mu[k];
    }
    for (auto& v : mu) v /= total;
    return mu;
}

/// Steady-state distribution of one bottom component, parallel to `states`.
/// Without exit rates the matrix rows are probabilities and this is the plain
/// stationary distribution. With exit rates the rows hold transition rates:
/// the embedded jump chain's distribution is reweighted by the expected
/// sojourn times 1/exit_rate and renormalized, which solves pi Q = 0 for the
/// generator Q = R - diag(exit).
template <typename V>
std::vector<V> steady_state_bscc(SparseMatrix<V> const& matrix, std::vector<index_t> const& states,
                                 std::vector<V> const* exit_rates = nullptr) {
    if (!exit_rates) return stationary_distribution(matrix, states);
    index_t m = static_cast<index_t>(states.size());
    if (m == 0) throw InputError("steady_state_bscc: empty component");
    if (m == 1) return {ValueTraits<V>::one()};

    std::vector<index_t> to_new(matrix.num_cols(), static_cast<index_t>(-1));
    for (index_t i = 0; i < m; ++i) to_new[states[i]] = i;
    MatrixBuilder<V> embedded(m, m);
    for (index_t i = 0; i < m; ++i) {
        V const& exit = (*exit_rates)[states[i]];
        if (ValueTraits<V>::is_zero(exit))
            throw SolverError("steady_state_bscc: zero exit rate inside a multi-state component");
        for (index_t e = matrix.row_begin(states[i]); e < matrix.row_end(states[i]); ++e) {
            index_t j = to_new[matrix.col(e)];
            if (j == static_cast<index_t>(-1))
                throw InputError("steady_state_bscc: component is not closed");
            embedded.add(i, j, matrix.value(e) / exit);
        }
    }
    SparseMatrix<V> P = embedded.build();
    std::vector<index_t> identity(m);
    for (index_t i = 0; i < m; ++i) identity[i] = i;
    std::vector<V> pi = stationary_distribution(P, identity);

    V total = ValueTraits<V>::zero();
    for (index_t i = 0; i < m; ++i) {
        pi[i] /= (*exit_rates)[states[i]];
        total += pi[i];
    }
    for (auto& v : pi) v /= total;
    return pi;
}

}  // namespace squall
