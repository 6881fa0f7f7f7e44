#pragma once

#include <vector>

#include "squall/bitset.hpp"
#include "squall/matrix.hpp"

namespace squall {

/// Qualitative graph analyses over the transition structure of a model.
/// Probability values are never inspected beyond "nonzero", so every routine
/// here works identically for float and exact matrices via the pattern
/// accessors below. All algorithms are iterative (explicit work lists or
/// explicit DFS stacks) and produce deterministic results for a fixed input.

/// Column pattern of a matrix plus its transpose pattern, the workhorse for
/// backward searches.
class TransitionPattern {
  public:
    template <typename V>
    explicit TransitionPattern(SparseMatrix<V> const& matrix)
        : num_rows_(matrix.num_rows()), num_cols_(matrix.num_cols()) {
        row_offsets_.assign(num_rows_ + 1, 0);
        col_indices_.reserve(matrix.num_entries());
        for (index_t r = 0; r < num_rows_; ++r) {
            for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e) {
                if (!ValueTraits<V>::is_zero(matrix.value(e))) col_indices_.push_back(matrix.col(e));
            }
            row_offsets_[r + 1] = static_cast<index_t>(col_indices_.size());
        }
    }

    index_t num_rows() const { return num_rows_; }
    index_t row_begin(index_t row) const { return row_offsets_[row]; }
    index_t row_end(index_t row) const { return row_offsets_[row + 1]; }
    index_t col(index_t entry) const { return col_indices_[entry]; }

  private:
    index_t num_rows_;
    index_t num_cols_;
    std::vector<index_t> row_offsets_;
    std::vector<index_t> col_indices_;
};

/// For each state, the rows (from a grouped matrix) that can reach it in one
/// step, i.e. the transpose of the state graph lifted to rows.
class BackwardTransitions {
  public:
    TransitionPattern const& pattern() const { return pattern_; }

    template <typename V>
    BackwardTransitions(SparseMatrix<V> const& matrix, RowGrouping const& grouping)
        : pattern_(matrix) {
        index_t n = grouping.num_states();
        state_offsets_.assign(n + 1, 0);
        std::vector<index_t> counts(n, 0);
        for (index_t r = 0; r < pattern_.num_rows(); ++r)
            for (index_t e = pattern_.row_begin(r); e < pattern_.row_end(r); ++e) ++counts[pattern_.col(e)];
        for (index_t s = 0; s < n; ++s) state_offsets_[s + 1] = state_offsets_[s] + counts[s];
        pred_rows_.resize(state_offsets_[n]);
        pred_states_.resize(state_offsets_[n]);
        std::vector<index_t> fill(state_offsets_.begin(), state_offsets_.end() - 1);
        for (index_t s = 0; s < n; ++s) {
            for (index_t r = grouping.group_begin(s); r < grouping.group_end(s); ++r) {
                for (index_t e = pattern_.row_begin(r); e < pattern_.row_end(r); ++e) {
                    index_t dst = pattern_.col(e);
                    pred_rows_[fill[dst]] = r;
                    pred_states_[fill[dst]] = s;
                    ++fill[dst];
                }
            }
        }
    }

    index_t begin(index_t state) const { return state_offsets_[state]; }
    index_t end(index_t state) const { return state_offsets_[state + 1]; }
    index_t pred_row(index_t entry) const { return pred_rows_[entry]; }
    index_t pred_state(index_t entry) const { return pred_states_[entry]; }

  private:
    TransitionPattern pattern_;
    std::vector<index_t> state_offsets_;
    std::vector<index_t> pred_rows_;
    std::vector<index_t> pred_states_;
};

/// States that can reach `targets` while staying inside `constraint` before
/// arrival (targets themselves need not satisfy the constraint). Backward BFS.
inline Bitset existential_reach(BackwardTransitions const& backward, Bitset const& constraint,
                                Bitset const& targets) {
    Bitset reached = targets;
    std::vector<index_t> queue = targets.to_indices();
    while (!queue.empty()) {
        index_t cur = queue.back();
        queue.pop_back();
        for (index_t e = backward.begin(cur); e != backward.end(cur); ++e) {
            index_t pred = backward.pred_state(e);
            if (!reached.get(pred) && constraint.get(pred)) {
                reached.set(pred);
                queue.push_back(pred);
            }
        }
    }
    return reached;
}

/// Forward BFS: all states reachable from `from` (along rows of all choices).
template <typename V>
Bitset forward_reach(SparseMatrix<V> const& matrix, RowGrouping const& grouping, Bitset const& from) {
    Bitset reached = from;
    std::vector<index_t> queue = from.to_indices();
    std::size_t head = 0;
    while (head < queue.size()) {
        index_t s = queue[head++];
        for (index_t r = grouping.group_begin(s); r < grouping.group_end(s); ++r) {
            for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e) {
                if (ValueTraits<V>::is_zero(matrix.value(e))) continue;
                index_t dst = matrix.col(e);
                if (!reached.get(dst)) {
                    reached.set(dst);
                    queue.push_back(dst);
                }
            }
        }
    }
    return reached;
}

// ---------------------------------------------------------------------------
// Markov chain precomputation
// ---------------------------------------------------------------------------

/// States satisfying 'phi U psi' with probability exactly zero:
/// the complement of states that can reach psi through phi.
inline Bitset prob0(BackwardTransitions const& backward, Bitset const& phi, Bitset const& psi) {
    return existential_reach(backward, phi, psi).complement();
}

/// States satisfying 'phi U psi' with probability exactly one.
/// Standard double fixed point: states that with positive probability leave
/// the candidate set toward failure are peeled off until stable.
inline Bitset prob1(BackwardTransitions const& backward, Bitset const& phi, Bitset const& psi,
                    Bitset const& prob0_states) {
    // P=1 iff the chain cannot reach a prob0 state while staying phi-and-not-psi.
    Bitset bad = existential_reach(backward, phi - psi, prob0_states);
    return bad.complement();
}

// ---------------------------------------------------------------------------
// MDP precomputation
// ---------------------------------------------------------------------------

/// States where the maximal probability of 'phi U psi' is zero, i.e. no
/// scheduler reaches psi through phi: same backward search as for chains,
/// complemented.
inline Bitset prob0_max(BackwardTransitions const& backward, Bitset const& phi, Bitset const& psi) {
    return existential_reach(backward, phi, psi).complement();
}

/// States where the minimal probability of 'phi U psi' is zero: some scheduler
/// avoids psi. Fixed point peeling off states forced into the target.
/// If requested, fills `avoid_choice[s]` (choice offset within the group) with
/// a row witnessing avoidance for every state in the result that lies in phi
/// and not in psi.
template <typename V>
Bitset prob0_min(SparseMatrix<V> const& matrix, RowGrouping const& grouping, Bitset const& phi,
                 Bitset const& psi, std::vector<index_t>* avoid_choice = nullptr) {
    index_t n = grouping.num_states();
    // Start from all candidates (not yet forced); remove states where every
    // choice hits the current "forced" region with positive probability.
    Bitset forced = psi;
    bool changed = true;
    while (changed) {
        changed = false;
        for (index_t s = 0; s < n; ++s) {
            if (forced.get(s) || !phi.get(s)) continue;
            bool all_rows_hit = true;
            for (index_t r = grouping.group_begin(s); r < grouping.group_end(s) && all_rows_hit; ++r) {
                bool row_hits = false;
                for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e) {
                    if (ValueTraits<V>::is_zero(matrix.value(e))) continue;
                    if (forced.get(matrix.col(e))) {
                        row_hits = true;
                        break;
                    }
                }
                if (!row_hits) all_rows_hit = false;
            }
            if (all_rows_hit && grouping.group_size(s) > 0) {
                forced.set(s);
                changed = true;
            }
        }
    }
    Bitset result = forced.complement();
    if (avoid_choice) {
        avoid_choice->assign(n, 0);
        for (index_t s = 0; s < n; ++s) {
            if (!result.get(s) || !phi.get(s) || psi.get(s)) continue;
            for (index_t r = grouping.group_begin(s); r < grouping.group_end(s); ++r) {
                bool row_hits = false;
                for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e)
                    if (!ValueTraits<V>::is_zero(matrix.value(e)) && forced.get(matrix.col(e))) {
                        row_hits = true;
                        break;
                    }
                if (!row_hits) {
                    (*avoid_choice)[s] = r - grouping.group_begin(s);
                    break;
                }
            }
        }
    }
    return result;
}

/// States where the maximal probability of 'phi U psi' is one. Nested fixed
/// point: the outer pass shrinks the candidate set, the inner pass grows the
/// region from which psi is reachable without ever leaving the candidates.
/// If requested, fills `witness_choice[s]` with a row (choice offset) under
/// which the final inner attractor is reached — following these rows from any
/// result state reaches psi with probability one.
template <typename V>
Bitset prob1_max(SparseMatrix<V> const& matrix, RowGrouping const& grouping, Bitset const& phi,
                 Bitset const& psi, std::vector<index_t>* witness_choice = nullptr) {
    index_t n = grouping.num_states();
    Bitset candidates(n, true);

    Bitset inner(n);
    while (true) {
        // Inner fixed point: grow from psi, adding states with a choice that
        // stays inside candidates and reaches the grown region.
        inner = psi;
        bool grew = true;
        while (grew) {
            grew = false;
            for (index_t s = 0; s < n; ++s) {
                if (inner.get(s) || !phi.get(s) || !candidates.get(s)) continue;
                for (index_t r = grouping.group_begin(s); r < grouping.group_end(s); ++r) {
                    bool stays = true, hits = false;
                    for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e) {
                        if (ValueTraits<V>::is_zero(matrix.value(e))) continue;
                        index_t dst = matrix.col(e);
                        if (!candidates.get(dst)) {
                            stays = false;
                            break;
                        }
                        if (inner.get(dst)) hits = true;
                    }
                    if (stays && hits) {
                        inner.set(s);
                        grew = true;
                        break;
                    }
                }
            }
        }
        if (inner == candidates) break;
        candidates = inner;  // strictly shrinks, so the loop terminates
    }

    if (witness_choice) {
        witness_choice->assign(n, 0);
        // Re-run the final inner growth recording, for each state added, the
        // first row that stays inside the result and reaches the region grown
        // so far. Following these strictly decreases BFS rank, so psi is
        // reached with probability one.
        Bitset grown = psi;
        bool grew = true;
        while (grew) {
            grew = false;
            for (index_t s = 0; s < n; ++s) {
                if (grown.get(s) || !phi.get(s) || !inner.get(s)) continue;
                for (index_t r = grouping.group_begin(s); r < grouping.group_end(s); ++r) {
                    bool stays = true, hits = false;
                    for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e) {
                        if (ValueTraits<V>::is_zero(matrix.value(e))) continue;
                        index_t dst = matrix.col(e);
                        if (!inner.get(dst)) {
                            stays = false;
                            break;
                        }
                        if (grown.get(dst)) hits = true;
                    }
                    if (stays && hits) {
                        (*witness_choice)[s] = r - grouping.group_begin(s);
                        grown.set(s);
                        grew = true;
                        break;
                    }
                }
            }
        }
    }
    return inner;
}

/// States where the minimal probability of 'phi U psi' is one: the complement
/// of states from which some scheduler can reach, through phi-and-not-psi
/// states, a state where psi can be avoided entirely.
template <typename V>
Bitset prob1_min(SparseMatrix<V> const& matrix, RowGrouping const& grouping,
                 BackwardTransitions const& backward, Bitset const& phi, Bitset const& psi) {
    Bitset p0min = prob0_min(matrix, grouping, phi, psi);
    // Any state that can (existentially) reach p0min via phi\psi states has a
    // scheduler giving probability < 1.
    Bitset bad = existential_reach(backward, phi - psi, p0min);
    return bad.complement();
}

// ---------------------------------------------------------------------------
// Strongly connected structure
// ---------------------------------------------------------------------------

/// A partition of a subset of states into components, each listed as a sorted
/// state vector; components ordered by their smallest member.
struct ComponentDecomposition {
    std::vector<std::vector<index_t>> components;

    std::size_t size() const { return components.size(); }
    std::vector<index_t> const& operator[](std::size_t i) const { return components[i]; }
};

namespace detail {

/// Iterative Tarjan over the state graph restricted to `alive` states and
/// `alive_rows` rows (either may be null for "all"). Calls sink(component)
/// for each SCC found (in Tarjan order).
template <typename V, typename Sink>
void tarjan_sccs(SparseMatrix<V> const& matrix, RowGrouping const& grouping, Bitset const* alive,
                 Bitset const* alive_rows, Sink&& sink) {
    index_t n = grouping.num_states();
    constexpr index_t unvisited = static_cast<index_t>(-1);
    std::vector<index_t> number(n, unvisited), lowlink(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<index_t> scc_stack;
    index_t next_number = 0;

    struct Frame {
        index_t state;
        index_t row;    // current row being scanned
        index_t entry;  // next entry within row
    };
    std::vector<Frame> call_stack;

    for (index_t root = 0; root < n; ++root) {
        if (number[root] != unvisited || (alive && !alive->get(root))) continue;
        call_stack.push_back({root, grouping.group_begin(root), 0});
        number[root] = lowlink[root] = next_number++;
        scc_stack.push_back(root);
        on_stack[root] = true;
        if (call_stack.back().row < grouping.group_end(root))
            call_stack.back().entry = matrix.row_begin(call_stack.back().row);

        while (!call_stack.empty()) {
            Frame& f = call_stack.back();
            index_t s = f.state;
            bool descended = false;
            while (f.row < grouping.group_end(s)) {
                if (alive_rows && !alive_rows->get(f.row)) {
                    ++f.row;
                    if (f.row < grouping.group_end(s)) f.entry = matrix.row_begin(f.row);
                    continue;
                }
                if (f.entry >= matrix.row_end(f.row)) {
                    ++f.row;
                    if (f.row < grouping.group_end(s)) f.entry = matrix.row_begin(f.row);
                    continue;
                }
                index_t e = f.entry++;
                if (ValueTraits<V>::is_zero(matrix.value(e))) continue;
                index_t dst = matrix.col(e);
                if (alive && !alive->get(dst)) continue;
                if (number[dst] == unvisited) {
                    number[dst] = lowlink[dst] = next_number++;
                    scc_stack.push_back(dst);
                    on_stack[dst] = true;
                    call_stack.push_back({dst, grouping.group_begin(dst), 0});
                    if (call_stack.back().row < grouping.group_end(dst))
                        call_stack.back().entry = matrix.row_begin(call_stack.back().row);
                    descended = true;
                    break;
                } else if (on_stack[dst]) {
                    lowlink[s] = std::min(lowlink[s], number[dst]);
                }
            }
            if (descended) continue;
            // s finished
            if (lowlink[s] == number[s]) {
                std::vector<index_t> comp;
                index_t w;
                do {
                    w = scc_stack.back();
                    scc_stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != s);
                std::sort(comp.begin(), comp.end());
                sink(std::move(comp));
            }
            call_stack.pop_back();
            if (!call_stack.empty()) {
                Frame& parent = call_stack.back();
                lowlink[parent.state] = std::min(lowlink[parent.state], lowlink[s]);
            }
        }
    }
}

}  // namespace detail

/// Bottom strongly connected components of a Markov chain (trivial grouping):
/// SCCs with no edge leaving them. Ordered by smallest member state.
template <typename V>
ComponentDecomposition bsccs(SparseMatrix<V> const& matrix, RowGrouping const& grouping) {
    ComponentDecomposition result;
    index_t n = grouping.num_states();
    std::vector<index_t> comp_of(n, static_cast<index_t>(-1));
    std::vector<std::vector<index_t>> all;
    detail::tarjan_sccs(matrix, grouping, nullptr, nullptr, [&](std::vector<index_t> comp) {
        index_t id = static_cast<index_t>(all.size());
        for (index_t s : comp) comp_of[s] = id;
        all.push_back(std::move(comp));
    });
    for (auto& comp : all) {
        bool bottom = true;
        for (index_t s : comp) {
            for (index_t r = grouping.group_begin(s); r < grouping.group_end(s) && bottom; ++r)
                for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e)
                    if (!ValueTraits<V>::is_zero(matrix.value(e)) && comp_of[matrix.col(e)] != comp_of[s]) {
                        bottom = false;
                        break;
                    }
            if (!bottom) break;
        }
        if (bottom) result.components.push_back(std::move(comp));
    }
    std::sort(result.components.begin(), result.components.end(),
              [](auto const& a, auto const& b) { return a.front() < b.front(); });
    return result;
}

/// A maximal end component: a set of states plus, per state, the choice
/// offsets that stay inside the component.
struct EndComponent {
    std::vector<index_t> states;                        // sorted
    std::vector<std::vector<index_t>> choices;          // parallel to states; offsets within group
};

/// Maximal end component decomposition of an MDP. Standard refinement: start
/// from SCCs, drop rows that leave their component, re-decompose until stable.
/// Components ordered by smallest member state.
template <typename V>
std::vector<EndComponent> mecs(SparseMatrix<V> const& matrix, RowGrouping const& grouping) {
    index_t n = grouping.num_states();
    index_t m = matrix.num_rows();
    Bitset alive(n, true);
    Bitset alive_rows(m, true);

    // Work queue of (state set, row set) candidates; refined until each
    // candidate is a single SCC all of whose kept rows stay inside.
    struct Candidate {
        Bitset states;
        Bitset rows;
    };
    std::vector<Candidate> work{{alive, alive_rows}};
    std::vector<EndComponent> result;

    while (!work.empty()) {
        Candidate cand = std::move(work.back());
        work.pop_back();

        // Drop rows leaving the candidate state set; then drop states with no
        // remaining rows (they cannot be in any EC inside this candidate).
        bool changed = true;
        while (changed) {
            changed = false;
            for (index_t s = 0; s < n; ++s) {
                if (!cand.states.get(s)) continue;
                bool has_row = false;
                for (index_t r = grouping.group_begin(s); r < grouping.group_end(s); ++r) {
                    if (!cand.rows.get(r)) continue;
                    bool inside = true;
                    for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e)
                        if (!ValueTraits<V>::is_zero(matrix.value(e)) && !cand.states.get(matrix.col(e))) {
                            inside = false;
                            break;
                        }
                    if (!inside) {
                        cand.rows.set(r, false);
                        changed = true;
                    } else {
                        has_row = true;
                    }
                }
                if (!has_row) {
                    cand.states.set(s, false);
                    changed = true;
                }
            }
        }
        if (cand.states.none()) continue;

        // Decompose the trimmed candidate into SCCs over kept rows.
        std::vector<std::vector<index_t>> sccs;
        detail::tarjan_sccs(matrix, grouping, &cand.states, &cand.rows,
                            [&](std::vector<index_t> comp) { sccs.push_back(std::move(comp)); });

        if (sccs.size() == 1 && static_cast<index_t>(sccs[0].size()) == cand.states.count()) {
            // Stable: one SCC covering the whole candidate. Reject trivial
            // components (single state without a self-retaining row).
            auto const& comp = sccs[0];
            EndComponent ec;
            ec.states = comp;
            bool any_choice = false;
            for (index_t s : comp) {
                std::vector<index_t> offs;
                for (index_t r = grouping.group_begin(s); r < grouping.group_end(s); ++r)
                    if (cand.rows.get(r)) offs.push_back(r - grouping.group_begin(s));
                any_choice = any_choice || !offs.empty();
                ec.choices.push_back(std::move(offs));
            }
            if (comp.size() > 1) {
                result.push_back(std::move(ec));
            } else if (any_choice) {
                // Single state: an EC only if some kept row loops back (it
                // must, since all kept rows stay inside {s} by construction
                // and s survived trimming).
                result.push_back(std::move(ec));
            }
        } else {
            for (auto& comp : sccs) {
                Candidate sub;
                sub.states = Bitset(n);
                for (index_t s : comp) sub.states.set(s);
                sub.rows = cand.rows;
                work.push_back(std::move(sub));
            }
        }
    }

    std::sort(result.begin(), result.end(),
              [](EndComponent const& a, EndComponent const& b) { return a.states.front() < b.states.front(); });
    return result;
}

/// For every state in `states`, picks the lowest row (offset) whose support
/// makes strict progress toward `targets` under BFS distance, considering only
/// rows allowed by `allowed` (state -> allowed offsets; null means all rows).
/// Used to orient schedulers through regions where values alone cannot: the
/// returned offsets, followed from any state in `states` that can reach
/// `targets` inside `states`, reach `targets` with probability one.
template <typename V>
std::vector<index_t> route_into(SparseMatrix<V> const& matrix, RowGrouping const& grouping,
                                Bitset const& states, Bitset const& targets,
                                std::vector<std::vector<index_t>> const* allowed = nullptr,
                                std::vector<index_t> const* state_index = nullptr) {
    index_t n = grouping.num_states();
    constexpr index_t inf = static_cast<index_t>(-1);
    std::vector<index_t> dist(n, inf);
    std::vector<index_t> choice(n, 0);

    auto offsets_of = [&](index_t s) -> std::vector<index_t> {
        if (allowed) {
            index_t pos = state_index ? (*state_index)[s] : s;
            return (*allowed)[pos];
        }
        std::vector<index_t> all;
        for (index_t r = grouping.group_begin(s); r < grouping.group_end(s); ++r)
            all.push_back(r - grouping.group_begin(s));
        return all;
    };

    std::vector<index_t> frontier = targets.to_indices();
    for (index_t t : frontier) dist[t] = 0;
    index_t level = 0;
    while (!frontier.empty()) {
        ++level;
        // Find states in `states` with an allowed row touching the frontier.
        Bitset frontier_set(n);
        for (index_t t : frontier) frontier_set.set(t);
        std::vector<index_t> next;
        for (index_t s = 0; s < n; ++s) {
            if (!states.get(s) || dist[s] != inf) continue;
            for (index_t off : offsets_of(s)) {
                index_t r = grouping.group_begin(s) + off;
                bool touches = false;
                for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e)
                    if (!ValueTraits<V>::is_zero(matrix.value(e)) && dist[matrix.col(e)] == level - 1) {
                        touches = true;
                        break;
                    }
                if (touches) {
                    dist[s] = level;
                    choice[s] = off;
                    next.push_back(s);
                    break;  // lowest allowed offset making progress
                }
            }
        }
        frontier = std::move(next);
    }
    return choice;
}

}  // namespace squall
