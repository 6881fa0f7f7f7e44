#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "squall/bitset.hpp"
#include "squall/matrix.hpp"

namespace squall {

enum class ModelKind { Dtmc, Ctmc, Mdp, Ma };

inline std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Dtmc: return "dtmc";
        case ModelKind::Ctmc: return "ctmc";
        case ModelKind::Mdp: return "mdp";
        case ModelKind::Ma: return "ma";
    }
    return "?";
}

inline bool is_nondeterministic(ModelKind kind) { return kind == ModelKind::Mdp || kind == ModelKind::Ma; }
inline bool is_continuous_time(ModelKind kind) { return kind == ModelKind::Ctmc || kind == ModelKind::Ma; }

/// Label name -> set of states. "init" and "deadlock" are always present.
class StateLabeling {
  public:
    StateLabeling() = default;
    explicit StateLabeling(index_t num_states) : num_states_(num_states) {
        labels_.emplace("init", Bitset(num_states));
        labels_.emplace("deadlock", Bitset(num_states));
    }

    index_t num_states() const { return num_states_; }

    bool has_label(std::string const& name) const { return labels_.count(name) > 0; }
    Bitset const& states(std::string const& name) const {
        auto it = labels_.find(name);
        if (it == labels_.end()) throw InputError("unknown label \"" + name + "\"");
        return it->second;
    }
    void add_label(std::string const& name, Bitset states) {
        if (states.size() != num_states_) throw InputError("label bitset size mismatch");
        labels_[name] = std::move(states);
    }
    void add_to_label(std::string const& name, index_t state) {
        auto it = labels_.find(name);
        if (it == labels_.end()) it = labels_.emplace(name, Bitset(num_states_)).first;
        it->second.set(state);
    }

    std::map<std::string, Bitset> const& all() const { return labels_; }

  private:
    index_t num_states_ = 0;
    std::map<std::string, Bitset> labels_;
};

/// Named reward structure: per-state rewards (reward, or reward per time unit
/// for continuous-time states) and per-row action rewards.
template <typename V>
struct RewardModel {
    std::string name;
    std::optional<std::vector<V>> state_rewards;   // length num_states
    std::optional<std::vector<V>> action_rewards;  // length num_rows

    bool has_state_rewards() const { return state_rewards.has_value(); }
    bool has_action_rewards() const { return action_rewards.has_value(); }

    V state_reward(index_t state) const {
        return state_rewards ? (*state_rewards)[state] : ValueTraits<V>::zero();
    }
    V action_reward(index_t row) const {
        return action_rewards ? (*action_rewards)[row] : ValueTraits<V>::zero();
    }
};

/// A sparse Markov model: one of DTMC, CTMC, MDP, MA over a single transition
/// matrix. Probabilistic rows are distributions; CTMC rows hold rates with
/// exit_rates recording the row sums; closed MA rows are distributions with
/// Markovian states carrying their exit rate separately.
template <typename V>
struct Model {
    ModelKind kind = ModelKind::Dtmc;
    SparseMatrix<V> matrix;
    RowGrouping grouping;
    StateLabeling labeling;
    std::map<std::string, RewardModel<V>> rewards;
    std::vector<V> exit_rates;  // Ctmc: per state; Ma: per state, zero for probabilistic states
    Bitset markovian_states;    // Ma only

    index_t num_states() const { return grouping.num_states(); }
    index_t num_rows() const { return matrix.num_rows(); }
    index_t num_transitions() const { return matrix.num_entries(); }

    Bitset const& initial_states() const { return labeling.states("init"); }
    index_t first_initial_state() const {
        auto s = initial_states().find_first();
        if (s == Bitset::npos) throw InputError("model has no initial state");
        return static_cast<index_t>(s);
    }

    RewardModel<V> const& reward_model(std::string const& name) const {
        if (name.empty()) {
            if (rewards.size() == 1) return rewards.begin()->second;
            throw CheckError(rewards.empty() ? "model has no reward model"
                                             : "model has several reward models; name one");
        }
        auto it = rewards.find(name);
        if (it == rewards.end()) throw CheckError("unknown reward model \"" + name + "\"");
        return it->second;
    }

    /// Checks the kind-specific structural invariants. row_sum_tolerance is
    /// the float-mode slack on probability row sums (exact mode ignores it
    /// and requires equality).
    void validate(double row_sum_tolerance = 1e-10) const {
        matrix.validate();
        grouping.validate();
        if (matrix.num_cols() != num_states()) throw InputError("model: matrix must be square over states");
        if (grouping.num_rows() != matrix.num_rows()) throw InputError("model: grouping does not cover matrix");
        if (labeling.num_states() != num_states()) throw InputError("model: labeling size mismatch");
        if (!labeling.has_label("init") || !labeling.has_label("deadlock"))
            throw InputError("model: reserved labels missing");
        if (!is_nondeterministic(kind) && !grouping.is_trivial())
            throw InputError("model: deterministic kinds need one row per state");
        if (kind == ModelKind::Ctmc || kind == ModelKind::Ma) {
            if (exit_rates.size() != num_states()) throw InputError("model: exit rate vector size mismatch");
        }
        if (kind == ModelKind::Ma && markovian_states.size() != num_states())
            throw InputError("model: markovian_states size mismatch");

        for (index_t s = 0; s < num_states(); ++s) {
            for (index_t row = grouping.group_begin(s); row < grouping.group_end(s); ++row) {
                bool rate_row = kind == ModelKind::Ctmc;
                for (index_t e = matrix.row_begin(row); e < matrix.row_end(row); ++e) {
                    V const& v = matrix.value(e);
                    if (v < ValueTraits<V>::zero())
                        throw InputError("model: negative entry in row " + std::to_string(row));
                    if (!rate_row && v > ValueTraits<V>::one() && !nearly_one_slack(v, row_sum_tolerance))
                        throw InputError("model: probability above one in row " + std::to_string(row));
                }
                V sum = matrix.row_sum(row);
                if (rate_row) {
                    if (sum != exit_rates[s] && !(ValueTraits<V>::is_exact
                                                      ? false
                                                      : close(sum, exit_rates[s], row_sum_tolerance)))
                        throw InputError("model: exit rate mismatch at state " + std::to_string(s));
                } else {
                    if (ValueTraits<V>::is_exact) {
                        if (sum != ValueTraits<V>::one())
                            throw InputError("model: probability row " + std::to_string(row) +
                                             " does not sum to one");
                    } else if (!close(sum, ValueTraits<V>::one(), row_sum_tolerance)) {
                        throw InputError("model: probability row " + std::to_string(row) +
                                         " does not sum to one");
                    }
                }
            }
            if (kind == ModelKind::Ma) {
                // Closed MA: a Markovian state has exactly its one (normalized)
                // Markovian row; probabilistic states have zero exit rate.
                if (markovian_states.get(s)) {
                    if (grouping.group_size(s) != 1)
                        throw InputError("model: markovian state " + std::to_string(s) + " has several rows");
                    if (!(exit_rates[s] > ValueTraits<V>::zero()))
                        throw InputError("model: markovian state " + std::to_string(s) + " without exit rate");
                } else if (!ValueTraits<V>::is_zero(exit_rates[s])) {
                    throw InputError("model: probabilistic state " + std::to_string(s) + " with exit rate");
                }
            }
        }
        for (auto const& [name, rm] : rewards) {
            if (rm.state_rewards && rm.state_rewards->size() != num_states())
                throw InputError("reward model \"" + name + "\": state reward size mismatch");
            if (rm.action_rewards && rm.action_rewards->size() != matrix.num_rows())
                throw InputError("reward model \"" + name + "\": action reward size mismatch");
            for (auto const* vec : {rm.state_rewards ? &*rm.state_rewards : nullptr,
                                    rm.action_rewards ? &*rm.action_rewards : nullptr})
                if (vec)
                    for (auto const& v : *vec)
                        if (v < ValueTraits<V>::zero())
                            throw InputError("reward model \"" + name + "\": negative reward");
        }
    }

  private:
    static bool close(V const& a, V const& b, double tol) {
        return ValueTraits<V>::to_double(ValueTraits<V>::abs(a - b)) <= tol;
    }
    static bool nearly_one_slack(V const& v, double tol) {
        return !ValueTraits<V>::is_exact && ValueTraits<V>::to_double(v) <= 1.0 + tol;
    }
};

}  // namespace squall
