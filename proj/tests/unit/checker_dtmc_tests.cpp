#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "squall/checkers.hpp"
#include "squall/props.hpp"

using namespace squall;

namespace {

// Chains are described with exact probabilities so the same description can
// build a rational model and its floating-point twin.
using Row = std::vector<std::pair<index_t, Rational>>;

Rational frac(long num, long den) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

struct ChainSpec {
    std::vector<Row> rows;  // probabilities, or rates for continuous time
    std::map<std::string, std::vector<index_t>> labels;
    std::map<std::string, std::vector<Rational>> state_rewards;
    bool continuous = false;
};

template <typename V>
Model<V> make_chain(ChainSpec const& spec) {
    index_t n = static_cast<index_t>(spec.rows.size());
    Model<V> m;
    m.kind = spec.continuous ? ModelKind::Ctmc : ModelKind::Dtmc;
    m.grouping = RowGrouping::trivial(n);
    m.labeling = StateLabeling(n);
    m.labeling.add_to_label("init", 0);

    MatrixBuilder<V> b(n, n);
    if (spec.continuous) m.exit_rates.assign(n, ValueTraits<V>::zero());
    for (index_t s = 0; s < n; ++s) {
        for (auto const& [t, p] : spec.rows[s]) {
            b.add(s, t, ValueTraits<V>::from_rational(p));
            if (spec.continuous) m.exit_rates[s] += ValueTraits<V>::from_rational(p);
        }
    }
    m.matrix = b.build();

    for (auto const& [name, states] : spec.labels) {
        m.labeling.add_label(name, Bitset(n));
        for (index_t s : states) m.labeling.add_to_label(name, s);
    }
    for (auto const& [name, rewards] : spec.state_rewards) {
        RewardModel<V> rm;
        rm.name = name;
        rm.state_rewards.emplace(n);
        for (index_t s = 0; s < n; ++s)
            (*rm.state_rewards)[s] = ValueTraits<V>::from_rational(rewards[s]);
        m.rewards.emplace(name, std::move(rm));
    }
    m.validate();
    return m;
}

template <typename V>
CheckResult<V> run(Model<V> const& m, std::string const& prop, CheckOptions options = {}) {
    Checker<V> checker(m, options);
    Property property = parse_property(prop);
    return checker.check(property);
}

template <typename V>
std::vector<V> values_of(Model<V> const& m, std::string const& prop, CheckOptions options = {}) {
    return run(m, prop, options).values;
}

template <typename V>
V at_init(Model<V> const& m, std::string const& prop, CheckOptions options = {}) {
    return values_of(m, prop, options)[m.first_initial_state()];
}

// The simulated six-sided die from two-sided coin flips: seven flipping
// states (0..6) and six absorbing outcomes (7..12).
ChainSpec die_spec() {
    Rational h(1, 2);
    ChainSpec spec;
    spec.rows = {
        {{1, h}, {2, h}},    // 0
        {{3, h}, {4, h}},    // 1
        {{5, h}, {6, h}},    // 2
        {{1, h}, {7, h}},    // 3
        {{8, h}, {9, h}},    // 4
        {{10, h}, {11, h}},  // 5
        {{2, h}, {12, h}},   // 6
        {{7, Rational(1)}},
        {{8, Rational(1)}},
        {{9, Rational(1)}},
        {{10, Rational(1)}},
        {{11, Rational(1)}},
        {{12, Rational(1)}},
    };
    spec.labels = {
        {"done", {7, 8, 9, 10, 11, 12}},
        {"one", {7}},
        {"two", {8}},
        {"three", {9}},
        {"four", {10}},
        {"five", {11}},
        {"six", {12}},
        {"odd", {7, 9, 11}},
    };
    std::vector<Rational> flips(13, Rational(0));
    for (index_t s = 0; s <= 6; ++s) flips[s] = Rational(1);
    spec.state_rewards = {{"flips", flips}};
    return spec;
}

// Seeded random chains with probabilities in sixteenths and two label sets.
ChainSpec random_chain(std::mt19937& rng, index_t max_states) {
    std::uniform_int_distribution<index_t> size_dist(2, max_states);
    index_t n = size_dist(rng);
    std::uniform_int_distribution<index_t> state_dist(0, n - 1);
    std::uniform_int_distribution<int> frac_dist(1, 15);
    std::uniform_int_distribution<int> coin(0, 3);

    ChainSpec spec;
    spec.rows.resize(n);
    for (index_t s = 0; s < n; ++s) {
        if (coin(rng) == 0) {  // absorbing
            spec.rows[s] = {{s, Rational(1)}};
            continue;
        }
        int remaining = 16;
        std::map<index_t, Rational> mass;
        while (remaining > 0) {
            int part = std::min(remaining, frac_dist(rng));
            mass[state_dist(rng)] += frac(part, 16);
            remaining -= part;
        }
        for (auto const& [t, p] : mass) spec.rows[s].push_back({t, p});
    }
    for (std::string name : {"a", "b"}) {
        std::vector<index_t>& states = spec.labels[name];
        for (index_t s = 0; s < n; ++s)
            if (coin(rng) != 0) states.push_back(s);
    }
    std::vector<Rational>& cost = spec.state_rewards["cost"];
    cost.resize(n);
    for (index_t s = 0; s < n; ++s) cost[s] = frac(frac_dist(rng), 4);
    return spec;
}

// -- dense rational oracles, independent of the sparse machinery ------------

std::vector<std::vector<Rational>> dense_of(ChainSpec const& spec) {
    index_t n = static_cast<index_t>(spec.rows.size());
    std::vector<std::vector<Rational>> P(n, std::vector<Rational>(n, Rational(0)));
    for (index_t s = 0; s < n; ++s)
        for (auto const& [t, p] : spec.rows[s]) P[s][t] += p;
    return P;
}

// Gaussian elimination with partial (nonzero) pivoting.
std::vector<Rational> dense_solve(std::vector<std::vector<Rational>> A, std::vector<Rational> b) {
    std::size_t n = A.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && A[pivot][col] == 0) ++pivot;
        REQUIRE(pivot < n);
        std::swap(A[col], A[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || A[r][col] == 0) continue;
            Rational f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<Rational> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / A[i][i];
    return x;
}

std::vector<bool> bool_label(ChainSpec const& spec, std::string const& name) {
    std::vector<bool> out(spec.rows.size(), false);
    auto it = spec.labels.find(name);
    if (it != spec.labels.end())
        for (index_t s : it->second) out[s] = true;
    return out;
}

// States that can reach the target set along nonzero transitions.
std::vector<bool> can_reach(std::vector<std::vector<Rational>> const& P, std::vector<bool> target,
                            std::vector<bool> const* through = nullptr) {
    std::size_t n = P.size();
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (target[s] || (through && !(*through)[s])) continue;
            for (std::size_t t = 0; t < n; ++t)
                if (P[s][t] != 0 && target[t]) {
                    target[s] = true;
                    changed = true;
                    break;
                }
        }
    }
    return target;
}

// Reachability probabilities for phi U psi by solving the linear system on
// the undecided states.
std::vector<Rational> oracle_until(std::vector<std::vector<Rational>> const& P,
                                   std::vector<bool> const& phi, std::vector<bool> const& psi) {
    std::size_t n = P.size();
    std::vector<bool> reach = can_reach(P, psi, &phi);
    for (std::size_t s = 0; s < n; ++s) reach[s] = reach[s] || psi[s];

    std::vector<std::size_t> maybe;
    std::vector<std::size_t> index(n, n);
    for (std::size_t s = 0; s < n; ++s)
        if (reach[s] && !psi[s]) {
            index[s] = maybe.size();
            maybe.push_back(s);
        }
    std::vector<Rational> x(n, Rational(0));
    for (std::size_t s = 0; s < n; ++s)
        if (psi[s]) x[s] = Rational(1);
    if (maybe.empty()) return x;

    std::vector<std::vector<Rational>> A(maybe.size(), std::vector<Rational>(maybe.size(), Rational(0)));
    std::vector<Rational> b(maybe.size(), Rational(0));
    for (std::size_t i = 0; i < maybe.size(); ++i) {
        std::size_t s = maybe[i];
        A[i][i] += 1;
        for (std::size_t t = 0; t < n; ++t) {
            if (P[s][t] == 0) continue;
            if (psi[t])
                b[i] += P[s][t];
            else if (index[t] < n)
                A[i][index[t]] -= P[s][t];
        }
    }
    std::vector<Rational> sol = dense_solve(std::move(A), std::move(b));
    for (std::size_t i = 0; i < maybe.size(); ++i) x[maybe[i]] = sol[i];
    return x;
}

}  // namespace

TEST_CASE("the coin-flip die lands on each face with probability one sixth") {
    auto exact = make_chain<Rational>(die_spec());
    auto approx = make_chain<double>(die_spec());

    for (std::string face : {"one", "two", "three", "four", "five", "six"}) {
        CAPTURE(face);
        CHECK(at_init(exact, "P=? [ F \"" + face + "\" ]") == Rational(1, 6));
        CHECK(at_init(approx, "P=? [ F \"" + face + "\" ]") ==
              doctest::Approx(1.0 / 6.0).epsilon(1e-6));
    }
    CHECK(at_init(exact, "P=? [ F \"done\" ]") == Rational(1));

    CHECK(at_init(exact, "R{\"flips\"}=? [ F \"done\" ]") == Rational(11, 3));
    CHECK(at_init(approx, "R{\"flips\"}=? [ F \"done\" ]") ==
          doctest::Approx(11.0 / 3.0).epsilon(1e-6));
    // A single reward model is found without naming it.
    CHECK(at_init(exact, "R=? [ F \"done\" ]") == Rational(11, 3));
}

TEST_CASE("step-bounded die probabilities count the short paths") {
    auto die = make_chain<Rational>(die_spec());
    CHECK(at_init(die, "P=? [ F<=2 \"done\" ]") == Rational(0));
    CHECK(at_init(die, "P=? [ F<=3 \"done\" ]") == Rational(3, 4));
    CHECK(at_init(die, "P=? [ F<=4 \"done\" ]") == Rational(3, 4));
    CHECK(at_init(die, "P=? [ F<=5 \"done\" ]") == Rational(15, 16));
    CHECK(at_init(die, "P=? [ F<=0 \"done\" ]") == Rational(0));
    // The bound counts transitions: an outcome state satisfies F<=0.
    CHECK(values_of(die, "P=? [ F<=0 \"done\" ]")[7] == Rational(1));
}

TEST_CASE("until probabilities match a dense linear-system oracle") {
    std::mt19937 rng(571203);
    for (int round = 0; round < 40; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 8);
        auto model = make_chain<Rational>(spec);
        std::vector<Rational> got = values_of(model, "P=? [ \"a\" U \"b\" ]");
        std::vector<Rational> want =
            oracle_until(dense_of(spec), bool_label(spec, "a"), bool_label(spec, "b"));
        for (index_t s = 0; s < model.num_states(); ++s) {
            CAPTURE(s);
            CHECK(got[s] == want[s]);
        }
    }
}

TEST_CASE("until probabilities satisfy their fixed-point equation") {
    std::mt19937 rng(8812041);
    for (int round = 0; round < 30; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 8);
        auto model = make_chain<Rational>(spec);
        std::vector<Rational> x = values_of(model, "P=? [ \"a\" U \"b\" ]");
        Bitset phi = model.labeling.states("a");
        Bitset psi = model.labeling.states("b");
        for (index_t s = 0; s < model.num_states(); ++s) {
            CAPTURE(s);
            CHECK(x[s] >= Rational(0));
            CHECK(x[s] <= Rational(1));
            if (psi.get(s)) {
                CHECK(x[s] == Rational(1));
            } else if (phi.get(s)) {
                Rational expect(0);
                for (index_t e = model.matrix.row_begin(s); e < model.matrix.row_end(s); ++e)
                    expect += model.matrix.value(e) * x[model.matrix.col(e)];
                CHECK(x[s] == expect);
            } else {
                CHECK(x[s] == Rational(0));
            }
        }
    }
}

TEST_CASE("step-bounded probabilities grow monotonically to the unbounded value") {
    std::mt19937 rng(90267);
    for (int round = 0; round < 15; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 6);
        auto exact = make_chain<Rational>(spec);
        std::vector<Rational> limit = values_of(exact, "P=? [ \"a\" U \"b\" ]");
        std::vector<Rational> previous(exact.num_states(), Rational(0));
        for (int k : {0, 1, 2, 5, 9}) {
            std::vector<Rational> bounded =
                values_of(exact, "P=? [ \"a\" U<=" + std::to_string(k) + " \"b\" ]");
            for (index_t s = 0; s < exact.num_states(); ++s) {
                CAPTURE(k);
                CAPTURE(s);
                CHECK(bounded[s] >= previous[s]);
                CHECK(bounded[s] <= limit[s]);
            }
            previous = std::move(bounded);
        }

        auto approx = make_chain<double>(spec);
        std::vector<double> tail = values_of(approx, "P=? [ \"a\" U<=400 \"b\" ]");
        for (index_t s = 0; s < exact.num_states(); ++s) {
            CAPTURE(s);
            CHECK(tail[s] == doctest::Approx(limit[s].get_d()).epsilon(1e-6));
        }
    }
}

TEST_CASE("globally and weak until agree with their duals exactly") {
    std::mt19937 rng(442871);
    for (int round = 0; round < 30; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 8);
        auto model = make_chain<Rational>(spec);

        std::vector<Rational> globally = values_of(model, "P=? [ G \"a\" ]");
        std::vector<Rational> escape = values_of(model, "P=? [ F !\"a\" ]");
        std::vector<Rational> weak = values_of(model, "P=? [ \"a\" W \"b\" ]");
        std::vector<Rational> until = values_of(model, "P=? [ \"a\" U \"b\" ]");
        std::vector<Rational> dual = values_of(model, "P=? [ (\"a\" & !\"b\") U (!\"a\" & !\"b\") ]");
        for (index_t s = 0; s < model.num_states(); ++s) {
            CAPTURE(s);
            CHECK(globally[s] + escape[s] == Rational(1));
            CHECK(weak[s] + dual[s] == Rational(1));
            CHECK(weak[s] >= until[s]);
        }
    }
}

TEST_CASE("reachability rewards solve the expected-cost equations") {
    std::mt19937 rng(33310);
    int diverging = 0;
    for (int round = 0; round < 30; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 8);
        auto model = make_chain<Rational>(spec);
        auto result = run(model, "R=? [ F \"b\" ]");
        Bitset goal = model.labeling.states("b");
        auto const& cost = *model.rewards.at("cost").state_rewards;

        // Divergence is exactly "misses the goal with positive probability".
        auto P = dense_of(spec);
        std::vector<bool> reach_goal = can_reach(P, bool_label(spec, "b"));
        for (index_t s = 0; s < model.num_states(); ++s) {
            bool always = true;
            std::vector<bool> from(model.num_states(), false);
            from[s] = true;
            // Forward closure of s.
            bool changed = true;
            while (changed) {
                changed = false;
                for (index_t u = 0; u < model.num_states(); ++u) {
                    if (!from[u] || goal.get(u)) continue;
                    for (index_t v = 0; v < model.num_states(); ++v)
                        if (P[u][v] != 0 && !from[v]) {
                            from[v] = true;
                            changed = true;
                        }
                }
            }
            for (index_t u = 0; u < model.num_states(); ++u)
                if (from[u] && !reach_goal[u]) always = false;
            CAPTURE(s);
            CHECK(result.infinite_at(s) == !always);
            if (!always) ++diverging;

            if (goal.get(s)) {
                CHECK(result.values[s] == Rational(0));
            } else if (always) {
                Rational expect = cost[s];
                for (index_t e = model.matrix.row_begin(s); e < model.matrix.row_end(s); ++e)
                    expect += model.matrix.value(e) * result.values[model.matrix.col(e)];
                CHECK(result.values[s] == expect);
            }
        }
    }
    CHECK(diverging > 0);  // the generator must exercise the infinite case
}

TEST_CASE("cumulative and instantaneous rewards match direct dynamic programming") {
    std::mt19937 rng(77120);
    for (int round = 0; round < 20; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 7);
        auto model = make_chain<Rational>(spec);
        auto P = dense_of(spec);
        index_t n = model.num_states();
        auto const& cost = spec.state_rewards.at("cost");

        for (int k : {0, 1, 3, 6}) {
            CAPTURE(k);
            std::vector<Rational> cumulative(n, Rational(0));
            std::vector<Rational> instant = cost;
            for (int step = 0; step < k; ++step) {
                std::vector<Rational> next_c(n), next_i(n, Rational(0));
                for (index_t s = 0; s < n; ++s) {
                    next_c[s] = cost[s];
                    for (index_t t = 0; t < n; ++t) {
                        next_c[s] += P[s][t] * cumulative[t];
                        next_i[s] += P[s][t] * instant[t];
                    }
                }
                cumulative = std::move(next_c);
                instant = std::move(next_i);
            }
            std::vector<Rational> got_c =
                values_of(model, "R=? [ C<=" + std::to_string(k) + " ]");
            std::vector<Rational> got_i = values_of(model, "R=? [ I=" + std::to_string(k) + " ]");
            for (index_t s = 0; s < n; ++s) {
                CAPTURE(s);
                CHECK(got_c[s] == cumulative[s]);
                CHECK(got_i[s] == instant[s]);
            }
        }
    }
}

TEST_CASE("long-run averages weight the bottom components by reachability") {
    // 0 -> component {1,2} with probability 1/3, absorbing 3 with 2/3.
    // {1,2} alternates, subject holds on state 1 only; 3 satisfies it.
    ChainSpec spec;
    spec.rows = {
        {{1, Rational(1, 3)}, {3, Rational(2, 3)}},
        {{2, Rational(1)}},
        {{1, Rational(1)}},
        {{3, Rational(1)}},
    };
    spec.labels = {{"up", {1, 3}}};
    auto model = make_chain<Rational>(spec);

    std::vector<Rational> lra = values_of(model, "LRA=? [ \"up\" ]");
    CHECK(lra[1] == Rational(1, 2));
    CHECK(lra[2] == Rational(1, 2));
    CHECK(lra[3] == Rational(1));
    CHECK(lra[0] == Rational(1, 3) * Rational(1, 2) + Rational(2, 3));

    // S is the same quantity on a discrete-time chain.
    CHECK(values_of(model, "S=? [ \"up\" ]") == lra);

    auto approx = make_chain<double>(spec);
    CHECK(at_init(approx, "LRA=? [ \"up\" ]") == doctest::Approx(lra[0].get_d()).epsilon(1e-6));
}

TEST_CASE("long-run averages are harmonic and agree with reachability on absorbing chains") {
    std::mt19937 rng(51992);
    for (int round = 0; round < 30; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 8);
        auto model = make_chain<Rational>(spec);
        std::vector<Rational> y = values_of(model, "LRA=? [ \"a\" ]");
        for (index_t s = 0; s < model.num_states(); ++s) {
            CAPTURE(s);
            CHECK(y[s] >= Rational(0));
            CHECK(y[s] <= Rational(1));
            Rational expect(0);
            for (index_t e = model.matrix.row_begin(s); e < model.matrix.row_end(s); ++e)
                expect += model.matrix.value(e) * y[model.matrix.col(e)];
            CHECK(y[s] == expect);
        }
    }

    // On the die, every bottom component is a single outcome, so the
    // long-run average of a face is its reachability probability.
    auto die = make_chain<Rational>(die_spec());
    CHECK(at_init(die, "LRA=? [ \"six\" ]") == Rational(1, 6));
    CHECK(at_init(die, "S=? [ \"odd\" ]") == Rational(1, 2));
}

TEST_CASE("conditional probabilities divide the joint by the condition") {
    auto die = make_chain<Rational>(die_spec());
    CHECK(at_init(die, "P=? [ F \"one\" || F \"odd\" ]") == Rational(1, 3));
    CHECK(at_init(die, "P=? [ F \"odd\" || F \"odd\" ]") == Rational(1));
    CHECK(at_init(die, "P=? [ F \"done\" || F \"six\" ]") == Rational(1));

    // Conditioning on a sure condition changes nothing.
    std::mt19937 rng(61200);
    for (int round = 0; round < 15; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 6);
        auto model = make_chain<Rational>(spec);
        std::vector<Rational> plain = values_of(model, "P=? [ \"a\" U \"b\" ]");
        std::vector<Rational> conditioned = values_of(model, "P=? [ \"a\" U \"b\" || F true ]");
        for (index_t s = 0; s < model.num_states(); ++s) {
            CAPTURE(s);
            CHECK(plain[s] == conditioned[s]);
        }
    }
}

TEST_CASE("a condition that cannot hold in the initial state is rejected") {
    // State 0 can only reach the left sink 1; the right sink 2 is unreachable.
    ChainSpec spec;
    spec.rows = {
        {{1, Rational(1)}},
        {{1, Rational(1)}},
        {{2, Rational(1)}},
    };
    spec.labels = {{"left", {1}}, {"right", {2}}};
    auto model = make_chain<Rational>(spec);

    CHECK_THROWS_WITH_AS(run(model, "P=? [ F \"left\" || F \"right\" ]"),
                         doctest::Contains("condition has probability zero"), CheckError);

    // When both sinks are reachable the condition has positive probability
    // in the initial state. Reaching the right sink excludes the left one,
    // so the conditional probability there is zero; in the left sink the
    // condition fails entirely, which only warns since it is not initial.
    ChainSpec reachable = spec;
    reachable.rows[0] = {{1, Rational(1, 2)}, {2, Rational(1, 2)}};
    auto model2 = make_chain<Rational>(reachable);
    auto result = run(model2, "P=? [ F \"left\" || F \"right\" ]");
    CHECK(result.values[0] == Rational(0));
    CHECK(result.values[1] == Rational(0));
    CHECK(result.values[2] == Rational(0));
    CHECK(!result.warnings.empty());
}

TEST_CASE("unbounded continuous-time analysis runs on the jump chain") {
    // 0 -(rate 2)-> 1, 0 -(rate 1)-> 2; both absorbing.
    ChainSpec spec;
    spec.continuous = true;
    spec.rows = {
        {{1, Rational(2)}, {2, Rational(1)}},
        {},
        {},
    };
    spec.labels = {{"goal", {1}}, {"trap", {2}}};
    auto model = make_chain<Rational>(spec);

    CHECK(at_init(model, "P=? [ F \"goal\" ]") == Rational(2, 3));
    CHECK(at_init(model, "P=? [ X \"goal\" ]") == Rational(2, 3));

    // Expected time to absorption: the sojourn in state 0 is 1/(2+1).
    ChainSpec timed = spec;
    timed.labels["end"] = {1, 2};
    timed.state_rewards["time"] = {Rational(1), Rational(0), Rational(0)};
    auto timed_model = make_chain<Rational>(timed);
    auto result = run(timed_model, "R{\"time\"}=? [ F \"end\" ]");
    CHECK(result.values[0] == Rational(1, 3));
    CHECK(!result.infinite.any());

    // Reaching the trap specifically is not certain, so the expected time
    // to it diverges everywhere the trap can be missed.
    auto diverging = run(timed_model, "R{\"time\"}=? [ F \"trap\" ]");
    CHECK(diverging.infinite_at(0));
    CHECK(diverging.infinite_at(1));
    CHECK(!diverging.infinite_at(2));
    CHECK(diverging.values[2] == Rational(0));
}

TEST_CASE("continuous-time steady state weights sojourn times") {
    // 0 <-> 1 with rates 1 and 3: the slow state holds 3/4 of the time.
    ChainSpec spec;
    spec.continuous = true;
    spec.rows = {
        {{1, Rational(1)}},
        {{0, Rational(3)}},
    };
    spec.labels = {{"slow", {0}}};
    auto model = make_chain<Rational>(spec);
    CHECK(at_init(model, "S=? [ \"slow\" ]") == Rational(3, 4));
    CHECK(at_init(model, "LRA=? [ \"slow\" ]") == Rational(3, 4));

    auto approx = make_chain<double>(spec);
    CHECK(at_init(approx, "S=? [ \"slow\" ]") == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("time-bounded reachability follows the exponential law") {
    for (Rational rate : {Rational(1), frac(5, 2)}) {
        CAPTURE(rate.get_d());
        ChainSpec spec;
        spec.continuous = true;
        spec.rows = {{{1, rate}}, {}};
        spec.labels = {{"goal", {1}}};
        auto model = make_chain<double>(spec);
        CheckOptions tight;
        tight.precision = 1e-12;
        for (double t : {0.0, 0.1, 1.0, 10.0}) {
            CAPTURE(t);
            double got = at_init(model, "P=? [ F<=" + std::to_string(t) + " \"goal\" ]", tight);
            double want = 1.0 - std::exp(-rate.get_d() * t);
            CHECK(std::abs(got - want) <= 1e-9);
        }
    }
}

namespace {

// Dense matrix exponential in long double by scaling and squaring with a
// Taylor series, for small matrices only.
std::vector<std::vector<long double>> dense_expm(std::vector<std::vector<long double>> A) {
    std::size_t n = A.size();
    long double norm = 0;
    for (auto const& row : A) {
        long double sum = 0;
        for (long double v : row) sum += std::abs(v);
        norm = std::max(norm, sum);
    }
    int squarings = 0;
    while (norm > 0.5) {
        norm /= 2;
        ++squarings;
    }
    long double scale = std::pow(2.0L, -squarings);
    for (auto& row : A)
        for (auto& v : row) v *= scale;

    auto matmul = [n](std::vector<std::vector<long double>> const& X,
                      std::vector<std::vector<long double>> const& Y) {
        std::vector<std::vector<long double>> Z(n, std::vector<long double>(n, 0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t j = 0; j < n; ++j) Z[i][j] += X[i][k] * Y[k][j];
        return Z;
    };

    std::vector<std::vector<long double>> result(n, std::vector<long double>(n, 0));
    for (std::size_t i = 0; i < n; ++i) result[i][i] = 1;
    std::vector<std::vector<long double>> term = result;
    for (int k = 1; k <= 25; ++k) {
        term = matmul(term, A);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                term[i][j] /= k;
                result[i][j] += term[i][j];
            }
    }
    for (int s = 0; s < squarings; ++s) result = matmul(result, result);
    return result;
}

}  // namespace

TEST_CASE("time-bounded reachability agrees with a dense matrix exponential") {
    std::mt19937 rng(24601);
    std::uniform_int_distribution<index_t> size_dist(2, 5);
    std::uniform_int_distribution<int> rate_dist(0, 8);
    std::uniform_int_distribution<int> coin(0, 2);

    for (int round = 0; round < 50; ++round) {
        CAPTURE(round);
        index_t n = size_dist(rng);
        ChainSpec spec;
        spec.continuous = true;
        spec.rows.resize(n);
        for (index_t s = 0; s < n; ++s)
            for (index_t t = 0; t < n; ++t) {
                if (s == t || coin(rng) == 0) continue;
                int r = rate_dist(rng);
                if (r > 0) spec.rows[s].push_back({t, frac(r, 2)});
            }
        std::vector<index_t> goal_states;
        for (index_t s = 0; s < n; ++s)
            if (coin(rng) == 0) goal_states.push_back(s);
        if (goal_states.empty()) goal_states.push_back(n - 1);
        spec.labels = {{"goal", goal_states}};

        auto model = make_chain<double>(spec);
        Bitset goal = model.labeling.states("goal");

        // Generator matrix with goal states made absorbing.
        std::vector<std::vector<long double>> Q(n, std::vector<long double>(n, 0));
        for (index_t s = 0; s < n; ++s) {
            if (goal.get(s)) continue;
            for (auto const& [t, rate] : spec.rows[s]) {
                Q[s][t] += static_cast<long double>(rate.get_d());
                Q[s][s] -= static_cast<long double>(rate.get_d());
            }
        }

        CheckOptions tight;
        tight.precision = 1e-9;
        for (double t : {0.3, 1.7}) {
            CAPTURE(t);
            auto Qt = Q;
            for (auto& row : Qt)
                for (auto& v : row) v *= t;
            auto E = dense_expm(Qt);
            std::vector<double> got =
                values_of(model, "P=? [ F<=" + std::to_string(t) + " \"goal\" ]", tight);
            for (index_t s = 0; s < n; ++s) {
                long double want = 0;
                for (index_t g = 0; g < n; ++g)
                    if (goal.get(g)) want += E[s][g];
                CAPTURE(s);
                CHECK(std::abs(got[s] - static_cast<double>(want)) <= 1e-7);
            }
        }
    }
}

TEST_CASE("time-bounded probabilities are monotone in the deadline") {
    std::mt19937 rng(7341);
    std::uniform_int_distribution<int> rate_dist(1, 6);
    for (int round = 0; round < 10; ++round) {
        CAPTURE(round);
        ChainSpec spec;
        spec.continuous = true;
        spec.rows = {
            {{1, Rational(rate_dist(rng))}, {2, Rational(rate_dist(rng))}},
            {{0, Rational(rate_dist(rng))}, {3, Rational(rate_dist(rng))}},
            {{3, Rational(rate_dist(rng))}},
            {},
        };
        spec.labels = {{"goal", {3}}};
        auto model = make_chain<double>(spec);
        CheckOptions tight;
        tight.precision = 1e-10;

        std::vector<double> previous(model.num_states(), 0.0);
        for (double t : {0.0, 0.2, 0.5, 1.0, 2.0, 8.0}) {
            CAPTURE(t);
            std::vector<double> now =
                values_of(model, "P=? [ F<=" + std::to_string(t) + " \"goal\" ]", tight);
            for (index_t s = 0; s < model.num_states(); ++s) {
                CAPTURE(s);
                CHECK(now[s] >= previous[s] - 1e-9);
            }
            previous = std::move(now);
        }
        std::vector<double> unbounded = values_of(model, "P=? [ F \"goal\" ]", tight);
        for (index_t s = 0; s < model.num_states(); ++s)
            CHECK(previous[s] <= unbounded[s] + 1e-8);
    }
}

TEST_CASE("thresholds and nested operators evaluate per state") {
    auto die = make_chain<Rational>(die_spec());

    auto at_least = run(die, "P>=0.15 [ F \"six\" ]");
    REQUIRE(at_least.is_boolean);
    CHECK(at_least.truth_at(die.first_initial_state()));
    CHECK(at_least.truth_at(12));
    CHECK(!at_least.truth_at(7));
    CHECK(at_least.values[0] == Rational(1, 6));  // the numbers come along

    auto more = run(die, "P>0.2 [ F \"six\" ]");
    CHECK(!more.truth_at(die.first_initial_state()));

    // Inner operator: states giving six with probability at least one half.
    CHECK(at_init(die, "P=? [ F (P>=0.5 [ F \"six\" ]) ]") == Rational(1, 4));

    // Plain boolean state formulas work without any operator.
    auto plain = run(die, "\"done\" | \"six\"");
    REQUIRE(plain.is_boolean);
    CHECK(plain.truth_at(7));
    CHECK(!plain.truth_at(0));

    CHECK_THROWS_WITH_AS(run(die, "P=? [ F (P=? [ F \"six\" ]) ]"),
                         doctest::Contains("outermost"), CheckError);
}

TEST_CASE("deterministic models reject or ignore direction annotations") {
    auto die = make_chain<Rational>(die_spec());
    CHECK_THROWS_WITH_AS(run(die, "Pmax=? [ F \"six\" ]"),
                         doctest::Contains("nondeterministic"), CheckError);

    CheckOptions lenient;
    lenient.allow_direction_on_deterministic = true;
    auto result = run(die, "Pmax=? [ F \"six\" ]", lenient);
    CHECK(result.values[die.first_initial_state()] == Rational(1, 6));
    CHECK(!result.warnings.empty());
}

TEST_CASE("unsupported continuous-time combinations are rejected clearly") {
    ChainSpec spec;
    spec.continuous = true;
    spec.rows = {{{1, Rational(1)}}, {}};
    spec.labels = {{"goal", {1}}};
    spec.state_rewards = {{"r", {Rational(1), Rational(0)}}};
    auto exact = make_chain<Rational>(spec);
    auto approx = make_chain<double>(spec);

    CHECK_THROWS_WITH_AS(run(exact, "P=? [ F<=1 \"goal\" ]"),
                         doctest::Contains("exact arithmetic"), CheckError);
    CHECK_THROWS_WITH_AS(run(approx, "R=? [ C<=3 ]"), doctest::Contains("discrete time"),
                         CheckError);
    CHECK_THROWS_WITH_AS(run(approx, "R=? [ I=3 ]"), doctest::Contains("discrete time"),
                         CheckError);
    CHECK_THROWS_WITH_AS(run(approx, "P=? [ F<=-0.5 \"goal\" ]"),
                         doctest::Contains("nonnegative"), CheckError);

    auto die = make_chain<Rational>(die_spec());
    CHECK_THROWS_WITH_AS(run(die, "P=? [ F<=2.5 \"done\" ]"),
                         doctest::Contains("nonnegative integers"), CheckError);
}

TEST_CASE("floating-point and exact checking agree on random chains") {
    std::mt19937 rng(140286);
    for (int round = 0; round < 25; ++round) {
        CAPTURE(round);
        ChainSpec spec = random_chain(rng, 8);
        auto exact = make_chain<Rational>(spec);
        auto approx = make_chain<double>(spec);

        for (std::string const& prop :
             {std::string("P=? [ \"a\" U \"b\" ]"), std::string("LRA=? [ \"a\" ]")}) {
            CAPTURE(prop);
            std::vector<Rational> want = values_of(exact, prop);
            std::vector<double> got = values_of(approx, prop);
            for (index_t s = 0; s < exact.num_states(); ++s) {
                CAPTURE(s);
                CHECK(std::abs(got[s] - want[s].get_d()) <= 1e-5);
            }
        }

        auto want = run(exact, "R=? [ F \"b\" ]");
        auto got = run(approx, "R=? [ F \"b\" ]");
        for (index_t s = 0; s < exact.num_states(); ++s) {
            CAPTURE(s);
            CHECK(want.infinite_at(s) == got.infinite_at(s));
            if (want.infinite_at(s)) {
                CHECK(std::isinf(got.values[s]));
            } else {
                double scale = 1.0 + std::abs(want.values[s].get_d());
                CHECK(std::abs(got.values[s] - want.values[s].get_d()) <= 1e-5 * scale);
            }
        }
    }
}
