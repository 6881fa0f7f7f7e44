#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "squall/builder.hpp"

using namespace squall;
namespace pr = squall::prism;

namespace {

char const* die_source = R"pm(
dtmc

module die
    s : [0..7] init 0;
    d : [0..6] init 0;

    [] s = 0 -> 0.5 : (s' = 1) + 0.5 : (s' = 2);
    [] s = 1 -> 0.5 : (s' = 3) + 0.5 : (s' = 4);
    [] s = 2 -> 0.5 : (s' = 5) + 0.5 : (s' = 6);
    [] s = 3 -> 0.5 : (s' = 1) + 0.5 : (s' = 7) & (d' = 1);
    [] s = 4 -> 0.5 : (s' = 7) & (d' = 2) + 0.5 : (s' = 7) & (d' = 3);
    [] s = 5 -> 0.5 : (s' = 7) & (d' = 4) + 0.5 : (s' = 7) & (d' = 5);
    [] s = 6 -> 0.5 : (s' = 2) + 0.5 : (s' = 7) & (d' = 6);
    [] s = 7 -> (s' = 7);
endmodule

rewards "coin_flips"
    s < 7 : 1;
endrewards
)pm";

/// The row of `state` as a target->value map.
template <typename V>
std::map<index_t, V> row_of(Model<V> const& model, index_t row) {
    std::map<index_t, V> result;
    for (index_t k = model.matrix.row_offsets()[row]; k < model.matrix.row_offsets()[row + 1];
         ++k)
        result[model.matrix.col_indices()[k]] = model.matrix.values()[k];
    return result;
}

/// Integer value of variable `name` in state `state`.
long var_of(StateValuations const& valuations, index_t state, std::string const& name) {
    int slot = valuations.slot_of(name);
    REQUIRE(slot >= 0);
    Value v = valuations.value(state, static_cast<std::size_t>(slot));
    if (v.is_bool()) return v.as_bool() ? 1 : 0;
    return v.as_int().get_si();
}

}  // namespace

TEST_CASE("the die program builds into thirteen states and twenty transitions") {
    auto result = build_model<double>(pr::parse_program(die_source));
    Model<double> const& model = result.model;
    CHECK(model.num_states() == 13);
    CHECK(model.num_transitions() == 20);
    CHECK(result.stats.num_states == 13);
    CHECK(result.stats.num_transitions == 20);

    // Breadth-first discovery order, initial state first.
    CHECK(model.first_initial_state() == 0);
    CHECK(var_of(result.valuations, 0, "s") == 0);
    CHECK(var_of(result.valuations, 0, "d") == 0);
    // Discovery order of the die chambers: s = 0..6 with d = 0, then the six
    // outcomes s = 7, d = 1..6.
    for (index_t state = 0; state < 7; ++state) CHECK(var_of(result.valuations, state, "s") == state);
    for (index_t state = 7; state < 13; ++state) {
        CHECK(var_of(result.valuations, state, "s") == 7);
        CHECK(var_of(result.valuations, state, "d") == static_cast<long>(state) - 6);
    }

    // Every probability row sums to one.
    for (index_t s = 0; s < model.num_states(); ++s) {
        double sum = 0;
        for (auto const& [target, p] : row_of(model, s)) {
            (void)target;
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    // The coin-flip counting rewards: one per chamber state, zero on results.
    auto const& rewards = model.reward_model("coin_flips");
    for (index_t s = 0; s < 7; ++s) CHECK(rewards.state_reward(s) == 1.0);
    for (index_t s = 7; s < 13; ++s) CHECK(rewards.state_reward(s) == 0.0);
}

TEST_CASE("identical programs build bit-identical models") {
    auto a = build_model<double>(pr::parse_program(die_source));
    auto b = build_model<double>(pr::parse_program(die_source));
    CHECK(a.model.matrix.row_offsets() == b.model.matrix.row_offsets());
    CHECK(a.model.matrix.col_indices() == b.model.matrix.col_indices());
    CHECK(a.model.matrix.values() == b.model.matrix.values());
    CHECK(a.model.labeling.all().size() == b.model.labeling.all().size());
}

TEST_CASE("a two-state flip chain and a deadlocked chain build") {
    auto flip = build_model<double>(pr::parse_program(
        "dtmc module m x : [0..1]; [] true -> (x' = 1 - x); endmodule"));
    CHECK(flip.model.num_states() == 2);
    CHECK(flip.model.num_transitions() == 2);

    auto dead = build_model<double>(pr::parse_program(
        "dtmc module m x : [0..1]; [] x = 1 -> (x' = 1); endmodule"));
    CHECK(dead.model.num_states() == 1);
    CHECK(dead.model.num_transitions() == 1);  // the fixed self-loop
    CHECK(dead.model.labeling.states("deadlock").get(0));
    CHECK(row_of(dead.model, 0).at(0) == 1.0);
    CHECK(dead.stats.deadlocks_fixed == 1);

    BuildOptions strict;
    strict.fix_deadlocks = false;
    CHECK_THROWS_WITH_AS(build_model<double>(pr::parse_program("dtmc module m x : [0..1]; "
                                                               "[] x = 1 -> (x' = 1); "
                                                               "endmodule"),
                                             strict),
                         doctest::Contains("deadlock"), BuildError);
}

TEST_CASE("exploration agrees with a brute-force enumeration of the hypercube") {
    // Single-module programs: the reference semantics below enumerates every
    // valuation, evaluates guards and updates directly on the parse tree, and
    // restricts to states reachable from the initial valuation.
    std::vector<std::string> sources{
        "dtmc module m x : [0..4] init 2; [] x > 0 & x < 4 -> 0.5 : (x' = x - 1) + 0.5 : "
        "(x' = x + 1); [] x = 0 -> (x' = 0); [] x = 4 -> (x' = 4); endmodule",
        "dtmc module m a : [0..2] init 0; b : bool; [] a < 2 -> 0.25 : (a' = a + 1) & "
        "(b' = !b) + 0.75 : (a' = 0); [] a = 2 -> (a' = 2); endmodule",
    };
    for (auto const& source : sources) {
        CAPTURE(source);
        pr::Program program = pr::parse_program(source);
        auto result = build_model<Rational>(program);
        auto const& valuations = result.valuations;

        // Reference: per built state, evaluate each command against the
        // valuation map and merge update distributions.
        for (index_t s = 0; s < result.model.num_states(); ++s) {
            std::map<std::string, Value> env_map;
            for (std::size_t i = 0; i < valuations.num_variables(); ++i)
                env_map[valuations.layout()[i].name] = valuations.value(s, i);
            EvalEnv env;
            env.named = &env_map;

            std::map<std::string, Rational> expected;  // described target -> prob
            int enabled = 0;
            for (auto const& command : program.modules[0].commands) {
                if (!evaluate(*command.guard, env).as_bool()) continue;
                ++enabled;
                for (auto const& update : command.updates) {
                    auto target = env_map;
                    for (auto const& assignment : update.assignments)
                        target[assignment.variable] = evaluate(*assignment.value, env);
                    std::string key;
                    for (auto const& [name, value] : target) key += name + "=" + value.to_string() + ";";
                    expected[key] += evaluate(*update.weight, env).to_rational();
                }
            }
            REQUIRE(enabled == 1);  // these corpora have disjoint guards

            std::map<std::string, Rational> actual;
            for (auto const& [target, p] : row_of(result.model, s)) {
                std::map<std::string, Value> tv;
                for (std::size_t i = 0; i < valuations.num_variables(); ++i)
                    tv[valuations.layout()[i].name] = valuations.value(target, i);
                std::string key;
                for (auto const& [name, value] : tv) key += name + "=" + value.to_string() + ";";
                actual[key] += p;
            }
            CHECK(actual == expected);
        }
    }
}

TEST_CASE("synchronized commands multiply their probabilities") {
    pr::Program program = pr::parse_program(
        "mdp "
        "module a x : [0..1]; [go] x = 0 -> 0.5 : (x' = 0) + 0.5 : (x' = 1); endmodule "
        "module b y : [0..1]; [go] y = 0 -> 0.25 : (y' = 0) + 0.75 : (y' = 1); endmodule");
    auto result = build_model<Rational>(program);
    Model<Rational> const& model = result.model;
    // State 0 is (x=0, y=0); the joint action yields one row with the four
    // product outcomes 1/8, 3/8, 1/8, 3/8.
    REQUIRE(model.grouping.group_size(0) == 1);
    auto row = row_of(model, model.grouping.group_begin(0));
    REQUIRE(row.size() == 4);
    Rational sum;
    for (auto const& [target, p] : row) {
        (void)target;
        sum += p;
    }
    CHECK(sum == 1);
    // Locate (x=1, y=0): probability must be 1/2 * 1/4 = 1/8.
    for (auto const& [target, p] : row) {
        long x = var_of(result.valuations, target, "x");
        long y = var_of(result.valuations, target, "y");
        Rational expect = Rational(x == 0 ? 1 : 1, 2) * Rational(y == 0 ? 1 : 3, 4);
        CHECK(p == expect);
    }
}

TEST_CASE("an action is blocked when a declaring module has no enabled command") {
    // Module b declares [go] but never enables it, so the joint action cannot
    // fire and the initial state deadlocks (and is fixed by default).
    auto result = build_model<double>(pr::parse_program(
        "mdp "
        "module a x : [0..1]; [go] x = 0 -> (x' = 1); endmodule "
        "module b y : [0..1]; [go] y = 1 -> (y' = 1); endmodule"));
    CHECK(result.model.num_states() == 1);
    CHECK(result.model.labeling.states("deadlock").get(0));
}

TEST_CASE("overlapping dtmc commands error by default and mix uniformly on request") {
    std::string source =
        "dtmc module m x : [0..2] init 0; "
        "[] x = 0 -> (x' = 1); [] x = 0 -> (x' = 2); [] x > 0 -> (x' = x); endmodule";
    CHECK_THROWS_WITH_AS(build_model<double>(pr::parse_program(source)),
                         doctest::Contains("unique choice"), BuildError);

    BuildOptions uniform;
    uniform.dtmc_overlap = BuildOptions::DtmcOverlap::Uniform;
    auto result = build_model<Rational>(pr::parse_program(source), uniform);
    auto row = row_of(result.model, 0);
    REQUIRE(row.size() == 2);
    for (auto const& [target, p] : row) {
        (void)target;
        CHECK(p == Rational(1, 2));
    }
}

TEST_CASE("colliding update targets merge by summing") {
    auto result = build_model<Rational>(pr::parse_program(
        "dtmc module m x : [0..1]; [] true -> 0.5 : (x' = 1 - x) + 0.5 : (x' = 1 - x); "
        "endmodule"));
    auto row = row_of(result.model, 0);
    REQUIRE(row.size() == 1);
    CHECK(row.begin()->second == 1);
}

TEST_CASE("out-of-bounds assignments report the state and command") {
    CHECK_THROWS_WITH_AS(
        build_model<double>(pr::parse_program(
            "dtmc module m x : [0..3] init 3; [] true -> (x' = x + 1); endmodule")),
        doctest::Contains("outside [0..3]"), BuildError);
}

TEST_CASE("the state limit aborts exploration") {
    BuildOptions tiny;
    tiny.max_states = 4;
    CHECK_THROWS_WITH_AS(
        build_model<double>(pr::parse_program("dtmc module m x : [0..100] init 0; "
                                              "[] x < 100 -> (x' = x + 1); "
                                              "[] x = 100 -> true; endmodule"),
                            tiny),
        doctest::Contains("limit"), BuildError);
}

TEST_CASE("probability validation distinguishes float and exact builds") {
    std::string near = "dtmc module m x : [0..1]; [] true -> 0.3333333333 : (x' = 0) + "
                       "0.6666666666 : (x' = 1); endmodule";
    // Off by 1e-10: inside the float tolerance, rejected by the exact build.
    CHECK_NOTHROW(build_model<double>(pr::parse_program(near)));
    CHECK_THROWS_WITH_AS(build_model<Rational>(pr::parse_program(near)),
                         doctest::Contains("sum to"), BuildError);

    CHECK_THROWS_WITH_AS(
        build_model<double>(pr::parse_program(
            "dtmc module m x : [0..1]; [] true -> 0.5 : (x' = 0) + 0.4 : (x' = 1); "
            "endmodule")),
        doctest::Contains("sum to"), BuildError);
    CHECK_THROWS_WITH_AS(
        build_model<double>(pr::parse_program(
            "dtmc module m x : [0..1]; [] true -> -0.5 : (x' = 0) + 1.5 : (x' = 1); "
            "endmodule")),
        doctest::Contains("negative probability"), BuildError);
}

TEST_CASE("probabilities may read the current state") {
    auto result = build_model<Rational>(pr::parse_program(
        "dtmc module m x : [1..2] init 1; "
        "[] x < 3 -> x / 3 : (x' = x) + 1 - x / 3 : (x' = 2); endmodule"));
    // State 0 is x=1: stay with 1/3, move with 2/3.
    auto row = row_of(result.model, 0);
    CHECK(row.at(0) == Rational(1, 3));
    CHECK(row.at(1) == Rational(2, 3));
    // State 1 is x=2: the two branches collapse onto x=2 with 2/3 + 1/3 = 1.
    auto loop = row_of(result.model, 1);
    REQUIRE(loop.size() == 1);
    CHECK(loop.at(1) == 1);
}

TEST_CASE("ctmc rows accumulate rates and record exit rates exactly") {
    auto result = build_model<Rational>(pr::parse_program(
        "ctmc module m x : [0..2] init 1; "
        "[] x < 2 -> 3 / 2 : (x' = x + 1); [] x > 0 -> 1 / 2 : (x' = x - 1); endmodule"));
    Model<Rational> const& model = result.model;
    REQUIRE(model.num_states() == 3);
    // State 0 is x=1 with both commands enabled.
    auto row = row_of(model, 0);
    REQUIRE(row.size() == 2);
    CHECK(model.exit_rates[0] == Rational(2));
    for (index_t s = 0; s < model.num_states(); ++s) {
        Rational sum;
        for (auto const& [t, r] : row_of(model, s)) {
            (void)t;
            sum += r;
        }
        CHECK(sum == model.exit_rates[s]);
    }
}

TEST_CASE("ma builds apply maximal progress") {
    auto result = build_model<double>(pr::parse_program(
        "ma module m x : [0..2] init 0; "
        "[] x = 0 -> 0.5 : (x' = 1) + 0.5 : (x' = 2); "
        "<> x = 0 -> 9.0 : (x' = 2); "
        "<> x = 1 -> 2.0 : (x' = 2); "
        "[] x = 2 -> (x' = 2); endmodule"));
    Model<double> const& model = result.model;
    REQUIRE(model.num_states() == 3);
    // x=0 enables a probabilistic command, so its Markovian row is dropped.
    CHECK(!model.markovian_states.get(0));
    CHECK(model.exit_rates[0] == 0.0);
    CHECK(model.grouping.group_size(0) == 1);
    // x=1 is purely Markovian with exit rate 2.
    CHECK(model.markovian_states.get(1));
    CHECK(model.exit_rates[1] == 2.0);
    CHECK(model.grouping.group_size(1) == 1);
}

TEST_CASE("an init block seeds several initial states") {
    auto result = build_model<double>(pr::parse_program(
        "dtmc module m x : [0..3]; [] true -> (x' = x); endmodule "
        "init x = 1 | x = 2 endinit"));
    CHECK(result.model.num_states() == 2);
    CHECK(result.model.initial_states().count() == 2);
    CHECK(var_of(result.valuations, 0, "x") == 1);
    CHECK(var_of(result.valuations, 1, "x") == 2);
}

TEST_CASE("action rewards attach to the rows of their action") {
    auto result = build_model<Rational>(pr::parse_program(
        "mdp module m x : [0..1] init 0; "
        "[a] x = 0 -> (x' = 1); [b] x = 0 -> (x' = 0); [] x = 1 -> (x' = 1); endmodule "
        "rewards \"moves\" [a] true : 5; [b] true : 7; endrewards"));
    Model<Rational> const& model = result.model;
    auto const& rewards = model.reward_model("moves");
    REQUIRE(rewards.has_action_rewards());
    // State 0 has rows for actions a and b in alphabetical order (after any
    // silent commands, of which state 0 has none).
    index_t first = model.grouping.group_begin(0);
    CHECK(rewards.action_reward(first) == Rational(5));
    CHECK(rewards.action_reward(first + 1) == Rational(7));
    // The silent self-loop on state 1 earns nothing.
    CHECK(rewards.action_reward(model.grouping.group_begin(1)) == Rational(0));
}
