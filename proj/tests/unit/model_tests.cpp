#include "doctest.h"
#include "squall/model.hpp"
#include "squall/rational.hpp"

using namespace squall;

namespace {

Model<double> tiny_chain() {
    Model<double> m;
    m.kind = ModelKind::Dtmc;
    MatrixBuilder<double> b(2, 2);
    b.add(0, 0, 0.5);
    b.add(0, 1, 0.5);
    b.add(1, 1, 1.0);
    m.matrix = b.build();
    m.grouping = RowGrouping::trivial(2);
    m.labeling = StateLabeling(2);
    m.labeling.add_to_label("init", 0);
    return m;
}

}  // namespace

TEST_CASE("labeling reserves init and deadlock") {
    StateLabeling l(3);
    CHECK(l.has_label("init"));
    CHECK(l.has_label("deadlock"));
    CHECK(l.states("init").none());
    CHECK_THROWS_AS(l.states("goal"), InputError);

    l.add_to_label("goal", 2);
    CHECK(l.states("goal").get(2));
    CHECK(l.states("goal").count() == 1);
}

TEST_CASE("a well-formed chain validates") {
    Model<double> m = tiny_chain();
    m.validate();
    CHECK(m.num_states() == 2);
    CHECK(m.num_transitions() == 3);
    CHECK(m.first_initial_state() == 0);
}

TEST_CASE("probability rows must sum to one") {
    Model<double> m = tiny_chain();
    MatrixBuilder<double> b(2, 2);
    b.add(0, 0, 0.5);
    b.add(0, 1, 0.4);
    b.add(1, 1, 1.0);
    m.matrix = b.build();
    CHECK_THROWS_AS(m.validate(), InputError);
    // A generous tolerance admits the same matrix.
    m.validate(0.2);
}

TEST_CASE("exact models validate row sums with no slack at all") {
    Model<Rational> m;
    m.kind = ModelKind::Dtmc;
    MatrixBuilder<Rational> b(1, 1);
    b.add(0, 0, Rational(999999999, 1000000000));
    m.matrix = b.build();
    m.grouping = RowGrouping::trivial(1);
    m.labeling = StateLabeling(1);
    m.labeling.add_to_label("init", 0);
    CHECK_THROWS_AS(m.validate(), InputError);

    MatrixBuilder<Rational> b2(1, 1);
    b2.add(0, 0, Rational(1));
    m.matrix = b2.build();
    m.validate();
}

TEST_CASE("continuous-time models record exit rates") {
    Model<double> m;
    m.kind = ModelKind::Ctmc;
    MatrixBuilder<double> b(2, 2);
    b.add(0, 1, 3.0);
    b.add(1, 0, 0.5);
    b.add(1, 1, 1.5);
    m.matrix = b.build();
    m.grouping = RowGrouping::trivial(2);
    m.labeling = StateLabeling(2);
    m.labeling.add_to_label("init", 0);
    m.exit_rates = {3.0, 2.0};
    m.validate();

    m.exit_rates = {3.0, 1.0};
    CHECK_THROWS_AS(m.validate(), InputError);
}

TEST_CASE("markov automata separate probabilistic and timed states") {
    Model<double> m;
    m.kind = ModelKind::Ma;
    // State 0: two probabilistic choices; state 1: one Markovian row.
    MatrixBuilder<double> b(3, 2);
    b.add(0, 1, 1.0);
    b.add(1, 0, 0.5);
    b.add(1, 1, 0.5);
    b.add(2, 0, 1.0);
    m.matrix = b.build();
    m.grouping = RowGrouping{{0, 2, 3}};
    m.labeling = StateLabeling(2);
    m.labeling.add_to_label("init", 0);
    m.exit_rates = {0.0, 4.0};
    m.markovian_states = Bitset(2);
    m.markovian_states.set(1);
    m.validate();

    // A probabilistic state must not carry an exit rate.
    m.exit_rates = {1.0, 4.0};
    CHECK_THROWS_AS(m.validate(), InputError);
}

TEST_CASE("reward models are named and validated") {
    Model<double> m = tiny_chain();
    RewardModel<double> r;
    r.name = "steps";
    r.state_rewards = std::vector<double>{1.0, 0.0};
    m.rewards["steps"] = r;
    m.validate();
    CHECK(m.reward_model("steps").state_reward(0) == 1.0);
    CHECK(m.reward_model("").name == "steps");  // unique model needs no name
    CHECK_THROWS_AS(m.reward_model("other"), CheckError);

    m.rewards["steps"].state_rewards = std::vector<double>{-1.0, 0.0};
    CHECK_THROWS_AS(m.validate(), InputError);
}

TEST_CASE("deterministic kinds reject grouped rows") {
    Model<double> m = tiny_chain();
    m.grouping = RowGrouping{{0, 2}};  // both rows on one state
    CHECK_THROWS_AS(m.validate(), InputError);
}
