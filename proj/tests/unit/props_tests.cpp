#include <string>
#include <vector>

#include "doctest.h"
#include "squall/props.hpp"

using namespace squall;

namespace {

std::shared_ptr<OperatorFormula const> top_operator(Property const& property) {
    REQUIRE(property.formula->node == Expr::Node::Operator);
    return property.formula->op;
}

std::string printed(std::string const& text) { return to_string(parse_property(text)); }

}  // namespace

TEST_CASE("probability queries and thresholds") {
    Property p = parse_property("P=? [ F \"six\" ]");
    auto op = top_operator(p);
    CHECK(op->kind == PropOperatorKind::Probability);
    CHECK(!op->direction.has_value());
    CHECK(op->bound.is_query());
    REQUIRE(op->path != nullptr);
    CHECK(op->path->kind == PathKind::Until);
    CHECK(op->path->printed_as_eventually);
    REQUIRE(op->path->left != nullptr);
    CHECK(op->path->left->node == Expr::Node::BoolLit);
    CHECK(op->path->left->bool_value);
    CHECK(op->path->right->node == Expr::Node::Label);
    CHECK(op->path->right->name == "six");
    CHECK(op->path->upper_bound == nullptr);
    CHECK(op->path->condition == nullptr);

    Property bounded = parse_property("P>=0.9 [ F<=1.5 \"up\" ]");
    auto bop = top_operator(bounded);
    REQUIRE(bop->bound.comparison.has_value());
    CHECK(*bop->bound.comparison == BoundComparison::GreaterEq);
    REQUIRE(bop->bound.threshold != nullptr);
    CHECK(bop->bound.threshold->rat_value == Rational(9, 10));
    REQUIRE(bop->path->upper_bound != nullptr);
    CHECK(bop->path->upper_bound->rat_value == Rational(3, 2));
}

TEST_CASE("direction annotations") {
    auto max = top_operator(parse_property("Pmax=? [ \"a\" U<=3 \"b\" ]"));
    REQUIRE(max->direction.has_value());
    CHECK(*max->direction == OptimizationDirection::Max);
    CHECK(max->path->kind == PathKind::Until);
    CHECK(!max->path->printed_as_eventually);
    CHECK(max->path->left->name == "a");
    CHECK(max->path->upper_bound->int_value == 3);

    auto min = top_operator(parse_property("Pmin=? [ G \"safe\" ]"));
    REQUIRE(min->direction.has_value());
    CHECK(*min->direction == OptimizationDirection::Min);
    CHECK(min->path->kind == PathKind::Globally);
    CHECK(min->path->left == nullptr);

    auto after_braces = top_operator(parse_property("R{\"time\"}min=? [ F \"done\" ]"));
    CHECK(after_braces->kind == PropOperatorKind::Reward);
    CHECK(after_braces->reward_model == "time");
    REQUIRE(after_braces->direction.has_value());
    CHECK(*after_braces->direction == OptimizationDirection::Min);
    CHECK(after_braces->reward_path.kind == RewardPath::Kind::Reach);
    CHECK(after_braces->reward_path.target->name == "done");

    CHECK_THROWS_WITH_AS(parse_property("Rmax{\"t\"}max=? [ F \"done\" ]"),
                         doctest::Contains("direction given twice"), ParseError);
    CHECK_THROWS_WITH_AS(parse_property("P{\"t\"}=? [ F \"done\" ]"),
                         doctest::Contains("only the R operator"), ParseError);
}

TEST_CASE("reward accumulation forms") {
    auto cumulative = top_operator(parse_property("R=? [ C<=10 ]"));
    CHECK(cumulative->reward_path.kind == RewardPath::Kind::Cumulative);
    CHECK(cumulative->reward_path.bound->int_value == 10);
    CHECK(cumulative->reward_path.target == nullptr);

    auto instant = top_operator(parse_property("R=? [ I=7 ]"));
    CHECK(instant->reward_path.kind == RewardPath::Kind::Instant);
    CHECK(instant->reward_path.bound->int_value == 7);

    CHECK_THROWS_WITH_AS(parse_property("R=? [ S ]"),
                         doctest::Contains("long-run rewards are written LRA"), ParseError);
    CHECK_THROWS_WITH_AS(parse_property("R=? [ X \"a\" ]"),
                         doctest::Contains("expected 'F goal', 'C<=k' or 'I=k'"), ParseError);
}

TEST_CASE("long-run and steady-state operators") {
    auto lra = top_operator(parse_property("LRA=? [ \"busy\" ]"));
    CHECK(lra->kind == PropOperatorKind::LongRunAverage);
    CHECK(lra->state->node == Expr::Node::Label);
    CHECK(lra->state->name == "busy");

    auto steady = top_operator(parse_property("S=? [ \"full\" ]"));
    CHECK(steady->kind == PropOperatorKind::SteadyState);
    CHECK(steady->state->name == "full");

    auto lramax = top_operator(parse_property("LRAmax=? [ \"busy\" ]"));
    REQUIRE(lramax->direction.has_value());
    CHECK(*lramax->direction == OptimizationDirection::Max);
}

TEST_CASE("time intervals normalize to upper bounds") {
    auto interval = top_operator(parse_property("P=? [ \"a\" U[0,3] \"b\" ]"));
    REQUIRE(interval->path->upper_bound != nullptr);
    CHECK(interval->path->upper_bound->int_value == 3);
    CHECK(printed("P=? [ \"a\" U[0,3] \"b\" ]") == "P=? [ \"a\" U<=3 \"b\" ]");

    CHECK_THROWS_WITH_AS(parse_property("P=? [ \"a\" U[1,3] \"b\" ]"),
                         doctest::Contains("the lower time bound must be zero"), ParseError);
    CHECK_THROWS_WITH_AS(parse_property("P=? [ \"a\" W<=3 \"b\" ]"),
                         doctest::Contains("'W' cannot carry a time bound"), ParseError);
}

TEST_CASE("weak until and globally") {
    auto weak = top_operator(parse_property("P>=1 [ \"a\" W \"b\" ]"));
    CHECK(weak->path->kind == PathKind::WeakUntil);
    CHECK(weak->path->left->name == "a");
    CHECK(weak->path->right->name == "b");

    auto globally = top_operator(parse_property("P<0.1 [ G<=4 \"ok\" ]"));
    CHECK(globally->path->kind == PathKind::Globally);
    CHECK(globally->path->upper_bound->int_value == 4);
    REQUIRE(globally->bound.comparison.has_value());
    CHECK(*globally->bound.comparison == BoundComparison::Less);
}

TEST_CASE("conditional probabilities") {
    auto cond = top_operator(parse_property("P=? [ F \"goal\" || F \"cond\" ]"));
    REQUIRE(cond->path->condition != nullptr);
    CHECK(cond->path->printed_as_eventually);
    CHECK(cond->path->right->name == "goal");
    CHECK(cond->path->condition->kind == PathKind::Until);
    CHECK(cond->path->condition->right->name == "cond");

    auto mixed = top_operator(parse_property("P=? [ \"a\" U \"b\" || G \"c\" ]"));
    CHECK(mixed->path->kind == PathKind::Until);
    CHECK(mixed->path->condition->kind == PathKind::Globally);
}

TEST_CASE("operators nest inside state formulas") {
    Property p = parse_property("P>=0.5 [ F \"a\" ] | \"b\"");
    REQUIRE(p.formula->node == Expr::Node::Binary);
    CHECK(p.formula->binary_kind == BinaryKind::Or);
    CHECK(p.formula->children[0]->node == Expr::Node::Operator);
    CHECK(p.formula->children[1]->node == Expr::Node::Label);

    Property nested = parse_property("P=? [ F (P>=0.5 [ X \"a\" ] & \"b\") ]");
    auto outer = top_operator(nested);
    ExprPtr target = outer->path->right;
    REQUIRE(target->node == Expr::Node::Binary);
    CHECK(target->children[0]->node == Expr::Node::Operator);
    CHECK(target->children[0]->op->path->kind == PathKind::Next);

    // Operator names without operator syntax stay ordinary identifiers.
    Property ident = parse_property("S + 1 < 2");
    CHECK(ident.formula->node == Expr::Node::Binary);
    CHECK(ident.formula->children[0]->children[0]->name == "S");
}

TEST_CASE("printing is parse-stable") {
    for (auto const* text : {
             "P=? [ F \"six\" ]",
             "Pmax=? [ \"a\" U<=3 \"b\" ]",
             "P>=0.9 [ F<=1.5 \"up\" ]",
             "Pmin=? [ X \"step\" ]",
             "P<0.05 [ G \"safe\" ]",
             "P>0.5 [ \"a\" W \"b\" ]",
             "R{\"time\"}min=? [ F \"done\" ]",
             "R=? [ C<=10 ]",
             "R=? [ I=7 ]",
             "LRA=? [ \"busy\" ]",
             "LRAmin=? [ \"busy\" ]",
             "S=? [ \"full\" ]",
             "P=? [ F \"goal\" || F \"cond\" ]",
             "P=? [ F (\"a\" & x < 3) ]",
         }) {
        CAPTURE(text);
        std::string once = printed(text);
        CHECK(printed(once) == once);
    }

    CHECK(printed("P=? [ F \"six\" ]") == "P=? [ F \"six\" ]");
    CHECK(printed("R{\"time\"}min=? [ F \"done\" ]") == "R{\"time\"}min=? [ F \"done\" ]");
    CHECK(printed("P>=0.9 [ F<=1.5 \"up\" ]") == "P>=0.9 [ F<=1.5 \"up\" ]");
}

TEST_CASE("property lists with names and comments") {
    auto properties = parse_properties(R"(
        // reachability of the final faces
        "goal": P=? [ F "six" ];
        P>=0.5 [ X "even" ];

        "cost": R=? [ C<=8 ]
    )");
    REQUIRE(properties.size() == 3);
    CHECK(properties[0].name == "goal");
    CHECK(properties[1].name.empty());
    CHECK(properties[2].name == "cost");
    CHECK(top_operator(properties[0])->kind == PropOperatorKind::Probability);
    CHECK(top_operator(properties[2])->kind == PropOperatorKind::Reward);
}

TEST_CASE("parse errors carry a useful message") {
    CHECK_THROWS_WITH_AS(parse_property("P=? [ F \"a\" ] extra"),
                         doctest::Contains("trailing input"), ParseError);
    CHECK_THROWS_WITH_AS(parse_property("R{\"t\"} [ F \"a\" ]"),
                         doctest::Contains("expected a threshold"), ParseError);
    CHECK_THROWS_WITH_AS(parse_property("P=? [ \"a\" \"b\" ]"),
                         doctest::Contains("expected 'U' or 'W'"), ParseError);
    CHECK_THROWS_AS(parse_property("P=? [ F \"a\""), ParseError);
    CHECK_THROWS_AS(parse_property(""), ParseError);
}
