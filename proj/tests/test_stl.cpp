#include <doctest.h>

#include <random>
#include <sstream>

#include "ddstl/stl.hpp"
#include "test_util.hpp"

using namespace ddstl;
using stl::Formula;
using stl::NodeKind;

TEST_CASE("parsing the safe-distance specification") {
    Formula f = stl::parse("G[5,10] (abs(y1) >= 2 and abs(y1) <= 3)", 1);
    REQUIRE(f.kind == NodeKind::Always);
    CHECK(f.a == 5);
    CHECK(f.b == 10);
    const Formula& body = f.children[0];
    REQUIRE(body.kind == NodeKind::And);
    REQUIRE(body.children.size() == 2);
    // abs(y1) >= 2 -> (y1 - 2 > 0) or (-y1 - 2 > 0)
    const Formula& lower = body.children[0];
    REQUIRE(lower.kind == NodeKind::Or);
    CHECK(lower.children[0].pred.row[0] == 1.0);
    CHECK(lower.children[0].pred.offset == -2.0);
    CHECK(lower.children[1].pred.row[0] == -1.0);
    CHECK(lower.children[1].pred.offset == -2.0);
    // abs(y1) <= 3 -> (3 - y1 > 0) and (3 + y1 > 0)
    const Formula& upper = body.children[1];
    REQUIRE(upper.kind == NodeKind::And);
    CHECK(upper.children[0].pred.row[0] == -1.0);
    CHECK(upper.children[0].pred.offset == 3.0);
    CHECK(upper.children[1].pred.row[0] == 1.0);
    CHECK(upper.children[1].pred.offset == 3.0);
}

TEST_CASE("parsing the close-distance specification") {
    Formula f = stl::parse("F[0,10] G[0,3] abs(y1) <= 2", 1);
    REQUIRE(f.kind == NodeKind::Eventually);
    CHECK(f.a == 0);
    CHECK(f.b == 10);
    REQUIRE(f.children[0].kind == NodeKind::Always);
    CHECK(f.children[0].b == 3);
    CHECK(f.children[0].children[0].kind == NodeKind::And);
}

TEST_CASE("parsing negation, implication, until, booleans") {
    Formula n = stl::parse("not (y1 > 0)", 1);
    REQUIRE(n.kind == NodeKind::Not);
    CHECK(n.children[0].kind == NodeKind::Pred);

    Formula imp = stl::parse("y1 > 1 -> y1 > 0", 1);
    REQUIRE(imp.kind == NodeKind::Or);
    CHECK(imp.children[0].kind == NodeKind::Not);

    Formula u = stl::parse("(y1 > 0) U[2,5] (y1 > 1)", 1);
    REQUIRE(u.kind == NodeKind::Until);
    CHECK(u.a == 2);
    CHECK(u.b == 5);

    CHECK(stl::parse("true", 1).kind == NodeKind::Bool);
    CHECK(stl::parse("1 > 2", 1).value == false);  // constant-folded
}

TEST_CASE("parse errors carry positions and context") {
    CHECK_THROWS_WITH_AS(stl::parse("G[5,2] y1 > 0", 1), doctest::Contains("a <= b"),
                         stl::ParseError);
    CHECK_THROWS_WITH_AS(stl::parse("y3 > 0", 2), doctest::Contains("y3"), stl::ParseError);
    CHECK_THROWS_WITH_AS(stl::parse("occ > 0", 1), doctest::Contains("occ"), stl::ParseError);
    CHECK_THROWS_AS(stl::parse("y1 >", 1), stl::ParseError);
    CHECK_THROWS_AS(stl::parse("y1 * y1 > 0", 1), stl::ParseError);
    CHECK_THROWS_AS(stl::parse("y1 > 0 extra", 1), stl::ParseError);
    try {
        stl::parse("G[1,\n  zz] y1 > 0", 1);
        CHECK(false);
    } catch (const stl::ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("schedule-bearing predicates evaluate by absolute time") {
    stl::ScheduleSet scheds;
    scheds.add({"occ", {0, 1, 1}});
    scheds.add({"tcomf", {10, 20, 30}});
    Formula f = stl::parse("occ > 0.5 -> y1 > tcomf", 1, scheds);
    std::vector<num::Vec> y = {{15.0}, {25.0}, {25.0}};
    CHECK(stl::monitor(f, y, 0));        // unoccupied, vacuously fine
    CHECK(stl::monitor(f, y, 1));        // 25 > 20
    CHECK_FALSE(stl::monitor(f, y, 2));  // 25 < 30

    std::vector<num::Vec> long_y(5, num::Vec{0.0});
    CHECK_THROWS_WITH_AS(stl::monitor(f, long_y, 4), doctest::Contains("schedule"),
                         std::runtime_error);
}

TEST_CASE("horizon follows the structural rules") {
    CHECK(stl::horizon(stl::parse("y1 > 0", 1)) == 0);
    CHECK(stl::horizon(stl::parse("G[5,10] y1 > 0", 1)) == 10);
    CHECK(stl::horizon(stl::parse("F[0,10] G[0,3] y1 > 0", 1)) == 13);
    CHECK(stl::horizon(stl::parse("not G[2,4] y1 > 0", 1)) == 4);
    CHECK(stl::horizon(stl::parse("(G[0,2] y1 > 0) U[1,6] (F[0,3] y1 > 1)", 1)) == 9);
}

TEST_CASE("monitor on the constant-band examples") {
    Formula f = stl::parse("G[5,10] (abs(y1) >= 2 and abs(y1) <= 3)", 1);
    std::vector<num::Vec> inside(13, num::Vec{2.5});
    CHECK(stl::monitor(f, inside, 0));
    std::vector<num::Vec> outside(13, num::Vec{0.0});
    CHECK_FALSE(stl::monitor(f, outside, 0));
    CHECK(stl::first_violation(f, outside, 0) == 5);  // first window index
}

TEST_CASE("monitor requires enough samples") {
    Formula f = stl::parse("G[0,4] y1 > 0", 1);
    std::vector<num::Vec> y(3, num::Vec{1.0});
    CHECK_THROWS_AS(stl::monitor(f, y, 0), std::invalid_argument);
}

TEST_CASE("monitor agrees with the quantifier-expansion oracle") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        Formula f = testutil::random_formula(rng);
        std::uniform_int_distribution<std::size_t> extra(0, 3);
        auto y = testutil::random_integer_trajectory(rng, stl::horizon(f) + 1 + extra(rng));
        CHECK(stl::monitor(f, y, 0) == testutil::oracle_eval(f, y, 0));
    }
}

TEST_CASE("verdict at t=0 only depends on the first horizon+1 samples") {
    std::mt19937_64 rng(102);
    for (int trial = 0; trial < 300; ++trial) {
        Formula f = testutil::random_formula(rng);
        const std::size_t h = stl::horizon(f);
        auto y1 = testutil::random_integer_trajectory(rng, h + 5);
        auto y2 = y1;
        for (std::size_t t = h + 1; t < y2.size(); ++t) {
            y2[t][0] = -y2[t][0] + 1;  // scramble beyond the horizon
        }
        CHECK(stl::monitor(f, y1, 0) == stl::monitor(f, y2, 0));
    }
}

TEST_CASE("De Morgan and box/diamond duality") {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 200; ++trial) {
        Formula a = testutil::random_formula(rng, 1, 5, 2);
        Formula b = testutil::random_formula(rng, 1, 5, 2);
        std::uniform_int_distribution<std::size_t> win(0, 3);
        const std::size_t wa = win(rng), wb = wa + win(rng);

        Formula lhs = stl::make_not(stl::make_and({a, b}));
        Formula rhs = stl::make_or({stl::make_not(a), stl::make_not(b)});
        Formula dual_l = stl::make_not(stl::make_eventually(wa, wb, a));
        Formula dual_r = stl::make_always(wa, wb, stl::make_not(a));

        const std::size_t need =
            std::max(std::max(stl::horizon(lhs), stl::horizon(dual_l)), stl::horizon(dual_r));
        auto y = testutil::random_integer_trajectory(rng, need + 2);
        CHECK(stl::monitor(lhs, y, 0) == stl::monitor(rhs, y, 0));
        CHECK(stl::monitor(dual_l, y, 0) == stl::monitor(dual_r, y, 0));
    }
}

TEST_CASE("until agrees with its always/eventually/unbounded-until decomposition") {
    std::mt19937_64 rng(104);
    for (int trial = 0; trial < 300; ++trial) {
        Formula a = testutil::random_formula(rng, 1, 4, 1);
        Formula b = testutil::random_formula(rng, 1, 4, 1);
        std::uniform_int_distribution<std::size_t> win(0, 3);
        const std::size_t wa = win(rng), wb = wa + win(rng);
        Formula u = stl::make_until(wa, wb, a, b);

        auto y = testutil::random_integer_trajectory(rng, stl::horizon(u) + 1);
        const std::size_t last = y.size() - 1;

        // box [0,a] left AND diamond [a,b] right AND witness chain from a.
        bool box = true;
        for (std::size_t i = 0; i <= std::min(wa, last); ++i) {
            box = box && stl::monitor(a, y, i) == true;
        }
        Formula ev = stl::make_eventually(wa, wb, b);
        bool chain = false;
        for (std::size_t w = std::min(wa, last); w <= last && !chain; ++w) {
            if (!testutil::oracle_eval(b, y, w)) continue;
            bool prefix = true;
            for (std::size_t s = std::min(wa, last); s < w; ++s) {
                prefix = prefix && testutil::oracle_eval(a, y, s);
            }
            chain = prefix;
        }
        const bool expected = box && stl::monitor(ev, y, 0) && chain;
        CHECK(stl::monitor(u, y, 0) == expected);
    }
}

TEST_CASE("print/parse round-trip is structurally exact") {
    std::mt19937_64 rng(105);
    for (int trial = 0; trial < 300; ++trial) {
        Formula f = testutil::random_formula(rng);
        Formula back = stl::parse(stl::to_text(f), 1);
        CHECK(stl::structurally_equal(f, back));
    }
    // with schedules in predicates
    stl::ScheduleSet scheds;
    scheds.add({"occ", {0, 1}});
    Formula f = stl::parse("G[0,1] (occ > 0.5 -> y1 > 2*occ + 0.5)", 1, scheds);
    Formula back = stl::parse(stl::to_text(f), 1, scheds);
    CHECK(stl::structurally_equal(f, back));
}

TEST_CASE("schedule CSV loading") {
    std::stringstream ss("t,value\n0,1.5\n1,2.5\n2,3.5\n");
    auto s = stl::read_schedule_csv(ss, "comfort");
    CHECK(s.name == "comfort");
    REQUIRE(s.values.size() == 3);
    CHECK(s.values[2] == 3.5);

    std::stringstream gap("t,value\n0,1\n2,3\n");
    CHECK_THROWS_AS(stl::read_schedule_csv(gap, "x"), std::runtime_error);
}
