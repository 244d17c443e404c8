#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ddstl/behavior.hpp"
#include "ddstl/lti.hpp"

using namespace ddstl;

namespace {

std::vector<num::Vec> scalar_inputs(std::initializer_list<double> vals) {
    std::vector<num::Vec> u;
    for (double v : vals) u.push_back({v});
    return u;
}

}  // namespace

TEST_CASE("built-in model entries match the published matrices") {
    auto car = lti::builtin_model("car");
    CHECK(car.A(0, 1) == -0.3);
    CHECK(car.A(0, 2) == 0.3);
    CHECK(car.B(0, 0) == -0.03);
    CHECK(car.C.rows() == 1);
    CHECK(car.C(0, 0) == 1.0);
    CHECK(car.C(0, 1) == 0.0);
    CHECK(car.C(0, 2) == 0.0);
    CHECK(car.n_d() == 0);

    auto building = lti::builtin_model("building");
    CHECK(building.B(4, 0) == 0.0131);
    CHECK(building.n_x() == 5);
    CHECK(building.C.cols() == 5);  // printed with trailing zeros, stored 1x5
    CHECK(building.n_d() == 7);
    CHECK((*building.Bd)(0, 1) == 0.0340);
    CHECK((*building.Bd)(4, 6) == 0.0);

    CHECK_THROWS_WITH_AS(lti::builtin_model("boat"), doctest::Contains("car, building"),
                         std::invalid_argument);
}

TEST_CASE("car simulation: zero dynamics and a hand-computed impulse") {
    auto car = lti::builtin_model("car");
    num::Vec x0(3, 0.0);

    auto zero = lti::simulate(car, x0, scalar_inputs({0, 0, 0}));
    for (const auto& y : zero.y) CHECK(y[0] == 0.0);

    auto imp = lti::simulate(car, x0, scalar_inputs({1, 0, 0}));
    CHECK(imp.y[0][0] == doctest::Approx(0.0));
    CHECK(imp.y[1][0] == doctest::Approx(-0.03));
    CHECK(imp.y[2][0] == doctest::Approx(-0.33));
}

TEST_CASE("building simulation: zero dynamics") {
    auto b = lti::builtin_model("building");
    std::vector<num::Vec> u(4, num::Vec{0.0});
    std::vector<num::Vec> d(4, num::Vec(7, 0.0));
    auto traj = lti::simulate(b, num::Vec(5, 0.0), u, d);
    for (const auto& y : traj.y) CHECK(y[0] == 0.0);
}

TEST_CASE("simulate validates dimensions and disturbance pairing") {
    auto car = lti::builtin_model("car");
    CHECK_THROWS_AS(lti::simulate(car, num::Vec(2, 0.0), scalar_inputs({0})),
                    std::invalid_argument);
    std::vector<num::Vec> d(1, num::Vec(7, 0.0));
    CHECK_THROWS_AS(lti::simulate(car, num::Vec(3, 0.0), scalar_inputs({0}), d),
                    std::invalid_argument);
    auto building = lti::builtin_model("building");
    CHECK_THROWS_AS(lti::simulate(building, num::Vec(5, 0.0), scalar_inputs({0})),
                    std::invalid_argument);
}

TEST_CASE("superposition at zero initial state") {
    auto car = lti::builtin_model("car");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-2, 2);
    std::vector<num::Vec> u1, u2, mix;
    const double a = 1.7, b = -0.4;
    for (int t = 0; t < 12; ++t) {
        u1.push_back({dist(rng)});
        u2.push_back({dist(rng)});
        mix.push_back({a * u1.back()[0] + b * u2.back()[0]});
    }
    num::Vec x0(3, 0.0);
    auto y1 = lti::simulate(car, x0, u1).y;
    auto y2 = lti::simulate(car, x0, u2).y;
    auto ym = lti::simulate(car, x0, mix).y;
    for (int t = 0; t < 12; ++t) {
        CHECK(ym[t][0] == doctest::Approx(a * y1[t][0] + b * y2[t][0]).epsilon(1e-10));
    }
}

TEST_CASE("time invariance: delayed input gives delayed output") {
    auto car = lti::builtin_model("car");
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> dist(-1, 1);
    std::vector<num::Vec> u, delayed(3, num::Vec{0.0});
    for (int t = 0; t < 9; ++t) {
        u.push_back({dist(rng)});
        delayed.push_back(u.back());
    }
    num::Vec x0(3, 0.0);
    auto y = lti::simulate(car, x0, u).y;
    auto yd = lti::simulate(car, x0, delayed).y;
    for (int t = 0; t < 9; ++t) {
        CHECK(yd[t + 3][0] == doctest::Approx(y[t][0]).epsilon(1e-12));
    }
    for (int t = 0; t < 3; ++t) CHECK(yd[t][0] == 0.0);
}

TEST_CASE("generate_data is deterministic and respects the box") {
    auto car = lti::builtin_model("car");
    lti::Box box{{-2.0, 2.0}};
    auto a = lti::generate_data(car, 50, box, 7);
    auto b = lti::generate_data(car, 50, box, 7);
    REQUIRE(a.length() == 50);
    for (std::size_t t = 0; t < 50; ++t) {
        CHECK(a.u[t][0] == b.u[t][0]);  // bit-identical
        CHECK(a.y[t][0] == b.y[t][0]);
        CHECK(a.u[t][0] >= -2.0);
        CHECK(a.u[t][0] <= 2.0);
    }
    auto c = lti::generate_data(car, 50, box, 8);
    bool any_diff = false;
    for (std::size_t t = 0; t < 50; ++t) any_diff = any_diff || a.u[t][0] != c.u[t][0];
    CHECK(any_diff);
}

TEST_CASE("generated car data is persistently exciting at order 20") {
    auto car = lti::builtin_model("car");
    auto data = lti::generate_data(car, 200, {{-2.0, 2.0}}, 7);
    // order L+1+n_x for L+1 = 14, n_x bound 3, plus initialization depth
    auto pe = behavior::check_pe(data.u, 20);
    CHECK(pe.ok);
    CHECK(pe.achieved_rank == 20);
}

TEST_CASE("trajectory CSV round-trips exactly") {
    auto building = lti::builtin_model("building");
    lti::DisturbanceSource src;
    src.box = lti::Box(7, {0.0, 10.0});
    auto data = lti::generate_data(building, 17, {{0.0, 100.0}}, 5, src);

    std::stringstream ss;
    lti::write_csv(data, ss);
    auto back = lti::read_csv(ss);
    REQUIRE(back.length() == data.length());
    REQUIRE(back.n_d == 7);
    for (std::size_t t = 0; t < data.length(); ++t) {
        CHECK(back.u[t] == data.u[t]);  // shortest-repr printing round-trips
        CHECK(back.y[t] == data.y[t]);
        CHECK(back.d[t] == data.d[t]);
    }
}

TEST_CASE("trajectory CSV rejects malformed input") {
    std::stringstream bad1("x,u1,y1\n");
    CHECK_THROWS_AS(lti::read_csv(bad1), std::runtime_error);
    std::stringstream bad2("t,u1,y1\n0,1\n");
    CHECK_THROWS_AS(lti::read_csv(bad2), std::runtime_error);
    std::stringstream bad3("t,u1,y1\n0,1,zzz\n");
    CHECK_THROWS_AS(lti::read_csv(bad3), std::runtime_error);
}

TEST_CASE("disturbance schedules replay cyclically during generation") {
    auto building = lti::builtin_model("building");
    lti::DisturbanceSource src;
    src.schedule = std::vector<num::Vec>{num::Vec(7, 1.0), num::Vec(7, 2.0)};
    auto data = lti::generate_data(building, 5, {{0.0, 1.0}}, 3, src);
    CHECK(data.d[0][0] == 1.0);
    CHECK(data.d[1][0] == 2.0);
    CHECK(data.d[2][0] == 1.0);
    CHECK(data.d[4][0] == 1.0);
}
