#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ddstl/cases.hpp"
#include "ddstl/synthesis.hpp"

using namespace ddstl;
using synthesis::SynthStatus;

namespace {

lti::Trajectory band_init(std::initializer_list<double> u, std::initializer_list<double> y) {
    lti::Trajectory w;
    w.n_u = 1;
    w.n_y = 1;
    for (double v : u) w.u.push_back({v});
    for (double v : y) w.y.push_back({v});
    return w;
}

}  // namespace

TEST_CASE("compute_L follows the horizon") {
    CHECK(synthesis::compute_L(stl::parse("G[5,10] y1 > 0", 1)) == 10);
    CHECK(synthesis::compute_L(stl::parse("y1 > 0", 1)) == 0);
    CHECK(synthesis::compute_L(stl::parse("F[0,10] G[0,3] abs(y1) <= 2", 1)) == 13);
}

TEST_CASE("scenario 1 is feasible for both costs and the output hits the band") {
    auto cs = cases::scenario1();
    auto data = cs.generate(1);
    auto phi = cs.spec();
    for (auto kind : {milp::CostKind::InputNorm, milp::CostKind::OutputNorm}) {
        auto cfg = cs.config;
        cfg.cost.kind = kind;
        auto res = synthesis::synthesize(data, cs.w_ini, phi, cfg);
        REQUIRE(res.status == SynthStatus::Feasible);
        CHECK(res.L == 10);  // horizon of the always window
        CHECK(res.u_opt.size() == 11);
        CHECK(res.pe.ok);
        CHECK(res.init_snap_distance > 0);       // published values are rounded
        CHECK(res.init_snap_distance < 1e-4);
        CHECK(res.behavioral_residual <= 1e-6);
        CHECK(res.big_m_ok);
        for (std::size_t t = 5; t <= 10; ++t) {
            const double a = std::abs(res.y_pred[t][0]);
            CHECK(a >= 2.0 - 1e-6);
            CHECK(a <= 3.0 + 1e-6);
        }
        for (const auto& u : res.u_opt) {
            CHECK(u[0] >= -2.0 - 1e-9);
            CHECK(u[0] <= 2.0 + 1e-9);
        }
        auto ver = synthesis::verify_closed_loop(cs.model, res.w_ini_used, res.u_opt, phi);
        CHECK(ver.satisfied);
        for (std::size_t t = 0; t <= res.L; ++t) {
            CHECK(std::abs(ver.y[t][0] - res.y_pred[t][0]) <= 1e-6);
        }
    }
}

TEST_CASE("scenario 1 with exact pinning of the rounded initialization is infeasible") {
    auto cs = cases::scenario1();
    auto data = cs.generate(1);
    auto cfg = cs.config;
    cfg.init_snap_tol = 0.0;  // demand exact consistency
    auto res = synthesis::synthesize(data, cs.w_ini, cs.spec(), cfg);
    CHECK(res.status == SynthStatus::Infeasible);
}

TEST_CASE("scenario 2 is feasible for both costs with a held window") {
    auto cs = cases::scenario2();
    auto data = cs.generate(1);
    auto phi = cs.spec();
    for (auto kind : {milp::CostKind::InputNorm, milp::CostKind::OutputNorm}) {
        auto cfg = cs.config;
        cfg.cost.kind = kind;
        auto res = synthesis::synthesize(data, cs.w_ini, phi, cfg);
        REQUIRE(res.status == SynthStatus::Feasible);
        bool window_found = false;
        for (std::size_t s = 0; s <= 10 && !window_found; ++s) {
            bool all = true;
            for (std::size_t t = s; t <= s + 3; ++t) {
                all = all && std::abs(res.y_pred[t][0]) <= 2.0 + 1e-6;
            }
            window_found = all;
        }
        CHECK(window_found);
        auto ver = synthesis::verify_closed_loop(cs.model, res.w_ini_used, res.u_opt, phi);
        CHECK(ver.satisfied);
    }
}

TEST_CASE("an unreachable band is infeasible through both paths") {
    auto cs = cases::scenario1();
    auto data = cs.generate(2);
    auto phi = stl::parse("G[0,5] y1 > 1000000", 1);
    auto res = synthesis::synthesize(data, cs.w_ini, phi, cs.config);
    CHECK(res.status == SynthStatus::Infeasible);
    auto mres = synthesis::model_based_synthesize(cs.model, cs.w_ini, phi, cs.config);
    CHECK(mres.status == SynthStatus::Infeasible);
}

TEST_CASE("verification flags a do-nothing controller against scenario 1") {
    auto cs = cases::scenario1();
    std::vector<num::Vec> u_zero(14, num::Vec{0.0});
    // An initialization at rest far from the band: the output stays at 5.
    auto rest = band_init({0, 0, 0}, {5, 5, 5});
    auto ver = synthesis::verify_closed_loop(cs.model, rest, u_zero, cs.spec());
    CHECK_FALSE(ver.satisfied);
    REQUIRE(ver.t_fail.has_value());
    CHECK(*ver.t_fail == 5);  // earliest obligation in the window
}

TEST_CASE("vacuously easy predicate on the zero model is satisfied") {
    auto zero_model = lti::StateSpaceModel::make(num::Matrix(1, 1), num::Matrix(1, 1),
                                                 num::Matrix(1, 1));
    auto w = band_init({0}, {0});
    std::vector<num::Vec> u(1, num::Vec{0.0});
    auto ver = synthesis::verify_closed_loop(zero_model, w, u, stl::parse("y1 > -1", 1));
    CHECK(ver.satisfied);
}

TEST_CASE("verification rejects an initialization the model cannot produce") {
    auto cs = cases::scenario1();
    auto bad = band_init({0, 0, 0}, {0, 5, 0});
    std::vector<num::Vec> u(3, num::Vec{0.0});
    CHECK_THROWS_WITH_AS(synthesis::verify_closed_loop(cs.model, bad, u, cs.spec()),
                         doctest::Contains("inconsistent"), std::runtime_error);
}

TEST_CASE("model-based and data-driven paths agree on feasibility and objective") {
    auto cs = cases::scenario1();
    auto data = cs.generate(3);
    std::mt19937_64 rng(501);
    std::uniform_real_distribution<double> mid(0.5, 3.0), width(0.4, 1.5), start(-1, 1);
    std::uniform_int_distribution<std::size_t> wlo(2, 5), wlen(2, 4);
    int feasible = 0;
    for (int trial = 0; trial < 10; ++trial) {
        // Random reachable initialization from a short simulated run.
        std::vector<num::Vec> warm(6, num::Vec{0.0});
        for (auto& u : warm) u[0] = start(rng);
        auto run = lti::simulate(cs.model, {start(rng), start(rng), start(rng)}, warm);
        auto w_ini = band_init({run.u[3][0], run.u[4][0], run.u[5][0]},
                               {run.y[3][0], run.y[4][0], run.y[5][0]});

        const double lo = mid(rng), hi = lo + width(rng);
        const std::size_t a = wlo(rng), b = a + wlen(rng);
        std::ostringstream spec;
        spec << "G[" << a << "," << b << "] (abs(y1) >= " << lo << " and abs(y1) <= " << hi
             << ")";
        auto phi = stl::parse(spec.str(), 1);

        auto cfg = cs.config;
        cfg.init_snap_tol = 0.0;  // exact initialization from the simulator
        auto dd = synthesis::synthesize(data, w_ini, phi, cfg);
        auto mb = synthesis::model_based_synthesize(cs.model, w_ini, phi, cfg);
        REQUIRE(dd.status == mb.status);
        if (dd.status == SynthStatus::Feasible) {
            ++feasible;
            CHECK(dd.objective == doctest::Approx(mb.objective).epsilon(1e-4).scale(1.0));
        }
    }
    CHECK(feasible >= 3);
}

TEST_CASE("enlarging the data set never turns a feasible instance infeasible") {
    auto cs = cases::scenario1();
    auto phi = cs.spec();
    auto small = cs.generate(4);
    auto cfg = cs.config;
    auto res_small = synthesis::synthesize(small, cs.w_ini, phi, cfg);
    REQUIRE(res_small.status == SynthStatus::Feasible);
    for (std::size_t steps : {150, 200}) {
        auto big = lti::generate_data(cs.model, steps, cs.data_u_box, 4);
        auto res = synthesis::synthesize(big, cs.w_ini, phi, cfg);
        CHECK(res.status == SynthStatus::Feasible);
    }
}

TEST_CASE("PE warning is attached when the data is too poor") {
    auto cs = cases::scenario1();
    // Constant input: rank-deficient input Hankel.
    std::vector<num::Vec> u(40, num::Vec{1.0});
    auto data = lti::simulate(cs.model, num::Vec(3, 0.0), u);
    auto phi = stl::parse("G[0,2] abs(y1) <= 100", 1);
    auto cfg = cs.config;
    cfg.init_snap_tol = 1e-3;
    auto res = synthesis::synthesize(data, cs.w_ini, phi, cfg);
    CHECK_FALSE(res.pe.ok);
    CHECK(res.warnings.find("persistently exciting") != std::string::npos);
}

TEST_CASE("big-M diagnostics fire when the optimum magnitude reaches M") {
    auto car = lti::builtin_model("car");
    auto data = lti::generate_data(car, 120, {{-200.0, 200.0}}, 11);
    auto w_ini = band_init({0, 0, 0}, {0, 0, 0});
    // Horizon 2; the second gate forces y_2 above 11.5 while the first
    // predicate is only encoded at t = 0. With M = 12 the unencoded time
    // step then exceeds the documented validity bound.
    stl::ScheduleSet none;
    auto phi = stl::parse("(F[0,0] y1 > -1) and (G[2,2] y1 > 11.5)", 1, none);
    synthesis::SynthesisConfig cfg;
    cfg.init_len = 3;
    cfg.n_x_bound = 3;
    cfg.input_box = {{-200.0, 200.0}};
    cfg.cost.kind = milp::CostKind::InputNorm;
    cfg.encoding.big_m = 12.0;
    auto res = synthesis::synthesize(data, w_ini, phi, cfg);
    REQUIRE(res.status == SynthStatus::Feasible);
    CHECK_FALSE(res.big_m_ok);
    CHECK(res.warnings.find("big-M") != std::string::npos);
}

TEST_CASE("hvac case study synthesizes and verifies") {
    auto cs = cases::hvac();
    auto data = cs.generate(1);
    auto phi = cs.spec();
    auto res = synthesis::synthesize(data, cs.w_ini, phi, cs.config);
    REQUIRE(res.status == SynthStatus::Feasible);
    CHECK(res.pe.ok);
    auto ver = synthesis::verify_closed_loop(cs.model, res.w_ini_used, res.u_opt, phi,
                                             cs.config.d_future);
    CHECK(ver.satisfied);
    // Occupied hours hold the comfort threshold.
    const auto tcomf = cs.schedules.find("tcomf");
    for (std::size_t t = 8; t <= 18; ++t) {
        CHECK(ver.y[t][0] > tcomf->values[t]);
    }
}

TEST_CASE("result bundles are written and the report validates") {
    auto cs = cases::scenario1();
    auto data = cs.generate(1);
    auto phi = cs.spec();
    auto res = synthesis::synthesize(data, cs.w_ini, phi, cs.config);
    REQUIRE(res.status == SynthStatus::Feasible);
    auto ver = synthesis::verify_closed_loop(cs.model, res.w_ini_used, res.u_opt, phi);

    const std::string dir = (std::filesystem::temp_directory_path() / "ddstl_bundle").string();
    std::filesystem::remove_all(dir);
    const std::string report = synthesis::write_result_bundle(dir, res, ver, "u-norm");
    CHECK(std::filesystem::exists(dir + "/u_opt.csv"));
    CHECK(std::filesystem::exists(dir + "/y_pred.csv"));
    CHECK(std::filesystem::exists(dir + "/y_closed_loop.csv"));
    CHECK(std::filesystem::exists(dir + "/report.json"));
    synthesis::validate_report_json(report);

    std::ifstream f(dir + "/report.json");
    std::stringstream ss;
    ss << f.rdbuf();
    synthesis::validate_report_json(ss.str());

    CHECK_THROWS_AS(synthesis::validate_report_json("{}"), std::runtime_error);
    CHECK_THROWS_AS(synthesis::validate_report_json("{\"schema_version\": 2}"),
                    std::runtime_error);
}

TEST_CASE("plot data carries band columns for scenario 1 and none for a bare run") {
    auto cs = cases::scenario1();
    auto data = cs.generate(1);
    auto phi = cs.spec();
    auto res = synthesis::synthesize(data, cs.w_ini, phi, cs.config);
    REQUIRE(res.status == SynthStatus::Feasible);
    auto ver = synthesis::verify_closed_loop(cs.model, res.w_ini_used, res.u_opt, phi);

    const auto dir = std::filesystem::temp_directory_path() / "ddstl_plot";
    std::filesystem::create_directories(dir);
    cases::write_plot_data((dir / "with_band.csv").string(), &cs, res, ver);
    std::ifstream f(dir / "with_band.csv");
    std::string header, row;
    std::getline(f, header);
    CHECK(header.find("spec_band_low") != std::string::npos);
    CHECK(header.find("y_true1") != std::string::npos);
    // Row t=5 carries the 2..3 band, row t=0 leaves it blank.
    std::vector<std::string> rows;
    while (std::getline(f, row)) rows.push_back(row);
    CHECK(rows[5].find(",2,3") != std::string::npos);
    CHECK(rows[0].substr(rows[0].size() - 2) == ",,");

    cases::write_plot_data((dir / "no_band.csv").string(), nullptr, res, std::nullopt);
    std::ifstream g(dir / "no_band.csv");
    std::getline(g, header);
    CHECK(header.find("spec_band_low") == std::string::npos);
    CHECK(header.find("y_true1") == std::string::npos);
}

TEST_CASE("hvac plot data includes the reference column made of occ times tcomf") {
    auto cs = cases::hvac();
    synthesis::SynthesisResult res;
    res.status = SynthStatus::Feasible;
    res.L = 23;
    res.u_opt.assign(24, num::Vec{50.0});
    res.y_pred.assign(24, num::Vec{68.0});
    const auto path = (std::filesystem::temp_directory_path() / "ddstl_hvac_plot.csv").string();
    cases::write_plot_data(path, &cs, res, std::nullopt);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header.find("t_ref") != std::string::npos);
    std::string row;
    std::getline(f, row);  // t = 0, unoccupied: reference is 0
    CHECK(row.substr(row.size() - 2) == ",0");
    for (int t = 1; t <= 8; ++t) std::getline(f, row);
    // t = 8, occupied: reference is tcomf in Celsius
    const double want = (21.5 - 32.0) * 5.0 / 9.0;
    std::istringstream last(row.substr(row.rfind(',') + 1));
    double got = 0.0;
    last >> got;
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
}
