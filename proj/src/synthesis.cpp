#include "ddstl/synthesis.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ddstl::synthesis {

using nlohmann::json;

void SynthesisConfig::validate() const {
    if (init_len < 1) throw std::invalid_argument("init_len must be at least 1");
    if (init_snap_tol < 0) throw std::invalid_argument("init_snap_tol must be nonnegative");
    encoding.validate();
    solver.validate();
}

std::size_t compute_L(const stl::Formula& phi) { return stl::horizon(phi); }

namespace {

std::vector<num::Vec> extended_inputs(const lti::Trajectory& traj) {
    std::vector<num::Vec> ext;
    ext.reserve(traj.length());
    for (std::size_t t = 0; t < traj.length(); ++t) {
        num::Vec s = traj.u[t];
        if (traj.n_d > 0) s.insert(s.end(), traj.d[t].begin(), traj.d[t].end());
        ext.push_back(std::move(s));
    }
    return ext;
}

void collect_predicates(const stl::Formula& f, std::vector<const stl::Predicate*>& out) {
    if (f.kind == stl::NodeKind::Pred) out.push_back(&f.pred);
    for (const auto& c : f.children) collect_predicates(c, out);
}

SynthStatus map_status(solver::LpStatus st, bool proven) {
    switch (st) {
        case solver::LpStatus::Optimal:
            return proven ? SynthStatus::Feasible : SynthStatus::NotProven;
        case solver::LpStatus::Infeasible:
            return proven ? SynthStatus::Infeasible : SynthStatus::NotProven;
        default:
            return SynthStatus::NotProven;
    }
}

// Shared tail of both synthesis paths: solve, extract, post-check.
SynthesisResult finish_solve(const milp::AssembledProblem& ap, const stl::Formula& phi,
                             const SynthesisConfig& cfg, SynthesisResult result) {
    const auto start = std::chrono::steady_clock::now();
    solver::MilpSolution sol = solver::solve_milp(ap.problem, cfg.solver);
    result.stats.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.stats.nodes = sol.nodes;
    result.stats.lp_iterations = sol.lp_iterations;
    result.stats.proven = sol.proven;
    if (!sol.note.empty()) result.warnings += sol.note + "; ";
    result.status = map_status(sol.status, sol.proven);
    if (sol.status != solver::LpStatus::Optimal) return result;

    result.objective = sol.objective;
    const std::size_t L = result.L;
    result.u_opt.assign(L + 1, num::Vec());
    result.y_pred.assign(L + 1, num::Vec());
    for (std::size_t t = 0; t <= L; ++t) {
        for (milp::VarId v : ap.dyn.u[t]) result.u_opt[t].push_back(sol.values[v]);
        for (milp::VarId v : ap.dyn.y[t]) result.y_pred[t].push_back(sol.values[v]);
    }
    result.alpha.clear();
    for (milp::VarId v : ap.dyn.alpha) result.alpha.push_back(sol.values[v]);

    // Big-M validity, checked a posteriori on the synthesized outputs.
    std::vector<const stl::Predicate*> preds;
    collect_predicates(phi, preds);
    for (std::size_t t = 0; t <= L && result.big_m_ok; ++t) {
        for (const auto* p : preds) {
            const double sigma = p->value(result.y_pred[t], t);
            if (std::abs(sigma) >= cfg.encoding.big_m_at(t)) {
                result.big_m_ok = false;
                result.warnings += "predicate magnitude " + std::to_string(std::abs(sigma)) +
                                   " reaches big-M at t=" + std::to_string(t) +
                                   "; raise milp.big_m; ";
                break;
            }
        }
    }
    return result;
}

}  // namespace

namespace {

struct Prepared {
    behavior::HankelSystem sys;
    SynthesisResult result;  // L, pe, w_ini_used, snap distance, warnings prefilled
};

Prepared prepare(const lti::Trajectory& data, const lti::Trajectory& w_ini,
                 const stl::Formula& phi, const SynthesisConfig& cfg) {
    cfg.validate();
    data.validate();
    w_ini.validate();
    if (w_ini.length() != cfg.init_len) {
        throw std::invalid_argument("initialization has " + std::to_string(w_ini.length()) +
                                    " samples; config expects " + std::to_string(cfg.init_len));
    }

    Prepared prep;
    SynthesisResult& result = prep.result;
    result.L = compute_L(phi);
    const std::size_t L = result.L;
    if (data.n_d > 0 && cfg.d_future.size() != L + 1) {
        throw std::invalid_argument("known disturbance must be scheduled for all L+1 steps");
    }

    prep.sys = behavior::assemble(data, cfg.init_len, L, cfg.n_x_bound);
    const behavior::HankelSystem& sys = prep.sys;
    result.pe = behavior::check_pe(extended_inputs(data), sys.depth + cfg.n_x_bound);
    if (!result.pe.ok) {
        result.warnings += "data not persistently exciting at order " +
                           std::to_string(sys.depth + cfg.n_x_bound) +
                           " (completeness not guaranteed): " + result.pe.note + "; ";
    }

    // Optionally snap the initialization onto the data span, so that values
    // rounded for display still pin an exact trajectory of the behavior.
    result.w_ini_used = w_ini;
    if (cfg.init_snap_tol > 0.0) {
        const std::size_t n_in = sys.n_in();
        const std::size_t rows = cfg.init_len * (n_in + sys.n_y);
        num::Matrix a(rows, sys.cols());
        num::Vec b(rows, 0.0);
        std::size_t r = 0;
        for (std::size_t t = 0; t < cfg.init_len; ++t) {
            for (std::size_t c = 0; c < n_in; ++c) {
                for (std::size_t j = 0; j < sys.cols(); ++j) a(r, j) = sys.Hu(t * n_in + c, j);
                b[r] = c < sys.n_u ? w_ini.u[t][c] : w_ini.d[t][c - sys.n_u];
                ++r;
            }
        }
        for (std::size_t t = 0; t < cfg.init_len; ++t) {
            for (std::size_t c = 0; c < sys.n_y; ++c) {
                for (std::size_t j = 0; j < sys.cols(); ++j) a(r, j) = sys.Hy(t * sys.n_y + c, j);
                b[r] = w_ini.y[t][c];
                ++r;
            }
        }
        auto proj = num::solve_least_squares(a, b, cfg.init_snap_tol);
        if (proj.residual > cfg.init_snap_tol) {
            throw std::runtime_error(
                "initialization is not a system trajectory: distance to the data span is " +
                std::to_string(proj.residual) + ", above init_snap_tol " +
                std::to_string(cfg.init_snap_tol));
        }
        result.init_snap_distance = proj.residual;
        num::Vec snapped = num::matvec(a, proj.x);
        r = 0;
        for (std::size_t t = 0; t < cfg.init_len; ++t) {
            for (std::size_t c = 0; c < n_in; ++c) {
                if (c < sys.n_u) {
                    result.w_ini_used.u[t][c] = snapped[r];
                } else {
                    result.w_ini_used.d[t][c - sys.n_u] = snapped[r];
                }
                ++r;
            }
        }
        for (std::size_t t = 0; t < cfg.init_len; ++t) {
            for (std::size_t c = 0; c < sys.n_y; ++c) result.w_ini_used.y[t][c] = snapped[r++];
        }
    }
    return prep;
}

}  // namespace

milp::AssembledProblem build_problem(const lti::Trajectory& data, const lti::Trajectory& w_ini,
                                     const stl::Formula& phi, const SynthesisConfig& cfg) {
    Prepared prep = prepare(data, w_ini, phi, cfg);
    return milp::assemble_problem(prep.sys, prep.result.w_ini_used, phi, cfg.cost,
                                  cfg.input_box, cfg.encoding, cfg.d_future);
}

SynthesisResult synthesize(const lti::Trajectory& data, const lti::Trajectory& w_ini,
                           const stl::Formula& phi, const SynthesisConfig& cfg) {
    Prepared prep = prepare(data, w_ini, phi, cfg);
    const behavior::HankelSystem& sys = prep.sys;
    SynthesisResult result = std::move(prep.result);
    const std::size_t L = result.L;

    milp::AssembledProblem ap =
        milp::assemble_problem(sys, result.w_ini_used, phi, cfg.cost, cfg.input_box,
                               cfg.encoding, cfg.d_future);
    result = finish_solve(ap, phi, cfg, std::move(result));
    if (result.status != SynthStatus::Feasible) return result;

    // Dictionary-equation residual at the optimum.
    lti::Trajectory full = result.w_ini_used;
    for (std::size_t t = 0; t <= L; ++t) {
        full.u.push_back(result.u_opt[t]);
        full.y.push_back(result.y_pred[t]);
        if (full.n_d > 0) full.d.push_back(cfg.d_future[t]);
    }
    num::Vec w = behavior::stack_trajectory(full);
    num::Vec fit = num::matvec(num::vstack(sys.Hu, sys.Hy), result.alpha);
    for (std::size_t i = 0; i < fit.size(); ++i) fit[i] -= w[i];
    result.behavioral_residual = num::norm2(fit);
    return result;
}

SynthesisResult model_based_synthesize(const lti::StateSpaceModel& model,
                                       const lti::Trajectory& w_ini, const stl::Formula& phi,
                                       const SynthesisConfig& cfg) {
    cfg.validate();
    w_ini.validate();
    if (w_ini.length() != cfg.init_len) {
        throw std::invalid_argument("initialization has " + std::to_string(w_ini.length()) +
                                    " samples; config expects " + std::to_string(cfg.init_len));
    }
    if (w_ini.n_u != model.n_u() || w_ini.n_y != model.n_y() || w_ini.n_d != model.n_d()) {
        throw std::invalid_argument("initialization channel counts do not match the model");
    }

    SynthesisResult result;
    result.L = compute_L(phi);
    const std::size_t L = result.L;
    if (model.n_d() > 0 && cfg.d_future.size() != L + 1) {
        throw std::invalid_argument("known disturbance must be scheduled for all L+1 steps");
    }
    result.w_ini_used = w_ini;
    result.pe.ok = true;
    result.pe.note = "model-based path; persistence of excitation not applicable";

    milp::AssembledProblem ap;
    milp::MilpProblem& p = ap.problem;
    const std::size_t nx = model.n_x(), nu = model.n_u(), ny = model.n_y(), nd = model.n_d();
    const std::size_t K = cfg.init_len + L;  // states x_0 .. x_K

    std::vector<std::vector<milp::VarId>> x(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        for (std::size_t i = 0; i < nx; ++i) {
            x[k].push_back(p.add_var("x" + std::to_string(k) + "_" + std::to_string(i + 1),
                                     milp::VarKind::Continuous));
        }
    }
    ap.dyn.u.resize(L + 1);
    ap.dyn.y.resize(L + 1);
    for (std::size_t t = 0; t <= L; ++t) {
        for (std::size_t c = 0; c < nu; ++c) {
            double lo = -milp::kInf, hi = milp::kInf;
            if (!cfg.input_box.empty()) {
                lo = cfg.input_box[c].lo;
                hi = cfg.input_box[c].hi;
            }
            ap.dyn.u[t].push_back(p.add_var(
                "u" + std::to_string(t) + "_" + std::to_string(c + 1),
                milp::VarKind::Continuous, lo, hi));
        }
        for (std::size_t c = 0; c < ny; ++c) {
            ap.dyn.y[t].push_back(p.add_var(
                "y" + std::to_string(t) + "_" + std::to_string(c + 1),
                milp::VarKind::Continuous));
        }
    }
    p.init_len = cfg.init_len;
    p.L = L;
    p.n_u = nu;
    p.n_y = ny;

    auto u_const = [&](std::size_t k, std::size_t c) -> std::optional<double> {
        if (k < cfg.init_len) return w_ini.u[k][c];
        return std::nullopt;
    };
    auto d_value = [&](std::size_t k, std::size_t c) {
        return k < cfg.init_len ? w_ini.d[k][c] : cfg.d_future[k - cfg.init_len][c];
    };

    // State recursion x_{k+1} = A x_k + B u_k (+ Bd d_k).
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < nx; ++i) {
            std::vector<milp::LinTerm> terms;
            double rhs = 0.0;
            for (std::size_t j = 0; j < nx; ++j) {
                if (model.A(i, j) != 0.0) terms.push_back({x[k][j], model.A(i, j)});
            }
            for (std::size_t c = 0; c < nu; ++c) {
                const double coef = model.B(i, c);
                if (coef == 0.0) continue;
                if (auto cv = u_const(k, c)) {
                    rhs -= coef * *cv;
                } else {
                    terms.push_back({ap.dyn.u[k - cfg.init_len][c], coef});
                }
            }
            for (std::size_t c = 0; c < nd; ++c) {
                rhs -= (*model.Bd)(i, c) * d_value(k, c);
            }
            terms.push_back({x[k + 1][i], -1.0});
            p.add_constraint(std::move(terms), milp::Sense::Eq, -rhs);
        }
    }
    // Output rows y_k = C x_k + D u_k; initialization outputs are pins.
    for (std::size_t k = 0; k <= K; ++k) {
        for (std::size_t c = 0; c < ny; ++c) {
            std::vector<milp::LinTerm> terms;
            double rhs = 0.0;
            for (std::size_t j = 0; j < nx; ++j) {
                if (model.C(c, j) != 0.0) terms.push_back({x[k][j], model.C(c, j)});
            }
            for (std::size_t ch = 0; ch < nu; ++ch) {
                const double coef = model.D(c, ch);
                if (coef == 0.0) continue;
                if (auto cv = u_const(k, ch)) {
                    rhs -= coef * *cv;
                } else {
                    terms.push_back({ap.dyn.u[k - cfg.init_len][ch], coef});
                }
            }
            if (k < cfg.init_len) {
                p.add_constraint(std::move(terms), milp::Sense::Eq, w_ini.y[k][c] - rhs);
            } else {
                terms.push_back({ap.dyn.y[k - cfg.init_len][c], -1.0});
                p.add_constraint(std::move(terms), milp::Sense::Eq, -rhs);
            }
        }
    }

    ap.root = milp::encode_formula(p, phi, ap.dyn.y, L, cfg.encoding);
    if (ap.root.var) {
        p.add_constraint({{*ap.root.var, 1.0}}, milp::Sense::Eq, 1.0);
    } else if (!ap.root.constant) {
        p.add_constraint({}, milp::Sense::Ge, 1.0);
    }
    milp::encode_cost(p, cfg.cost, ap.dyn);
    p.validate();
    return finish_solve(ap, phi, cfg, std::move(result));
}

Verification verify_closed_loop(const lti::StateSpaceModel& model, const lti::Trajectory& w_ini,
                                std::span<const num::Vec> u_opt, const stl::Formula& phi,
                                std::span<const num::Vec> d_future, double tol) {
    w_ini.validate();
    if (w_ini.n_u != model.n_u() || w_ini.n_y != model.n_y() || w_ini.n_d != model.n_d()) {
        throw std::invalid_argument("initialization channel counts do not match the model");
    }
    const std::size_t k = w_ini.length();
    const std::size_t nx = model.n_x(), ny = model.n_y();

    // Zero-state response to the initialization inputs; what remains of
    // y_ini is the free response O x0.
    std::span<const num::Vec> d_ini(w_ini.d);
    lti::Trajectory forced = lti::simulate(model, num::Vec(nx, 0.0),
                                           std::span<const num::Vec>(w_ini.u), d_ini);

    num::Matrix obs(k * ny, nx);
    num::Vec rhs(k * ny, 0.0);
    num::Matrix phi_rows = model.C;  // C A^j
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t c = 0; c < ny; ++c) {
            for (std::size_t i = 0; i < nx; ++i) obs(j * ny + c, i) = phi_rows(c, i);
            rhs[j * ny + c] = w_ini.y[j][c] - forced.y[j][c];
        }
        phi_rows = phi_rows * model.A;
    }
    auto fit = num::solve_least_squares(obs, rhs, tol);
    if (!fit.within_tol) {
        throw std::runtime_error("initialization is inconsistent with the model (residual " +
                                 std::to_string(fit.residual) + "); bad initialization data");
    }

    // Roll the reconstructed state through the initialization, then apply u_opt.
    auto init_run = lti::simulate_states(model, fit.x, std::span<const num::Vec>(w_ini.u), d_ini);
    const num::Vec& x_start = init_run.states.back();

    Verification v;
    v.init_residual = fit.residual;
    lti::Trajectory closed = lti::simulate(model, x_start, u_opt, d_future);
    v.y = closed.y;
    v.satisfied = stl::monitor(phi, v.y, 0);
    if (!v.satisfied) v.t_fail = stl::first_violation(phi, v.y, 0);
    return v;
}

namespace {

void write_series_csv(const std::string& path, const char* prefix,
                      const std::vector<num::Vec>& samples) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    const std::size_t width = samples.empty() ? 0 : samples[0].size();
    f << "t";
    for (std::size_t c = 0; c < width; ++c) f << ',' << prefix << c + 1;
    f << '\n';
    for (std::size_t t = 0; t < samples.size(); ++t) {
        f << t;
        char buf[32];
        for (double v : samples[t]) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
            (void)ec;
            f << ',' << std::string_view(buf, ptr - buf);
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

const char* status_name(SynthStatus s) {
    switch (s) {
        case SynthStatus::Feasible: return "feasible";
        case SynthStatus::Infeasible: return "infeasible";
        case SynthStatus::NotProven: return "not_proven";
    }
    return "?";
}

}  // namespace

std::string write_result_bundle(const std::string& dir, const SynthesisResult& result,
                                const std::optional<Verification>& verification,
                                const std::string& cost_name) {
    std::filesystem::create_directories(dir);
    const auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };

    json report;
    report["schema_version"] = 1;
    report["status"] = status_name(result.status);
    report["cost"] = cost_name;
    report["L"] = result.L;
    if (result.status == SynthStatus::Feasible) {
        report["objective"] = result.objective;
        write_series_csv(path("u_opt.csv"), "u", result.u_opt);
        write_series_csv(path("y_pred.csv"), "y", result.y_pred);
    } else {
        report["objective"] = nullptr;
    }
    report["solver"] = {{"nodes", result.stats.nodes},
                        {"lp_iterations", result.stats.lp_iterations},
                        {"runtime_s", result.stats.runtime_s},
                        {"proven", result.stats.proven}};
    report["pe"] = {{"certified", result.pe.ok},
                    {"achieved_rank", result.pe.achieved_rank},
                    {"required_rank", result.pe.required_rank},
                    {"note", result.pe.note}};
    report["init_snap_distance"] = result.init_snap_distance;
    report["behavioral_residual"] = result.behavioral_residual;
    report["big_m_ok"] = result.big_m_ok;
    report["warnings"] = result.warnings;
    if (verification) {
        json v;
        v["satisfied"] = verification->satisfied;
        if (verification->t_fail) {
            v["t_fail"] = *verification->t_fail;
        } else {
            v["t_fail"] = nullptr;
        }
        v["init_residual"] = verification->init_residual;
        report["verification"] = v;
        write_series_csv(path("y_closed_loop.csv"), "y", verification->y);
    } else {
        report["verification"] = nullptr;
    }

    const std::string text = report.dump(2) + "\n";
    std::ofstream f(path("report.json"));
    if (!f) throw std::runtime_error("cannot open report.json for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed for report.json");
    return text;
}

void validate_report_json(const std::string& json_text) {
    json r = json::parse(json_text);
    auto need = [&](const char* key) {
        if (!r.contains(key)) throw std::runtime_error(std::string("report missing key ") + key);
    };
    for (const char* key : {"schema_version", "status", "cost", "L", "objective", "solver", "pe",
                            "init_snap_distance", "behavioral_residual", "big_m_ok", "warnings",
                            "verification"}) {
        need(key);
    }
    if (!r["schema_version"].is_number_integer() || r["schema_version"].get<int>() != 1) {
        throw std::runtime_error("unsupported report schema_version");
    }
    const std::string st = r["status"].get<std::string>();
    if (st != "feasible" && st != "infeasible" && st != "not_proven") {
        throw std::runtime_error("bad status value");
    }
    if (!r["L"].is_number_integer()) throw std::runtime_error("L must be an integer");
    if (!r["objective"].is_null() && !r["objective"].is_number()) {
        throw std::runtime_error("objective must be numeric or null");
    }
    for (const char* key : {"nodes", "lp_iterations"}) {
        if (!r["solver"][key].is_number_integer()) {
            throw std::runtime_error(std::string("solver.") + key + " must be an integer");
        }
    }
    if (!r["solver"]["runtime_s"].is_number()) throw std::runtime_error("bad solver.runtime_s");
    if (!r["solver"]["proven"].is_boolean()) throw std::runtime_error("bad solver.proven");
    if (!r["pe"]["certified"].is_boolean()) throw std::runtime_error("bad pe.certified");
    if (!r["big_m_ok"].is_boolean()) throw std::runtime_error("bad big_m_ok");
    if (!r["verification"].is_null()) {
        if (!r["verification"]["satisfied"].is_boolean()) {
            throw std::runtime_error("bad verification.satisfied");
        }
        if (!r["verification"]["t_fail"].is_null() &&
            !r["verification"]["t_fail"].is_number_integer()) {
            throw std::runtime_error("bad verification.t_fail");
        }
    }
}

}  // namespace ddstl::synthesis
