#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddstl/cases.hpp"
#include "ddstl/synthesis.hpp"

// Command-line front end. Exit codes: 0 success, 1 infeasible/violated,
// 2 usage error, 3 I/O or runtime failure.

namespace {

using namespace ddstl;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Series CSV: header "t,<name1>,..,<nameK>", one row per step.
std::vector<num::Vec> read_series_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty CSV '" + path + "'");
    std::vector<num::Vec> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        num::Vec row;
        std::size_t start = 0;
        bool first = true;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            std::string field = line.substr(start, end - start);
            if (!field.empty() && field.back() == '\r') field.pop_back();
            if (!first) {
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
                if (ec != std::errc() || ptr != field.data() + field.size()) {
                    throw std::runtime_error("bad numeric field '" + field + "' in " + path);
                }
                row.push_back(v);
            }
            first = false;
            start = end + 1;
            if (end == line.size()) break;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

lti::Box parse_box(const std::string& text, std::size_t channels) {
    lti::Box box;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        auto comma = part.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("box interval '" + part + "' must be lo,hi");
        }
        lti::Interval iv{std::stod(part.substr(0, comma)), std::stod(part.substr(comma + 1))};
        if (!(iv.lo <= iv.hi)) throw std::invalid_argument("box interval '" + part + "' is empty");
        box.push_back(iv);
    }
    if (box.size() == 1 && channels > 1) box.assign(channels, box[0]);
    if (channels > 0 && box.size() != channels) {
        throw std::invalid_argument("box must list one interval (lo,hi) per channel, ';'-separated");
    }
    return box;
}

// key = value configuration file for encoding/solver defaults.
void apply_config_file(const std::string& path, synthesis::SynthesisConfig& cfg) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const char* ws = " \t\r";
            s.erase(0, s.find_first_not_of(ws));
            const auto last = s.find_last_not_of(ws);
            s.erase(last == std::string::npos ? 0 : last + 1);
            return s;
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        try {
            if (key == "milp.big_m") cfg.encoding.big_m = std::stod(value);
            else if (key == "milp.eps") cfg.encoding.eps = std::stod(value);
            else if (key == "solver.feastol") cfg.solver.feastol = std::stod(value);
            else if (key == "solver.inttol") cfg.solver.inttol = std::stod(value);
            else if (key == "solver.node_limit") cfg.solver.node_limit = std::stoul(value);
            else if (key == "solver.time_limit") cfg.solver.time_limit_s = std::stod(value);
            else if (key == "behavior.tol") cfg.residual_tol = std::stod(value);
            else if (key == "synthesis.init_snap_tol") cfg.init_snap_tol = std::stod(value);
            else throw std::invalid_argument("unknown config key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad entry");
        }
    }
}

milp::CostKind parse_cost(const std::string& name) {
    if (name == "u-norm") return milp::CostKind::InputNorm;
    if (name == "y-norm") return milp::CostKind::OutputNorm;
    throw std::invalid_argument("cost must be u-norm or y-norm");
}

const char* status_text(synthesis::SynthStatus s) {
    switch (s) {
        case synthesis::SynthStatus::Feasible: return "feasible";
        case synthesis::SynthStatus::Infeasible: return "infeasible";
        case synthesis::SynthStatus::NotProven: return "not proven";
    }
    return "?";
}

struct GenerateOpts {
    std::string system, out, box_text, dbox_text, dsched_path;
    std::size_t steps = 120;
    std::uint64_t seed = 1;
};

int run_generate(const GenerateOpts& o) {
    lti::StateSpaceModel model = lti::builtin_model(o.system);
    lti::Box box = o.box_text.empty()
                       ? cases::by_name(o.system == "car" ? "scenario1" : "hvac").data_u_box
                       : parse_box(o.box_text, model.n_u());
    std::optional<lti::DisturbanceSource> dist;
    if (model.n_d() > 0) {
        lti::DisturbanceSource src;
        if (!o.dsched_path.empty()) {
            src.schedule = read_series_csv(o.dsched_path);
        } else if (!o.dbox_text.empty()) {
            src.box = parse_box(o.dbox_text, model.n_d());
        } else {
            src = *cases::hvac().data_disturbance;  // documented default
        }
        dist = std::move(src);
    }
    lti::Trajectory data = lti::generate_data(model, o.steps, box, o.seed, dist);
    lti::write_csv_file(data, o.out);
    std::cerr << "wrote " << data.length() << " samples to " << o.out << "\n";
    return kExitOk;
}

struct SynthOpts {
    std::string data_path, spec_path, init_path, out_dir, export_lp_path, config_path;
    std::string cost = "u-norm";
    std::string box_text;
    std::string dfuture_path;
    std::vector<std::string> schedule_args;  // name=path
    std::size_t tini = 3;
    std::size_t nx_bound = 3;
    double snap_tol = 0.0;
    std::string plot_path, svg_path;
    bool export_only = false;
};

stl::ScheduleSet load_schedules(const std::vector<std::string>& args) {
    stl::ScheduleSet set;
    for (const auto& a : args) {
        auto eq = a.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("--schedule needs name=path, got '" + a + "'");
        }
        set.add(stl::read_schedule_csv_file(a.substr(eq + 1), a.substr(0, eq)));
    }
    return set;
}

int run_synthesize(const SynthOpts& o) {
    lti::Trajectory data = lti::read_csv_file(o.data_path);
    lti::Trajectory init = lti::read_csv_file(o.init_path);
    stl::ScheduleSet schedules = load_schedules(o.schedule_args);
    stl::Formula phi = stl::parse(read_file(o.spec_path), data.n_y, schedules);

    synthesis::SynthesisConfig cfg;
    cfg.init_len = o.tini;
    cfg.n_x_bound = o.nx_bound;
    cfg.cost.kind = parse_cost(o.cost);
    cfg.init_snap_tol = o.snap_tol;
    if (!o.config_path.empty()) apply_config_file(o.config_path, cfg);
    if (!o.box_text.empty()) cfg.input_box = parse_box(o.box_text, data.n_u);
    if (!o.dfuture_path.empty()) cfg.d_future = read_series_csv(o.dfuture_path);

    if (!o.export_lp_path.empty() || o.export_only) {
        milp::AssembledProblem ap = synthesis::build_problem(data, init, phi, cfg);
        const std::string lp_path =
            o.export_lp_path.empty() ? o.out_dir + "/problem.lp" : o.export_lp_path;
        milp::export_lp_file(ap.problem, lp_path);
        std::cerr << "wrote " << ap.problem.vars.size() << " variables, "
                  << ap.problem.cons.size() << " constraints to " << lp_path << "\n";
        if (o.export_only) return kExitOk;
    }

    synthesis::SynthesisResult result = synthesis::synthesize(data, init, phi, cfg);
    if (!o.out_dir.empty()) {
        synthesis::write_result_bundle(o.out_dir, result, std::nullopt, o.cost);
        if (!o.plot_path.empty()) {
            cases::write_plot_data(o.plot_path, nullptr, result, std::nullopt);
        }
        if (!o.svg_path.empty() && result.status == synthesis::SynthStatus::Feasible) {
            cases::write_svg_chart(o.svg_path, nullptr, result, std::nullopt);
        }
    }
    std::cerr << "synthesis: " << status_text(result.status);
    if (result.status == synthesis::SynthStatus::Feasible) {
        std::cerr << ", objective " << result.objective;
    }
    std::cerr << " (" << result.stats.nodes << " nodes, " << result.stats.lp_iterations
              << " LP iterations)\n";
    if (!result.warnings.empty()) std::cerr << "warnings: " << result.warnings << "\n";
    return result.status == synthesis::SynthStatus::Feasible ? kExitOk : kExitInfeasible;
}

struct VerifyOpts {
    std::string system, init_path, u_path, spec_path, dfuture_path;
    std::vector<std::string> schedule_args;
};

int run_verify(const VerifyOpts& o) {
    lti::StateSpaceModel model = lti::builtin_model(o.system);
    lti::Trajectory init = lti::read_csv_file(o.init_path);
    std::vector<num::Vec> u = read_series_csv(o.u_path);
    stl::ScheduleSet schedules = load_schedules(o.schedule_args);
    stl::Formula phi = stl::parse(read_file(o.spec_path), model.n_y(), schedules);
    std::vector<num::Vec> d;
    if (!o.dfuture_path.empty()) d = read_series_csv(o.dfuture_path);

    synthesis::Verification v = synthesis::verify_closed_loop(model, init, u, phi, d);
    if (v.satisfied) {
        std::cerr << "satisfied (initialization residual " << v.init_residual << ")\n";
        return kExitOk;
    }
    std::cerr << "violated at t=" << (v.t_fail ? std::to_string(*v.t_fail) : "?") << "\n";
    return kExitInfeasible;
}

struct ReproduceOpts {
    std::string case_name, out_dir, cost = "u-norm", config_path;
    std::uint64_t seed = 1;
    std::size_t steps = 0;  // 0 = case default
    bool svg = false;
};

int run_reproduce(const ReproduceOpts& o) {
    cases::CaseStudy cs = cases::by_name(o.case_name);
    cs.config.cost.kind = parse_cost(o.cost);
    if (!o.config_path.empty()) apply_config_file(o.config_path, cs.config);
    if (o.steps > 0) cs.data_steps = o.steps;

    lti::Trajectory data = cs.generate(o.seed);
    stl::Formula phi = cs.spec();
    synthesis::SynthesisResult result = synthesis::synthesize(data, cs.w_ini, phi, cs.config);

    std::optional<synthesis::Verification> ver;
    if (result.status == synthesis::SynthStatus::Feasible) {
        ver = synthesis::verify_closed_loop(cs.model, result.w_ini_used, result.u_opt, phi,
                                            cs.config.d_future);
    }
    synthesis::write_result_bundle(o.out_dir, result, ver, o.cost);
    cases::write_plot_data(o.out_dir + "/plot_data.csv", &cs, result, ver);
    if (o.svg && result.status == synthesis::SynthStatus::Feasible) {
        cases::write_svg_chart(o.out_dir + "/chart.svg", &cs, result, ver);
    }

    std::cerr << o.case_name << ": " << status_text(result.status);
    if (ver) std::cerr << ", closed loop " << (ver->satisfied ? "satisfied" : "violated");
    std::cerr << "\n";
    if (!result.warnings.empty()) std::cerr << "warnings: " << result.warnings << "\n";
    if (result.status != synthesis::SynthStatus::Feasible) return kExitInfeasible;
    return ver && ver->satisfied ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"direct data-driven controller synthesis for signal temporal logic"};
    app.require_subcommand(1);

    GenerateOpts gen;
    auto* sub_gen = app.add_subcommand("generate", "simulate a built-in system to collect data");
    sub_gen->add_option("--system", gen.system, "car or building")->required();
    sub_gen->add_option("--steps", gen.steps, "number of samples");
    sub_gen->add_option("--seed", gen.seed, "random seed");
    sub_gen->add_option("--box", gen.box_text, "input box lo,hi[;lo,hi...]");
    sub_gen->add_option("--dbox", gen.dbox_text, "disturbance box per channel");
    sub_gen->add_option("--dsched", gen.dsched_path, "disturbance schedule CSV (cyclic)");
    sub_gen->add_option("--out", gen.out, "output trajectory CSV")->required();

    SynthOpts syn;
    auto* sub_syn = app.add_subcommand("synthesize", "solve the data-driven control problem");
    sub_syn->add_option("--data", syn.data_path, "data trajectory CSV")->required();
    sub_syn->add_option("--spec", syn.spec_path, "specification file")->required();
    sub_syn->add_option("--init", syn.init_path, "initialization trajectory CSV")->required();
    sub_syn->add_option("--tini", syn.tini, "initialization sample count");
    sub_syn->add_option("--nx-bound", syn.nx_bound, "order bound for the PE certificate");
    sub_syn->add_option("--cost", syn.cost, "u-norm or y-norm");
    sub_syn->add_option("--box", syn.box_text, "input box lo,hi[;...]");
    sub_syn->add_option("--dfuture", syn.dfuture_path, "known disturbance CSV over the horizon");
    sub_syn->add_option("--schedule", syn.schedule_args, "name=path threshold schedule CSV");
    sub_syn->add_option("--snap-tol", syn.snap_tol, "initialization snapping tolerance");
    sub_syn->add_option("--config", syn.config_path, "key=value config file");
    sub_syn->add_option("--export-lp", syn.export_lp_path, "also write the LP file");
    sub_syn->add_option("--out-dir", syn.out_dir, "result bundle directory");
    sub_syn->add_option("--plot", syn.plot_path, "tidy plot-data CSV");
    sub_syn->add_option("--svg", syn.svg_path, "simple SVG chart");

    SynthOpts exp;
    auto* sub_exp = app.add_subcommand("export-lp", "build the MILP and write it as an LP file");
    sub_exp->add_option("--data", exp.data_path, "data trajectory CSV")->required();
    sub_exp->add_option("--spec", exp.spec_path, "specification file")->required();
    sub_exp->add_option("--init", exp.init_path, "initialization trajectory CSV")->required();
    sub_exp->add_option("--tini", exp.tini, "initialization sample count");
    sub_exp->add_option("--nx-bound", exp.nx_bound, "order bound for the PE certificate");
    sub_exp->add_option("--cost", exp.cost, "u-norm or y-norm");
    sub_exp->add_option("--box", exp.box_text, "input box lo,hi[;...]");
    sub_exp->add_option("--dfuture", exp.dfuture_path, "known disturbance CSV over the horizon");
    sub_exp->add_option("--schedule", exp.schedule_args, "name=path threshold schedule CSV");
    sub_exp->add_option("--snap-tol", exp.snap_tol, "initialization snapping tolerance");
    sub_exp->add_option("--config", exp.config_path, "key=value config file");
    sub_exp->add_option("--out", exp.export_lp_path, "LP file path")->required();

    VerifyOpts ver;
    auto* sub_ver = app.add_subcommand("verify", "simulate a built-in system under an input "
                                                 "sequence and monitor the specification");
    sub_ver->add_option("--system", ver.system, "car or building")->required();
    sub_ver->add_option("--init", ver.init_path, "initialization trajectory CSV")->required();
    sub_ver->add_option("--u", ver.u_path, "input sequence CSV")->required();
    sub_ver->add_option("--spec", ver.spec_path, "specification file")->required();
    sub_ver->add_option("--dfuture", ver.dfuture_path, "known disturbance CSV");
    sub_ver->add_option("--schedule", ver.schedule_args, "name=path threshold schedule CSV");

    ReproduceOpts rep;
    auto* sub_rep = app.add_subcommand("reproduce", "run a bundled case study end to end");
    sub_rep->add_option("case", rep.case_name, "scenario1, scenario2, or hvac")->required();
    sub_rep->add_option("--cost", rep.cost, "u-norm or y-norm");
    sub_rep->add_option("--seed", rep.seed, "data-collection seed");
    sub_rep->add_option("--steps", rep.steps, "data-collection length override");
    sub_rep->add_option("--config", rep.config_path, "key=value config file");
    sub_rep->add_option("--out-dir", rep.out_dir, "result bundle directory")->required();
    sub_rep->add_flag("--svg", rep.svg, "also write a simple SVG chart");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*sub_gen) return run_generate(gen);
        if (*sub_syn) return run_synthesize(syn);
        if (*sub_exp) {
            exp.export_only = true;
            return run_synthesize(exp);
        }
        if (*sub_ver) return run_verify(ver);
        if (*sub_rep) return run_reproduce(rep);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
