#include "ddstl/lti.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ddstl::lti {

StateSpaceModel StateSpaceModel::make(num::Matrix A, num::Matrix B, num::Matrix C,
                                      std::optional<num::Matrix> D,
                                      std::optional<num::Matrix> Bd) {
    const std::size_t nx = A.rows();
    if (A.cols() != nx) throw std::invalid_argument("A must be square");
    if (B.rows() != nx) throw std::invalid_argument("B row count must match the state dimension");
    if (C.cols() != nx) throw std::invalid_argument("C column count must match the state dimension");
    StateSpaceModel m;
    m.A = std::move(A);
    m.B = std::move(B);
    m.C = std::move(C);
    if (D) {
        if (D->rows() != m.C.rows() || D->cols() != m.B.cols()) {
            throw std::invalid_argument("D must be n_y x n_u");
        }
        m.D = std::move(*D);
    } else {
        m.D = num::Matrix(m.C.rows(), m.B.cols());
    }
    if (Bd) {
        if (Bd->rows() != nx) {
            throw std::invalid_argument("Bd row count must match the state dimension");
        }
        m.Bd = std::move(*Bd);
    }
    return m;
}

void Trajectory::validate() const {
    if (y.size() != u.size()) {
        throw std::invalid_argument("trajectory u/y sample counts differ");
    }
    if (n_d > 0 && d.size() != u.size()) {
        throw std::invalid_argument("trajectory d sample count differs from u");
    }
    auto check = [](const std::vector<num::Vec>& samples, std::size_t width, const char* what) {
        for (const auto& s : samples) {
            if (s.size() != width) {
                throw std::invalid_argument(std::string("trajectory ") + what +
                                            " sample width mismatch");
            }
            num::require_finite(s, what);
        }
    };
    check(u, n_u, "input");
    check(y, n_y, "output");
    if (n_d > 0) check(d, n_d, "disturbance");
}

SimulationResult simulate_states(const StateSpaceModel& model, const num::Vec& x0,
                                 std::span<const num::Vec> u,
                                 std::span<const num::Vec> d) {
    if (x0.size() != model.n_x()) {
        throw std::invalid_argument("initial state length " + std::to_string(x0.size()) +
                                    " does not match state dimension " +
                                    std::to_string(model.n_x()));
    }
    const bool has_d = model.Bd.has_value();
    if (has_d != !d.empty() && !(u.empty() && d.empty())) {
        throw std::invalid_argument(has_d ? "model has a disturbance channel; d must be supplied"
                                          : "model has no disturbance channel; d must be empty");
    }
    if (has_d && d.size() != u.size()) {
        throw std::invalid_argument("u and d must have equal length");
    }

    SimulationResult res;
    res.traj.n_u = model.n_u();
    res.traj.n_y = model.n_y();
    res.traj.n_d = model.n_d();
    res.states.reserve(u.size() + 1);

    num::Vec x = x0;
    for (std::size_t t = 0; t < u.size(); ++t) {
        if (u[t].size() != model.n_u()) throw std::invalid_argument("input sample width mismatch");
        res.states.push_back(x);

        num::Vec yt = num::matvec(model.C, x);
        num::Vec du = num::matvec(model.D, u[t]);
        for (std::size_t i = 0; i < yt.size(); ++i) yt[i] += du[i];

        num::Vec xn = num::matvec(model.A, x);
        num::Vec bu = num::matvec(model.B, u[t]);
        for (std::size_t i = 0; i < xn.size(); ++i) xn[i] += bu[i];
        if (has_d) {
            if (d[t].size() != model.n_d()) {
                throw std::invalid_argument("disturbance sample width mismatch");
            }
            num::Vec bd = num::matvec(*model.Bd, d[t]);
            for (std::size_t i = 0; i < xn.size(); ++i) xn[i] += bd[i];
        }

        res.traj.u.push_back(u[t]);
        res.traj.y.push_back(std::move(yt));
        if (has_d) res.traj.d.push_back(num::Vec(d[t].begin(), d[t].end()));
        x = std::move(xn);
    }
    res.states.push_back(x);
    res.traj.validate();
    return res;
}

Trajectory simulate(const StateSpaceModel& model, const num::Vec& x0,
                    std::span<const num::Vec> u, std::span<const num::Vec> d) {
    return simulate_states(model, x0, u, d).traj;
}

double uniform_from_bits(std::uint64_t bits, double lo, double hi) {
    // Top 53 bits -> [0,1) with full double resolution; platform-independent.
    const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

Trajectory generate_data(const StateSpaceModel& model, std::size_t steps,
                         const Box& input_box, std::uint64_t seed,
                         const std::optional<DisturbanceSource>& disturbance) {
    if (steps < 1) throw std::invalid_argument("steps must be at least 1");
    if (input_box.size() != model.n_u()) {
        throw std::invalid_argument("input box must have one interval per input channel");
    }
    for (const auto& iv : input_box) {
        if (!(iv.lo <= iv.hi)) throw std::invalid_argument("input box interval is empty");
    }

    std::mt19937_64 rng(seed);
    std::vector<num::Vec> u(steps, num::Vec(model.n_u()));
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t c = 0; c < model.n_u(); ++c) {
            u[t][c] = uniform_from_bits(rng(), input_box[c].lo, input_box[c].hi);
        }
    }

    std::vector<num::Vec> d;
    if (model.Bd) {
        if (!disturbance || (!disturbance->schedule && !disturbance->box)) {
            throw std::invalid_argument(
                "model has a disturbance channel; provide a disturbance schedule or box");
        }
        d.assign(steps, num::Vec(model.n_d()));
        if (disturbance->schedule) {
            const auto& sched = *disturbance->schedule;
            if (sched.empty()) throw std::invalid_argument("disturbance schedule is empty");
            for (std::size_t t = 0; t < steps; ++t) {
                const num::Vec& row = sched[t % sched.size()];
                if (row.size() != model.n_d()) {
                    throw std::invalid_argument("disturbance schedule width mismatch");
                }
                d[t] = row;
            }
        } else {
            const Box& box = *disturbance->box;
            if (box.size() != model.n_d()) {
                throw std::invalid_argument("disturbance box must have one interval per channel");
            }
            for (std::size_t t = 0; t < steps; ++t) {
                for (std::size_t c = 0; c < model.n_d(); ++c) {
                    d[t][c] = uniform_from_bits(rng(), box[c].lo, box[c].hi);
                }
            }
        }
    }

    num::Vec x0(model.n_x(), 0.0);
    return simulate(model, x0, u, d);
}

StateSpaceModel builtin_model(std::string_view name) {
    using num::Matrix;
    if (name == "car") {
        Matrix A{{1.0, -0.3, 0.3},
                 {0.0, 1.0, 0.0},
                 {0.0, 0.0, 1.0}};
        Matrix B{{-0.03}, {1.0}, {0.0}};
        Matrix C{{1.0, 0.0, 0.0}};
        auto m = StateSpaceModel::make(A, B, C);
        m.note = "two-car platoon: output is the inter-vehicle distance; states are "
                 "distance, follower velocity, leader velocity";
        return m;
    }
    if (name == "building") {
        Matrix A{{0.9233, 0.00135, 0.0009377, 0.002662, 0.03775},
                 {0.0009377, 0.9606, 0.0004754, 0.00135, 0.01928},
                 {0.0009377, 0.0006846, 0.9604, 0.00135, 0.01928},
                 {0.001849, 0.00135, 0.0009377, 0.9241, 0.03775},
                 {0.07636, 0.05617, 0.039, 0.11, 0.7142}};
        Matrix B{{3.1194e-4}, {1.5815e-4}, {1.5815e-4}, {3.1194e-4}, {0.0131}};
        // The published output row is printed with seven entries against a
        // five-state A; the trailing zeros are dropped to keep dimensions
        // consistent, giving C = [1 0 0 0 0].
        Matrix C{{1.0, 0.0, 0.0, 0.0, 0.0}};
        Matrix Bd{{-8.0390e-6, 0.0340, 1.9696e-5, 3.2720e-5, 0.0014, 0.0, 0.0},
                  {-4.0756e-6, 1.1479e-5, 0.0173, 1.6530e-5, 0.0230, 0.0, 0.0},
                  {-4.0756e-6, 1.1479e-5, 0.0173, 1.6530e-5, 0.0007, 0.0, 0.0},
                  {-8.0390e-6, 2.2722e-5, 1.9696e-5, 0.0340, 0.0014, 0.0, 0.0},
                  {-3.3691e-4, 0.0014, 0.0011, 0.0021, 0.0568, 0.0, 0.0}};
        auto m = StateSpaceModel::make(A, B, C, std::nullopt, Bd);
        m.note = "five-room thermal network: output is the first room temperature "
                 "(degrees Fahrenheit); seven known disturbance channels";
        return m;
    }
    throw std::invalid_argument("unknown built-in model '" + std::string(name) +
                                "' (valid names: car, building)");
}

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    out.append(buf, ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first != last && *first == ' ') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error("bad numeric field '" + s + "' on CSV line " +
                                 std::to_string(line_no));
    }
    return v;
}

}  // namespace

void write_csv(const Trajectory& traj, std::ostream& out) {
    traj.validate();
    std::string line = "t";
    for (std::size_t c = 0; c < traj.n_u; ++c) line += ",u" + std::to_string(c + 1);
    for (std::size_t c = 0; c < traj.n_d; ++c) line += ",d" + std::to_string(c + 1);
    for (std::size_t c = 0; c < traj.n_y; ++c) line += ",y" + std::to_string(c + 1);
    out << line << '\n';
    for (std::size_t t = 0; t < traj.length(); ++t) {
        line = std::to_string(t);
        for (std::size_t c = 0; c < traj.n_u; ++c) {
            line += ',';
            append_double(line, traj.u[t][c]);
        }
        for (std::size_t c = 0; c < traj.n_d; ++c) {
            line += ',';
            append_double(line, traj.d[t][c]);
        }
        for (std::size_t c = 0; c < traj.n_y; ++c) {
            line += ',';
            append_double(line, traj.y[t][c]);
        }
        out << line << '\n';
    }
}

void write_csv_file(const Trajectory& traj, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(traj, f);
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

Trajectory read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty trajectory CSV");
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "t") {
        throw std::runtime_error("trajectory CSV must start with a 't' column");
    }
    Trajectory traj;
    std::size_t idx = 1;
    auto count_prefix = [&](const char* prefix) {
        std::size_t n = 0;
        while (idx < header.size() && header[idx].rfind(prefix, 0) == 0) {
            ++n;
            ++idx;
        }
        return n;
    };
    traj.n_u = count_prefix("u");
    traj.n_d = count_prefix("d");
    traj.n_y = count_prefix("y");
    if (idx != header.size() || traj.n_u == 0 || traj.n_y == 0) {
        throw std::runtime_error("trajectory CSV header must be t,u1..,[d1..,]y1..");
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        const std::size_t expected = 1 + traj.n_u + traj.n_d + traj.n_y;
        if (fields.size() != expected) {
            throw std::runtime_error("CSV line " + std::to_string(line_no) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(expected));
        }
        std::size_t f = 1;
        num::Vec u(traj.n_u), d(traj.n_d), y(traj.n_y);
        for (auto& v : u) v = parse_double(fields[f++], line_no);
        for (auto& v : d) v = parse_double(fields[f++], line_no);
        for (auto& v : y) v = parse_double(fields[f++], line_no);
        traj.u.push_back(std::move(u));
        if (traj.n_d > 0) traj.d.push_back(std::move(d));
        traj.y.push_back(std::move(y));
    }
    traj.validate();
    return traj;
}

Trajectory read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    return read_csv(f);
}

}  // namespace ddstl::lti
