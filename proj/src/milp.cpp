#include "ddstl/milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

namespace ddstl::milp {

VarId MilpProblem::add_var(std::string name, VarKind kind, double lo, double hi) {
    Variable v;
    v.name = std::move(name);
    v.kind = kind;
    if (kind == VarKind::Binary || kind == VarKind::UnitInterval) {
        v.lo = 0.0;
        v.hi = 1.0;
    } else {
        v.lo = lo;
        v.hi = hi;
    }
    vars.push_back(std::move(v));
    return static_cast<VarId>(vars.size() - 1);
}

void MilpProblem::add_constraint(std::vector<LinTerm> terms, Sense sense, double rhs) {
    std::set<VarId> seen;
    for (const auto& t : terms) {
        if (t.var < 0 || static_cast<std::size_t>(t.var) >= vars.size()) {
            throw std::invalid_argument("constraint references unknown variable");
        }
        if (!std::isfinite(t.coef)) throw std::invalid_argument("non-finite coefficient");
        if (!seen.insert(t.var).second) {
            throw std::invalid_argument("duplicate variable in constraint: " + vars[t.var].name);
        }
    }
    if (!std::isfinite(rhs)) throw std::invalid_argument("non-finite rhs");
    cons.push_back({std::move(terms), sense, rhs});
}

std::size_t MilpProblem::binary_count() const {
    std::size_t n = 0;
    for (const auto& v : vars)
        if (v.kind == VarKind::Binary) ++n;
    return n;
}

void MilpProblem::validate() const {
    for (const auto& t : objective) {
        if (t.var < 0 || static_cast<std::size_t>(t.var) >= vars.size()) {
            throw std::logic_error("objective references unknown variable");
        }
    }
}

void EncodingParams::validate() const {
    auto check = [](double m, double e) {
        if (!(m > 0.0)) throw std::invalid_argument("big-M must be positive");
        if (!(e > 0.0)) throw std::invalid_argument("epsilon must be positive");
        if (!(e < m)) throw std::invalid_argument("epsilon must be far below big-M");
    };
    check(big_m, eps);
    for (double m : big_m_per_time) check(m, eps);
    for (double e : eps_per_time) check(big_m, e);
}

DynamicsVars encode_dynamics(MilpProblem& p, const behavior::HankelSystem& sys,
                             const lti::Trajectory& w_ini, std::size_t L,
                             std::span<const num::Vec> d_future) {
    w_ini.validate();
    if (w_ini.n_u != sys.n_u || w_ini.n_y != sys.n_y || w_ini.n_d != sys.n_d) {
        throw std::invalid_argument("initialization channel counts do not match the dictionary");
    }
    const std::size_t init_len = w_ini.length();
    if (init_len + L + 1 != sys.depth) {
        throw std::invalid_argument("dictionary depth " + std::to_string(sys.depth) +
                                    " does not equal init length " + std::to_string(init_len) +
                                    " + horizon " + std::to_string(L + 1));
    }
    if (sys.n_d > 0) {
        if (d_future.size() != L + 1) {
            throw std::invalid_argument("future disturbance schedule must cover all L+1 steps");
        }
        for (const auto& s : d_future) {
            if (s.size() != sys.n_d) {
                throw std::invalid_argument("future disturbance sample width mismatch");
            }
        }
    } else if (!d_future.empty()) {
        throw std::invalid_argument("dictionary has no disturbance channels");
    }

    p.init_len = init_len;
    p.L = L;
    p.n_u = sys.n_u;
    p.n_y = sys.n_y;

    DynamicsVars dyn;
    dyn.alpha.reserve(sys.cols());
    for (std::size_t j = 0; j < sys.cols(); ++j) {
        dyn.alpha.push_back(p.add_var("a" + std::to_string(j), VarKind::Continuous));
    }
    dyn.u.resize(L + 1);
    dyn.y.resize(L + 1);
    for (std::size_t t = 0; t <= L; ++t) {
        for (std::size_t c = 0; c < sys.n_u; ++c) {
            dyn.u[t].push_back(p.add_var("u" + std::to_string(t) + "_" + std::to_string(c + 1),
                                         VarKind::Continuous));
        }
        for (std::size_t c = 0; c < sys.n_y; ++c) {
            dyn.y[t].push_back(p.add_var("y" + std::to_string(t) + "_" + std::to_string(c + 1),
                                         VarKind::Continuous));
        }
    }

    const std::size_t n_in = sys.n_in();
    auto alpha_row = [&](const num::Matrix& h, std::size_t row) {
        std::vector<LinTerm> terms;
        terms.reserve(sys.cols() + 1);
        for (std::size_t j = 0; j < sys.cols(); ++j) {
            const double c = h(row, j);
            if (c != 0.0) terms.push_back({dyn.alpha[j], c});
        }
        return terms;
    };

    for (std::size_t t = 0; t < sys.depth; ++t) {
        const bool init = t < init_len;
        for (std::size_t c = 0; c < n_in; ++c) {
            auto terms = alpha_row(sys.Hu, t * n_in + c);
            if (init) {
                const double v = c < sys.n_u ? w_ini.u[t][c] : w_ini.d[t][c - sys.n_u];
                p.add_constraint(std::move(terms), Sense::Eq, v);
            } else if (c < sys.n_u) {
                terms.push_back({dyn.u[t - init_len][c], -1.0});
                p.add_constraint(std::move(terms), Sense::Eq, 0.0);
            } else {
                p.add_constraint(std::move(terms), Sense::Eq,
                                 d_future[t - init_len][c - sys.n_u]);
            }
        }
    }
    for (std::size_t t = 0; t < sys.depth; ++t) {
        const bool init = t < init_len;
        for (std::size_t c = 0; c < sys.n_y; ++c) {
            auto terms = alpha_row(sys.Hy, t * sys.n_y + c);
            if (init) {
                p.add_constraint(std::move(terms), Sense::Eq, w_ini.y[t][c]);
            } else {
                terms.push_back({dyn.y[t - init_len][c], -1.0});
                p.add_constraint(std::move(terms), Sense::Eq, 0.0);
            }
        }
    }
    return dyn;
}

namespace {

// Either a created variable or a folded 0/1 constant.
struct Enc {
    VarId var = -1;
    bool constant = false;
    bool is_const() const { return var < 0; }
    static Enc of_var(VarId v) { return {v, false}; }
    static Enc of_const(bool b) { return {-1, b}; }
};

struct FormulaEncoder {
    MilpProblem& p;
    const std::vector<std::vector<VarId>>& y_vars;
    std::size_t last;  // L
    const EncodingParams& params;

    std::map<const stl::Formula*, std::size_t> node_index;
    std::map<std::pair<const stl::Formula*, std::size_t>, Enc> memo;
    std::map<std::pair<const stl::Formula*, std::size_t>, Enc> until_memo;

    std::size_t index_of(const stl::Formula* f) {
        auto it = node_index.find(f);
        if (it != node_index.end()) return it->second;
        const std::size_t idx = node_index.size();
        node_index.emplace(f, idx);
        return idx;
    }

    // Clamped windows can map different time indices to the same child
    // variable; gates deduplicate since and/or are idempotent.
    static std::vector<VarId> unique_vars(const std::vector<Enc>& kids, bool* short_circuit,
                                          bool circuit_value) {
        std::vector<VarId> vars;
        for (const auto& k : kids) {
            if (k.is_const()) {
                if (k.constant == circuit_value) {
                    *short_circuit = true;
                    return vars;
                }
            } else if (std::find(vars.begin(), vars.end(), k.var) == vars.end()) {
                vars.push_back(k.var);
            }
        }
        return vars;
    }

    Enc conjunction(std::vector<Enc> kids, const std::string& name) {
        bool short_circuit = false;
        std::vector<VarId> vars = unique_vars(kids, &short_circuit, false);
        if (short_circuit) return Enc::of_const(false);
        if (vars.empty()) return Enc::of_const(true);
        if (vars.size() == 1) return Enc::of_var(vars[0]);
        const VarId z = p.add_var(name, VarKind::UnitInterval);
        for (VarId v : vars) p.add_constraint({{z, 1.0}, {v, -1.0}}, Sense::Le, 0.0);
        std::vector<LinTerm> big{{z, 1.0}};
        for (VarId v : vars) big.push_back({v, -1.0});
        p.add_constraint(std::move(big), Sense::Ge, 1.0 - static_cast<double>(vars.size()));
        return Enc::of_var(z);
    }

    Enc disjunction(std::vector<Enc> kids, const std::string& name) {
        bool short_circuit = false;
        std::vector<VarId> vars = unique_vars(kids, &short_circuit, true);
        if (short_circuit) return Enc::of_const(true);
        if (vars.empty()) return Enc::of_const(false);
        if (vars.size() == 1) return Enc::of_var(vars[0]);
        const VarId z = p.add_var(name, VarKind::UnitInterval);
        for (VarId v : vars) p.add_constraint({{z, 1.0}, {v, -1.0}}, Sense::Ge, 0.0);
        std::vector<LinTerm> sum{{z, 1.0}};
        for (VarId v : vars) sum.push_back({v, -1.0});
        p.add_constraint(std::move(sum), Sense::Le, 0.0);
        return Enc::of_var(z);
    }

    Enc encode(const stl::Formula& f, std::size_t t) {
        const auto key = std::make_pair(&f, t);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        Enc e = encode_fresh(f, t);
        memo.emplace(key, e);
        return e;
    }

    Enc encode_fresh(const stl::Formula& f, std::size_t t) {
        using stl::NodeKind;
        const std::size_t idx = index_of(&f);
        const std::string suffix = std::to_string(idx) + "_t" + std::to_string(t);
        switch (f.kind) {
            case NodeKind::Bool:
                return Enc::of_const(f.value);
            case NodeKind::Pred: {
                if (f.pred.row.size() != (y_vars.empty() ? 0 : y_vars[0].size())) {
                    throw std::invalid_argument("predicate row width does not match output count");
                }
                const double m = params.big_m_at(t);
                const double eps = params.eps_at(t);
                const double b = f.pred.offset_at(t);
                const bool constant_row = std::all_of(f.pred.row.begin(), f.pred.row.end(),
                                                      [](double a) { return a == 0.0; });
                if (constant_row && std::abs(b) >= eps) {
                    // Schedule-only predicate with a safe margin: its gate
                    // would be forced to this value anyway.
                    return Enc::of_const(b > 0.0);
                }
                const VarId z = p.add_var("zs" + suffix, VarKind::Binary);
                // sigma(y_t) <= M z - eps
                std::vector<LinTerm> up{{z, -m}};
                // -sigma(y_t) <= M (1-z) - eps
                std::vector<LinTerm> dn{{z, m}};
                for (std::size_t c = 0; c < f.pred.row.size(); ++c) {
                    const double a = f.pred.row[c];
                    if (a == 0.0) continue;
                    up.push_back({y_vars[t][c], a});
                    dn.push_back({y_vars[t][c], -a});
                }
                p.add_constraint(std::move(up), Sense::Le, -eps - b);
                p.add_constraint(std::move(dn), Sense::Le, m - eps + b);
                return Enc::of_var(z);
            }
            case NodeKind::Not: {
                Enc c = encode(f.children[0], t);
                if (c.is_const()) return Enc::of_const(!c.constant);
                const VarId z = p.add_var("zc" + suffix, VarKind::UnitInterval);
                p.add_constraint({{z, 1.0}, {c.var, 1.0}}, Sense::Eq, 1.0);
                return Enc::of_var(z);
            }
            case NodeKind::And:
            case NodeKind::Or: {
                std::vector<Enc> kids;
                for (const auto& c : f.children) kids.push_back(encode(c, t));
                return f.kind == NodeKind::And ? conjunction(std::move(kids), "zc" + suffix)
                                               : disjunction(std::move(kids), "zc" + suffix);
            }
            case NodeKind::Always:
            case NodeKind::Eventually: {
                const std::size_t lo = std::min(t + f.a, last);
                const std::size_t hi = std::min(t + f.b, last);
                std::vector<Enc> kids;
                for (std::size_t i = lo; i <= hi; ++i) kids.push_back(encode(f.children[0], i));
                return f.kind == NodeKind::Always
                           ? conjunction(std::move(kids), "zc" + suffix)
                           : disjunction(std::move(kids), "zc" + suffix);
            }
            case NodeKind::Until: {
                // box [0,a] left AND eventually [a,b] right AND unbounded
                // until from min(t+a, L).
                const std::size_t lo = std::min(t + f.a, last);
                const std::size_t hi = std::min(t + f.b, last);
                std::vector<Enc> box;
                for (std::size_t i = t; i <= lo; ++i) box.push_back(encode(f.children[0], i));
                std::vector<Enc> ev;
                for (std::size_t i = lo; i <= hi; ++i) ev.push_back(encode(f.children[1], i));
                std::vector<Enc> top;
                top.push_back(conjunction(std::move(box), "zc" + suffix + "_box"));
                top.push_back(disjunction(std::move(ev), "zc" + suffix + "_ev"));
                top.push_back(unbounded_until(f, lo));
                return conjunction(std::move(top), "zc" + suffix);
            }
        }
        throw std::logic_error("unreachable formula kind");
    }

    // z_s = right_s or (left_s and z_{s+1}); z_L = right_L.
    Enc unbounded_until(const stl::Formula& f, std::size_t s) {
        const auto key = std::make_pair(&f, s);
        if (auto it = until_memo.find(key); it != until_memo.end()) return it->second;
        const std::size_t idx = index_of(&f);
        Enc result;
        if (s == last) {
            Enc r = encode(f.children[1], last);
            if (r.is_const()) {
                result = r;
            } else {
                // explicit terminal tie z_L = right_L
                const VarId z = p.add_var("zu" + std::to_string(idx) + "_t" + std::to_string(s),
                                          VarKind::UnitInterval);
                p.add_constraint({{z, 1.0}, {r.var, -1.0}}, Sense::Eq, 0.0);
                result = Enc::of_var(z);
            }
        } else {
            Enc r = encode(f.children[1], s);
            Enc l = encode(f.children[0], s);
            Enc rest = unbounded_until(f, s + 1);
            const std::string tag = std::to_string(idx) + "_t" + std::to_string(s);
            std::vector<Enc> inner;
            inner.push_back(l);
            inner.push_back(rest);
            Enc conj = conjunction(std::move(inner), "zua" + tag);
            std::vector<Enc> outer;
            outer.push_back(r);
            outer.push_back(conj);
            result = disjunction(std::move(outer), "zu" + tag);
        }
        until_memo.emplace(key, result);
        return result;
    }
};

}  // namespace

FormulaRoot encode_formula(MilpProblem& p, const stl::Formula& phi,
                           const std::vector<std::vector<VarId>>& y_vars, std::size_t L,
                           const EncodingParams& params) {
    params.validate();
    if (y_vars.size() != L + 1) {
        throw std::invalid_argument("need one output variable group per time step");
    }
    if (stl::horizon(phi) > L) {
        throw std::invalid_argument("formula horizon " + std::to_string(stl::horizon(phi)) +
                                    " exceeds trajectory horizon L=" + std::to_string(L));
    }
    FormulaEncoder enc{p, y_vars, L, params, {}, {}, {}};
    Enc root = enc.encode(phi, 0);
    FormulaRoot out;
    if (root.is_const()) {
        out.constant = root.constant;
    } else {
        out.var = root.var;
    }
    return out;
}

void encode_cost(MilpProblem& p, const CostSpec& cost, const DynamicsVars& dyn) {
    num::Vec r, q;
    const std::size_t n_u = dyn.u.empty() ? 0 : dyn.u[0].size();
    const std::size_t n_y = dyn.y.empty() ? 0 : dyn.y[0].size();
    switch (cost.kind) {
        case CostKind::InputNorm:
            r.assign(n_u, 1.0);
            q.assign(n_y, 0.0);
            break;
        case CostKind::OutputNorm:
            r.assign(n_u, 0.0);
            q.assign(n_y, 1.0);
            break;
        case CostKind::Mixed:
            r = cost.r;
            q = cost.q;
            if (r.size() != n_u || q.size() != n_y) {
                throw std::invalid_argument("mixed cost weights must match channel counts");
            }
            break;
    }
    for (double w : r)
        if (w < 0.0) throw std::invalid_argument("cost weights must be nonnegative");
    for (double w : q)
        if (w < 0.0) throw std::invalid_argument("cost weights must be nonnegative");

    auto add_abs = [&](VarId x, double weight, const std::string& name) {
        if (weight == 0.0) return;
        const VarId s = p.add_var(name, VarKind::Continuous, 0.0, kInf);
        p.add_constraint({{x, 1.0}, {s, -1.0}}, Sense::Le, 0.0);
        p.add_constraint({{x, -1.0}, {s, -1.0}}, Sense::Le, 0.0);
        p.objective.push_back({s, weight});
    };
    for (std::size_t t = 0; t < dyn.u.size(); ++t) {
        for (std::size_t c = 0; c < n_u; ++c) {
            add_abs(dyn.u[t][c], r[c],
                    "su" + std::to_string(t) + "_" + std::to_string(c + 1));
        }
    }
    for (std::size_t t = 0; t < dyn.y.size(); ++t) {
        for (std::size_t c = 0; c < n_y; ++c) {
            add_abs(dyn.y[t][c], q[c],
                    "sy" + std::to_string(t) + "_" + std::to_string(c + 1));
        }
    }
}

AssembledProblem assemble_problem(const behavior::HankelSystem& sys,
                                  const lti::Trajectory& w_ini, const stl::Formula& phi,
                                  const CostSpec& cost, const lti::Box& input_box,
                                  const EncodingParams& params,
                                  std::span<const num::Vec> d_future) {
    if (!input_box.empty() && input_box.size() != sys.n_u) {
        throw std::invalid_argument("input box must have one interval per input channel");
    }
    AssembledProblem ap;
    if (w_ini.length() >= sys.depth) {
        throw std::invalid_argument("initialization leaves no controlled window in the dictionary");
    }
    const std::size_t L = sys.depth - w_ini.length() - 1;
    ap.dyn = encode_dynamics(ap.problem, sys, w_ini, L, d_future);
    for (std::size_t t = 0; t <= L; ++t) {
        for (std::size_t c = 0; c < sys.n_u; ++c) {
            if (!input_box.empty()) {
                if (!(input_box[c].lo <= input_box[c].hi)) {
                    throw std::invalid_argument("input box interval is empty");
                }
                ap.problem.vars[ap.dyn.u[t][c]].lo = input_box[c].lo;
                ap.problem.vars[ap.dyn.u[t][c]].hi = input_box[c].hi;
            }
        }
    }
    ap.root = encode_formula(ap.problem, phi, ap.dyn.y, L, params);
    if (ap.root.var) {
        ap.problem.add_constraint({{*ap.root.var, 1.0}}, Sense::Eq, 1.0);
    } else if (!ap.root.constant) {
        // Constant-false specification: an unsatisfiable row keeps the
        // problem honestly infeasible.
        ap.problem.add_constraint({}, Sense::Ge, 1.0);
    }
    encode_cost(ap.problem, cost, ap.dyn);
    ap.problem.validate();
    for (const auto& t : ap.problem.objective) {
        if (ap.problem.vars[t.var].kind != VarKind::Continuous) {
            throw std::logic_error("assembled objective must be over continuous variables");
        }
    }
    return ap;
}

namespace {

std::string lp_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_terms(std::ostream& out, const MilpProblem& p, const std::vector<LinTerm>& terms) {
    if (terms.empty()) {
        out << "0 " << p.vars.at(0).name;
        return;
    }
    bool first = true;
    for (const auto& t : terms) {
        const double c = t.coef;
        if (first) {
            out << lp_num(c) << ' ' << p.vars[t.var].name;
            first = false;
        } else {
            out << (c < 0 ? " - " : " + ") << lp_num(std::abs(c)) << ' ' << p.vars[t.var].name;
        }
    }
}

}  // namespace

void export_lp(const MilpProblem& p, std::ostream& out) {
    if (p.vars.empty()) throw std::invalid_argument("cannot export a problem with no variables");
    p.validate();
    out << "\\ generated by ddstl\n";
    out << "Minimize\n obj: ";
    write_terms(out, p, p.objective);
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < p.cons.size(); ++i) {
        const auto& c = p.cons[i];
        out << " c" << i << ": ";
        write_terms(out, p, c.terms);
        switch (c.sense) {
            case Sense::Le: out << " <= "; break;
            case Sense::Eq: out << " = "; break;
            case Sense::Ge: out << " >= "; break;
        }
        out << lp_num(c.rhs) << '\n';
    }
    out << "Bounds\n";
    for (const auto& v : p.vars) {
        if (v.kind == VarKind::Binary) continue;  // declared in the Binary section
        const bool lo_inf = std::isinf(v.lo), hi_inf = std::isinf(v.hi);
        if (lo_inf && hi_inf) {
            out << ' ' << v.name << " free\n";
        } else if (lo_inf) {
            out << ' ' << "-inf <= " << v.name << " <= " << lp_num(v.hi) << '\n';
        } else if (hi_inf) {
            out << ' ' << lp_num(v.lo) << " <= " << v.name << '\n';
        } else {
            out << ' ' << lp_num(v.lo) << " <= " << v.name << " <= " << lp_num(v.hi) << '\n';
        }
    }
    bool have_binary = false;
    for (const auto& v : p.vars) {
        if (v.kind == VarKind::Binary) {
            if (!have_binary) {
                out << "Binary\n";
                have_binary = true;
            }
            out << ' ' << v.name << '\n';
        }
    }
    out << "End\n";
}

void export_lp_file(const MilpProblem& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    export_lp(p, f);
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace ddstl::milp
