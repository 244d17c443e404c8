#include "ddstl/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

namespace ddstl::solver {

using milp::MilpProblem;
using milp::Sense;
using milp::VarKind;

void SolverParams::validate() const {
    if (!(feastol > 0) || !(inttol > 0) || node_limit == 0 || !(time_limit_s > 0) ||
        iteration_limit == 0) {
        throw std::invalid_argument("solver parameters must be positive");
    }
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;

// Column-of-origin bookkeeping for mapping tableau values back to problem
// variables: value = shift + sign * x'. Split (free) variables contribute
// through two columns.
struct ColMap {
    int var = -1;
    double sign = 1.0;
    double shift = 0.0;
};

struct Tableau {
    std::size_t m = 0, n = 0;     // rows, columns excluding rhs
    std::vector<double> a;        // m x (n+1)
    std::vector<double> cost;     // n+1; cost[n] = -objective
    std::vector<int> basis;
    std::vector<char> blocked;

    double& at(std::size_t i, std::size_t j) { return a[i * (n + 1) + j]; }
    double get(std::size_t i, std::size_t j) const { return a[i * (n + 1) + j]; }

    void pivot(std::size_t r, std::size_t c) {
        const double piv = at(r, c);
        const double inv = 1.0 / piv;
        for (std::size_t j = 0; j <= n; ++j) at(r, j) *= inv;
        at(r, c) = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r) continue;
            const double f = at(i, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n; ++j) at(i, j) -= f * at(r, j);
            at(i, c) = 0.0;
        }
        const double fc = cost[c];
        if (fc != 0.0) {
            for (std::size_t j = 0; j <= n; ++j) cost[j] -= fc * at(r, j);
            cost[c] = 0.0;
        }
        basis[r] = static_cast<int>(c);
    }

    LpStatus run(std::size_t& iterations, std::size_t iteration_limit) {
        bool bland = false;
        std::size_t no_improve = 0;
        double last_obj = -cost[n];
        const std::size_t stall_limit = 4 * (m + n) + 64;

        while (iterations < iteration_limit) {
            int enter = -1;
            if (!bland) {
                double best = -kCostTol;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!blocked[j] && cost[j] < best) {
                        best = cost[j];
                        enter = static_cast<int>(j);
                    }
                }
            } else {
                for (std::size_t j = 0; j < n; ++j) {
                    if (!blocked[j] && cost[j] < -kCostTol) {
                        enter = static_cast<int>(j);
                        break;
                    }
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            int leave = -1;
            double best_ratio = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double aij = get(i, static_cast<std::size_t>(enter));
                if (aij <= kPivotTol) continue;
                const double ratio = get(i, n) / aij;
                if (leave < 0 || ratio < best_ratio - 1e-12) {
                    best_ratio = ratio;
                    leave = static_cast<int>(i);
                } else if (ratio <= best_ratio + 1e-12 &&
                           basis[i] < basis[static_cast<std::size_t>(leave)]) {
                    leave = static_cast<int>(i);
                }
            }
            if (leave < 0) return LpStatus::Unbounded;

            pivot(static_cast<std::size_t>(leave), static_cast<std::size_t>(enter));
            ++iterations;

            const double obj = -cost[n];
            if (obj > last_obj - 1e-13) {
                if (++no_improve > stall_limit) bland = true;  // cycling guard
            } else {
                no_improve = 0;
                last_obj = obj;
            }
        }
        return LpStatus::IterationLimit;
    }
};

struct Row {
    std::vector<double> coef;  // over structural columns
    double rhs = 0.0;
    Sense sense = Sense::Eq;
    int orig_row = -1;          // index into problem constraints, -1 for bound rows
    double dual_factor = 1.0;   // scaling * flip, maps tableau duals back
};

LpSolution solve_lp_bounds(const MilpProblem& p, const num::Vec& lo, const num::Vec& hi,
                           const SolverParams& params, bool want_duals = true) {
    LpSolution out;
    const std::size_t nv = p.vars.size();

    // Structural columns: shift bounded-below variables to x >= 0, mirror
    // bounded-above-only ones, split free ones.
    std::vector<ColMap> cols;
    std::vector<std::pair<std::size_t, double>> upper_rows;  // (column, bound)
    std::vector<std::vector<std::size_t>> var_cols(nv);
    for (std::size_t j = 0; j < nv; ++j) {
        const double l = lo[j], h = hi[j];
        if (l > h) {
            out.status = LpStatus::Infeasible;  // contradictory fixings
            return out;
        }
        if (std::isfinite(l)) {
            cols.push_back({static_cast<int>(j), 1.0, l});
            var_cols[j].push_back(cols.size() - 1);
            if (std::isfinite(h)) upper_rows.push_back({cols.size() - 1, h - l});
        } else if (std::isfinite(h)) {
            cols.push_back({static_cast<int>(j), -1.0, h});
            var_cols[j].push_back(cols.size() - 1);
        } else {
            cols.push_back({static_cast<int>(j), 1.0, 0.0});
            var_cols[j].push_back(cols.size() - 1);
            cols.push_back({static_cast<int>(j), -1.0, 0.0});
            var_cols[j].push_back(cols.size() - 1);
        }
    }
    const std::size_t nstruct = cols.size();

    std::vector<Row> rows;
    rows.reserve(p.cons.size() + upper_rows.size());
    for (std::size_t i = 0; i < p.cons.size(); ++i) {
        Row r;
        r.coef.assign(nstruct, 0.0);
        r.sense = p.cons[i].sense;
        r.rhs = p.cons[i].rhs;
        r.orig_row = static_cast<int>(i);
        for (const auto& t : p.cons[i].terms) {
            for (std::size_t c : var_cols[t.var]) {
                r.coef[c] += t.coef * cols[c].sign;
            }
            // x = shift + sum(sign * x'); the shift lives on the first column.
            r.rhs -= t.coef * cols[var_cols[t.var][0]].shift;
        }
        rows.push_back(std::move(r));
    }
    for (const auto& [c, ub] : upper_rows) {
        Row r;
        r.coef.assign(nstruct, 0.0);
        r.coef[c] = 1.0;
        r.rhs = ub;
        r.sense = Sense::Le;
        rows.push_back(std::move(r));
    }

    // Row equilibration and rhs >= 0 normalization.
    for (auto& r : rows) {
        double maxc = 0.0;
        for (double c : r.coef) maxc = std::max(maxc, std::abs(c));
        if (maxc > 0.0) {
            const double s = 1.0 / maxc;
            for (double& c : r.coef) c *= s;
            r.rhs *= s;
            r.dual_factor = s;
        }
        if (r.rhs < 0.0) {
            for (double& c : r.coef) c = -c;
            r.rhs = -r.rhs;
            r.dual_factor = -r.dual_factor;
            r.sense = r.sense == Sense::Le ? Sense::Ge
                      : r.sense == Sense::Ge ? Sense::Le
                                             : Sense::Eq;
        }
    }

    const std::size_t m = rows.size();
    std::size_t nslack = 0, nart = 0;
    for (const auto& r : rows) {
        if (r.sense != Sense::Eq) ++nslack;
        if (r.sense != Sense::Le) ++nart;
    }
    const std::size_t n = nstruct + nslack + nart;

    Tableau t;
    t.m = m;
    t.n = n;
    t.a.assign(m * (n + 1), 0.0);
    t.cost.assign(n + 1, 0.0);
    t.basis.assign(m, -1);
    t.blocked.assign(n, 0);

    // Pristine copy of the constraint columns, for re-solving the basis
    // system once pivoting has settled: long pivot sequences on poorly
    // conditioned dictionaries drift by far more than feastol.
    num::Matrix a0;
    num::Vec b0(m, 0.0);

    std::vector<int> unit_col(m, -1);       // +e_i column per row, for duals
    std::vector<char> is_art(n, 0);
    std::size_t next_slack = nstruct;
    std::size_t next_art = nstruct + nslack;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < nstruct; ++j) t.at(i, j) = rows[i].coef[j];
        t.at(i, n) = rows[i].rhs;
        if (rows[i].sense == Sense::Le) {
            t.at(i, next_slack) = 1.0;
            t.basis[i] = static_cast<int>(next_slack);
            unit_col[i] = static_cast<int>(next_slack);
            ++next_slack;
        } else if (rows[i].sense == Sense::Ge) {
            t.at(i, next_slack) = -1.0;
            ++next_slack;
            t.at(i, next_art) = 1.0;
            t.basis[i] = static_cast<int>(next_art);
            unit_col[i] = static_cast<int>(next_art);
            is_art[next_art] = 1;
            ++next_art;
        } else {
            t.at(i, next_art) = 1.0;
            t.basis[i] = static_cast<int>(next_art);
            unit_col[i] = static_cast<int>(next_art);
            is_art[next_art] = 1;
            ++next_art;
        }
    }
    a0 = num::Matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) a0(i, j) = t.get(i, j);
        b0[i] = t.get(i, n);
    }

    // Re-solve B x_B = b at the current basis with a fresh factorization and
    // write the repaired values back into x'.
    auto refined_basics = [&](num::Vec* x_basic) {
        num::Matrix basis_mat(m, m);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < m; ++k) {
                basis_mat(i, k) = a0(i, static_cast<std::size_t>(t.basis[k]));
            }
        }
        auto fit = num::solve_least_squares(basis_mat, b0, 1e-9, 1e-14);
        *x_basic = std::move(fit.x);
    };

    // Phase 1: minimize the artificial sum.
    if (nart > 0) {
        for (std::size_t j = 0; j < n; ++j) t.cost[j] = is_art[j] ? 1.0 : 0.0;
        t.cost[n] = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (is_art[static_cast<std::size_t>(t.basis[i])]) {
                for (std::size_t j = 0; j <= n; ++j) t.cost[j] -= t.get(i, j);
            }
        }
        LpStatus st = t.run(out.iterations, params.iteration_limit);
        if (st == LpStatus::IterationLimit) {
            out.status = st;
            return out;
        }
        if (-t.cost[n] > params.feastol) {
            // Confirm against a repaired basic solution before declaring
            // infeasibility; tableau drift must not manufacture one.
            num::Vec xb;
            refined_basics(&xb);
            double art_sum = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                if (is_art[static_cast<std::size_t>(t.basis[k])]) art_sum += std::abs(xb[k]);
            }
            if (art_sum > params.feastol) {
                out.status = LpStatus::Infeasible;
                return out;
            }
        }
        // Drive artificials out of the basis where possible; rows that cannot
        // be cleared are redundant and their artificial stays pinned at zero.
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t b = static_cast<std::size_t>(t.basis[i]);
            if (!is_art[b]) continue;
            for (std::size_t j = 0; j < nstruct + nslack; ++j) {
                if (std::abs(t.get(i, j)) > 1e-7) {
                    t.pivot(i, j);
                    break;
                }
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (is_art[j]) t.blocked[j] = 1;
        }
    }

    // Phase 2 objective, rebuilt from scratch against the current basis.
    std::vector<double> c2(n + 1, 0.0);
    for (const auto& term : p.objective) {
        for (std::size_t c : var_cols[term.var]) c2[c] += term.coef * cols[c].sign;
    }
    t.cost = c2;
    t.cost[n] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double cb = c2[static_cast<std::size_t>(t.basis[i])];
        if (cb != 0.0) {
            for (std::size_t j = 0; j <= n; ++j) t.cost[j] -= cb * t.get(i, j);
        }
    }
    LpStatus st = t.run(out.iterations, params.iteration_limit);
    if (st != LpStatus::Optimal) {
        out.status = st;
        return out;
    }

    // Recover original variable values from a repaired basis solve.
    num::Vec xb;
    refined_basics(&xb);
    std::vector<double> xprime(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        xprime[static_cast<std::size_t>(t.basis[i])] = xb[i];
    }
    out.values.assign(nv, 0.0);
    for (std::size_t j = 0; j < nv; ++j) {
        double v = 0.0;
        bool shifted = false;
        for (std::size_t c : var_cols[j]) {
            if (!shifted) {
                v = cols[c].shift;
                shifted = true;
            }
            v += cols[c].sign * xprime[c];
        }
        out.values[j] = v;
    }
    out.objective = 0.0;
    for (const auto& term : p.objective) out.objective += term.coef * out.values[term.var];

    // Duals re-solved at the final basis: B^T y = c_B.
    if (want_duals) {
        num::Matrix basis_t(m, m);
        num::Vec cb(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t i = 0; i < m; ++i) {
                basis_t(k, i) = a0(i, static_cast<std::size_t>(t.basis[k]));
            }
            cb[k] = c2[static_cast<std::size_t>(t.basis[k])];
        }
        auto dual_fit = num::solve_least_squares(basis_t, cb, 1e-9, 1e-14);
        out.row_duals.assign(p.cons.size(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            if (rows[i].orig_row < 0) continue;
            out.row_duals[static_cast<std::size_t>(rows[i].orig_row)] =
                dual_fit.x[i] * rows[i].dual_factor;
        }
    }
    out.status = LpStatus::Optimal;
    return out;
}

}  // namespace

LpSolution solve_lp(const MilpProblem& p, const SolverParams& params) {
    params.validate();
    p.validate();
    num::Vec lo(p.vars.size()), hi(p.vars.size());
    for (std::size_t j = 0; j < p.vars.size(); ++j) {
        lo[j] = p.vars[j].lo;
        hi[j] = p.vars[j].hi;
    }
    return solve_lp_bounds(p, lo, hi, params);
}

double max_violation(const MilpProblem& p, const num::Vec& values) {
    double worst = 0.0;
    for (const auto& c : p.cons) {
        double lhs = 0.0;
        for (const auto& t : c.terms) lhs += t.coef * values[t.var];
        switch (c.sense) {
            case Sense::Le: worst = std::max(worst, lhs - c.rhs); break;
            case Sense::Ge: worst = std::max(worst, c.rhs - lhs); break;
            case Sense::Eq: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
        }
    }
    for (std::size_t j = 0; j < p.vars.size(); ++j) {
        worst = std::max(worst, p.vars[j].lo - values[j]);
        worst = std::max(worst, values[j] - p.vars[j].hi);
    }
    return worst;
}

MilpSolution solve_milp(const MilpProblem& p, const SolverParams& params) {
    params.validate();
    p.validate();
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    std::vector<milp::VarId> binaries;
    for (std::size_t j = 0; j < p.vars.size(); ++j) {
        if (p.vars[j].kind == VarKind::Binary) binaries.push_back(static_cast<milp::VarId>(j));
    }

    num::Vec base_lo(p.vars.size()), base_hi(p.vars.size());
    for (std::size_t j = 0; j < p.vars.size(); ++j) {
        base_lo[j] = p.vars[j].lo;
        base_hi[j] = p.vars[j].hi;
    }

    MilpSolution out;
    struct Node {
        double bound;
        std::size_t seq;
        std::vector<std::pair<milp::VarId, double>> fixes;
        num::Vec values;
        bool operator>(const Node& o) const {
            if (bound != o.bound) return bound > o.bound;
            return seq > o.seq;
        }
    };
    std::priority_queue<Node, std::vector<Node>, std::greater<Node>> queue;
    std::size_t seq = 0;

    auto solve_node = [&](const std::vector<std::pair<milp::VarId, double>>& fixes) {
        num::Vec lo = base_lo, hi = base_hi;
        for (const auto& [v, val] : fixes) {
            lo[v] = val;
            hi[v] = val;
        }
        LpSolution sol = solve_lp_bounds(p, lo, hi, params, /*want_duals=*/false);
        out.lp_iterations += sol.iterations;
        ++out.nodes;
        return sol;
    };

    bool have_incumbent = false;
    double incumbent_obj = 0.0;
    num::Vec incumbent_values;
    auto offer_incumbent = [&](double obj, const num::Vec& values) {
        if (!have_incumbent || obj < incumbent_obj - 1e-9) {
            have_incumbent = true;
            incumbent_obj = obj;
            incumbent_values = values;
            if (params.on_incumbent) params.on_incumbent(incumbent_obj);
        }
    };

    // Constraints touching each binary, for the rounding heuristic.
    std::vector<std::vector<std::size_t>> cons_of_binary(p.vars.size());
    for (std::size_t i = 0; i < p.cons.size(); ++i) {
        for (const auto& term : p.cons[i].terms) {
            if (p.vars[term.var].kind == VarKind::Binary) {
                cons_of_binary[term.var].push_back(i);
            }
        }
    }
    auto row_violation = [&](const milp::Constraint& c, const num::Vec& values,
                             milp::VarId v, double v_value) {
        double lhs = 0.0;
        for (const auto& term : c.terms) {
            lhs += term.coef * (term.var == v ? v_value : values[term.var]);
        }
        switch (c.sense) {
            case Sense::Le: return std::max(0.0, lhs - c.rhs);
            case Sense::Ge: return std::max(0.0, c.rhs - lhs);
            default: return std::abs(lhs - c.rhs);
        }
    };

    // Rounding heuristic, used until a first incumbent exists. Relaxation
    // values are a poor guide for big-M indicators (they sit just above
    // zero whatever the predicate truth), so each binary is set to whichever
    // of 0/1 violates its own rows least with everything else held at the
    // node's values; plain nearest rounding is the fallback pattern.
    auto try_rounding = [&](const Node& node) {
        std::set<milp::VarId> fixed;
        for (const auto& [v, val] : node.fixes) fixed.insert(v);
        std::vector<std::pair<milp::VarId, double>> by_violation = node.fixes;
        std::vector<std::pair<milp::VarId, double>> by_nearest = node.fixes;
        bool differ = false;
        for (milp::VarId v : binaries) {
            if (fixed.count(v)) continue;
            double v0 = 0.0, v1 = 0.0;
            for (std::size_t ci : cons_of_binary[v]) {
                v0 += row_violation(p.cons[ci], node.values, v, 0.0);
                v1 += row_violation(p.cons[ci], node.values, v, 1.0);
            }
            const double nearest = std::round(node.values[static_cast<std::size_t>(v)]);
            const double truthlike = v0 < v1 - 1e-12 ? 0.0
                                     : v1 < v0 - 1e-12 ? 1.0
                                                       : nearest;
            by_violation.push_back({v, truthlike});
            by_nearest.push_back({v, nearest});
            differ = differ || truthlike != nearest;
        }
        LpSolution sol = solve_node(by_violation);
        if (sol.status == LpStatus::Optimal) offer_incumbent(sol.objective, sol.values);
        if (!have_incumbent && differ) {
            sol = solve_node(by_nearest);
            if (sol.status == LpStatus::Optimal) offer_incumbent(sol.objective, sol.values);
        }
    };

    LpSolution root = solve_node({});
    if (root.status == LpStatus::Infeasible || root.status == LpStatus::Unbounded ||
        root.status == LpStatus::IterationLimit) {
        out.status = root.status;
        out.proven = root.status != LpStatus::IterationLimit;
        return out;
    }

    queue.push({root.objective, seq++, {}, std::move(root.values)});

    bool limits_hit = false;
    while (!queue.empty()) {
        if (out.nodes >= params.node_limit || elapsed() > params.time_limit_s) {
            limits_hit = true;
            break;
        }
        Node node = queue.top();
        queue.pop();
        if (have_incumbent && node.bound >= incumbent_obj - 1e-9) continue;

        // Most fractional binary; ties to the lowest variable id.
        int branch_var = -1;
        double most_frac = params.inttol;
        for (milp::VarId v : binaries) {
            const double val = node.values[static_cast<std::size_t>(v)];
            const double frac = std::abs(val - std::round(val));
            if (frac > most_frac) {
                most_frac = frac;
                branch_var = v;
            }
        }
        if (branch_var < 0) {
            offer_incumbent(node.bound, node.values);
            continue;
        }

        if (!have_incumbent) try_rounding(node);
        if (have_incumbent && node.bound >= incumbent_obj - 1e-9) continue;

        for (double fix : {0.0, 1.0}) {
            auto fixes = node.fixes;
            fixes.push_back({static_cast<milp::VarId>(branch_var), fix});
            LpSolution sol = solve_node(fixes);
            if (sol.status == LpStatus::IterationLimit) {
                limits_hit = true;
                break;
            }
            if (sol.status != LpStatus::Optimal) continue;
            if (have_incumbent && sol.objective >= incumbent_obj - 1e-9) continue;
            queue.push({sol.objective, seq++, std::move(fixes), std::move(sol.values)});
        }
        if (limits_hit) break;
    }

    if (have_incumbent) {
        out.status = LpStatus::Optimal;
        out.values = std::move(incumbent_values);
        out.objective = incumbent_obj;
        out.proven = !limits_hit;
        if (limits_hit) out.note = "stopped at node/time limit; objective bound not proven";
    } else if (limits_hit) {
        out.status = LpStatus::IterationLimit;
        out.proven = false;
        out.note = "stopped at node/time limit before finding an integral solution";
    } else {
        out.status = LpStatus::Infeasible;
        out.proven = true;
    }
    return out;
}

}  // namespace ddstl::solver
