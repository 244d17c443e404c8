#include "ddstl/behavior.hpp"

#include <stdexcept>

namespace ddstl::behavior {

namespace {

std::vector<num::Vec> extended_inputs(const lti::Trajectory& traj) {
    std::vector<num::Vec> ext;
    ext.reserve(traj.length());
    for (std::size_t t = 0; t < traj.length(); ++t) {
        num::Vec sample = traj.u[t];
        if (traj.n_d > 0) {
            sample.insert(sample.end(), traj.d[t].begin(), traj.d[t].end());
        }
        ext.push_back(std::move(sample));
    }
    return ext;
}

num::Matrix stacked_dictionary(const HankelSystem& sys) { return num::vstack(sys.Hu, sys.Hy); }

}  // namespace

num::Matrix build_hankel(std::span<const num::Vec> z, std::size_t depth) {
    if (depth < 1) throw std::invalid_argument("hankel depth must be at least 1");
    if (z.size() < depth) {
        throw std::invalid_argument("sequence of length " + std::to_string(z.size()) +
                                    " is too short for hankel depth " + std::to_string(depth));
    }
    const std::size_t n_z = z.front().size();
    for (const auto& sample : z) {
        if (sample.size() != n_z) throw std::invalid_argument("ragged sample widths in sequence");
    }
    const std::size_t cols = z.size() - depth + 1;
    num::Matrix h(depth * n_z, cols);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t b = 0; b < depth; ++b) {
            for (std::size_t c = 0; c < n_z; ++c) {
                h(b * n_z + c, j) = z[j + b][c];
            }
        }
    }
    return h;
}

PeCheck check_pe(std::span<const num::Vec> u, std::size_t order, double tol) {
    if (order < 1) throw std::invalid_argument("PE order must be at least 1");
    PeCheck res;
    const std::size_t n_z = u.empty() ? 0 : u.front().size();
    res.required_rank = order * n_z;
    if (u.size() < order) {
        res.note = "sequence of length " + std::to_string(u.size()) +
                   " cannot form a hankel of depth " + std::to_string(order);
        return res;
    }
    num::Matrix h = build_hankel(u, order);
    if (h.rows() > h.cols()) {
        res.note = "hankel has more rows (" + std::to_string(h.rows()) + ") than columns (" +
                   std::to_string(h.cols()) + "); full row rank is impossible";
        res.achieved_rank = num::rank(h, tol);
        return res;
    }
    res.achieved_rank = num::rank(h, tol);
    res.ok = res.achieved_rank == res.required_rank;
    if (!res.ok) {
        res.note = "rank " + std::to_string(res.achieved_rank) + " below required " +
                   std::to_string(res.required_rank);
    }
    return res;
}

HankelSystem assemble(const lti::Trajectory& data, std::size_t init_len, std::size_t L,
                      std::optional<std::size_t> n_x_bound, double rank_tol) {
    data.validate();
    const std::size_t depth = init_len + L + 1;
    if (data.length() < depth) {
        throw std::invalid_argument("data length " + std::to_string(data.length()) +
                                    " is below the minimum " + std::to_string(depth) +
                                    " needed for init_len=" + std::to_string(init_len) +
                                    ", L=" + std::to_string(L));
    }
    auto ext = extended_inputs(data);

    HankelSystem sys;
    sys.depth = depth;
    sys.n_u = data.n_u;
    sys.n_d = data.n_d;
    sys.n_y = data.n_y;
    sys.source_length = data.length();
    sys.Hu = build_hankel(ext, depth);
    sys.Hy = build_hankel(std::span<const num::Vec>(data.y), depth);

    if (n_x_bound) {
        const std::size_t order = depth + *n_x_bound;
        PeCheck pe = check_pe(ext, order, rank_tol);
        if (pe.ok) sys.pe_order_certified = order;
    }
    return sys;
}

num::Vec stack_trajectory(const lti::Trajectory& traj) {
    traj.validate();
    num::Vec w;
    w.reserve(traj.length() * (traj.n_u + traj.n_d + traj.n_y));
    for (std::size_t t = 0; t < traj.length(); ++t) {
        w.insert(w.end(), traj.u[t].begin(), traj.u[t].end());
        if (traj.n_d > 0) w.insert(w.end(), traj.d[t].begin(), traj.d[t].end());
    }
    for (std::size_t t = 0; t < traj.length(); ++t) {
        w.insert(w.end(), traj.y[t].begin(), traj.y[t].end());
    }
    return w;
}

Membership membership(const HankelSystem& sys, const num::Vec& w_stacked, double tol) {
    const std::size_t expected = sys.depth * (sys.n_in() + sys.n_y);
    if (w_stacked.size() != expected) {
        throw std::invalid_argument("stacked trajectory length " +
                                    std::to_string(w_stacked.size()) + " does not match " +
                                    std::to_string(expected));
    }
    auto sol = num::solve_least_squares(stacked_dictionary(sys), w_stacked, tol);
    Membership res;
    res.in_span = sol.within_tol;
    res.residual = sol.residual;
    if (res.in_span) res.alpha = std::move(sol.x);
    return res;
}

Continuation continuation(const HankelSystem& sys, const lti::Trajectory& w_ini,
                          std::span<const num::Vec> u_future,
                          std::span<const num::Vec> d_future, double tol) {
    w_ini.validate();
    if (w_ini.n_u != sys.n_u || w_ini.n_y != sys.n_y || w_ini.n_d != sys.n_d) {
        throw std::invalid_argument("initialization channel counts do not match the dictionary");
    }
    const std::size_t horizon = u_future.size();
    if (horizon == 0) throw std::invalid_argument("future input sequence is empty");
    if (w_ini.length() + horizon != sys.depth) {
        throw std::invalid_argument("init length " + std::to_string(w_ini.length()) +
                                    " plus horizon " + std::to_string(horizon) +
                                    " must equal dictionary depth " + std::to_string(sys.depth));
    }
    if ((sys.n_d > 0) != !d_future.empty() || (sys.n_d > 0 && d_future.size() != horizon)) {
        throw std::invalid_argument("future disturbance samples must match the horizon");
    }

    const std::size_t init_len = w_ini.length();
    const std::size_t n_in = sys.n_in();
    const std::size_t pinned_rows = sys.depth * n_in + init_len * sys.n_y;
    const std::size_t cols = sys.cols();

    num::Matrix a(pinned_rows, cols);
    num::Vec b(pinned_rows, 0.0);
    std::size_t r = 0;
    auto copy_row = [&](const num::Matrix& src, std::size_t src_row, double rhs) {
        for (std::size_t j = 0; j < cols; ++j) a(r, j) = src(src_row, j);
        b[r] = rhs;
        ++r;
    };

    for (std::size_t t = 0; t < sys.depth; ++t) {
        const bool init = t < init_len;
        for (std::size_t c = 0; c < sys.n_u; ++c) {
            const double v = init ? w_ini.u[t][c] : u_future[t - init_len][c];
            copy_row(sys.Hu, t * n_in + c, v);
        }
        for (std::size_t c = 0; c < sys.n_d; ++c) {
            const double v = init ? w_ini.d[t][c] : d_future[t - init_len][c];
            copy_row(sys.Hu, t * n_in + sys.n_u + c, v);
        }
    }
    for (std::size_t t = 0; t < init_len; ++t) {
        for (std::size_t c = 0; c < sys.n_y; ++c) {
            copy_row(sys.Hy, t * sys.n_y + c, w_ini.y[t][c]);
        }
    }

    auto sol = num::solve_least_squares(a, b, tol);
    if (!sol.within_tol) {
        throw std::runtime_error(
            "initialization and inputs cannot be matched by the data dictionary (residual " +
            std::to_string(sol.residual) + "); data not PE or initialization not a trajectory");
    }

    Continuation out;
    out.alpha = std::move(sol.x);
    out.pinned_residual = sol.residual;

    // Future outputs are unique iff the free rows add no new row space beyond
    // the pinned rows; otherwise some null direction of the pinned system
    // moves them.
    num::Matrix future_rows(horizon * sys.n_y, cols);
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t c = 0; c < sys.n_y; ++c) {
            for (std::size_t j = 0; j < cols; ++j) {
                future_rows(t * sys.n_y + c, j) = sys.Hy((init_len + t) * sys.n_y + c, j);
            }
        }
    }
    out.unique = num::rank(a) == num::rank(num::vstack(a, future_rows));

    out.y.assign(horizon, num::Vec(sys.n_y, 0.0));
    num::Vec flat = num::matvec(future_rows, out.alpha);
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t c = 0; c < sys.n_y; ++c) out.y[t][c] = flat[t * sys.n_y + c];
    }
    return out;
}

}  // namespace ddstl::behavior
