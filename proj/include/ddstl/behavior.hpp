#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddstl/lti.hpp"
#include "ddstl/matrix.hpp"

// Data-driven characterization of the unknown system: block-Hankel
// construction, persistence-of-excitation certification, trajectory
// membership and continuation. Known disturbance channels are folded into
// the input block, so the effective input width is n_u + n_d throughout.

namespace ddstl::behavior {

inline constexpr double kDefaultResidualTol = 1e-8;

// Data dictionary: stacked input/output Hankel matrices plus the PE
// certificate established at assembly time.
struct HankelSystem {
    num::Matrix Hu;  // depth*(n_u+n_d) rows
    num::Matrix Hy;  // depth*n_y rows
    std::size_t depth = 0;
    std::size_t n_u = 0, n_d = 0, n_y = 0;
    std::size_t source_length = 0;  // number of data samples the dictionary was built from
    std::optional<std::size_t> pe_order_certified;

    std::size_t n_in() const { return n_u + n_d; }
    std::size_t cols() const { return Hu.cols(); }
};

// Block-Hankel matrix of the given depth: column j stacks samples
// z_j .. z_{j+depth-1}. Shape is (depth * n_z) x (len - depth + 1).
num::Matrix build_hankel(std::span<const num::Vec> z, std::size_t depth);

struct PeCheck {
    bool ok = false;
    std::size_t achieved_rank = 0;
    std::size_t required_rank = 0;
    std::string note;
    explicit operator bool() const { return ok; }
};

// Persistence of excitation of the given order: the depth-`order` Hankel of
// the sequence must have full row rank. Too-short data fails with a note.
PeCheck check_pe(std::span<const num::Vec> u, std::size_t order,
                 double tol = num::kDefaultRankTol);

// Build the dictionary of depth init_len + L + 1 from one data trajectory.
// When an order bound is supplied the input sequence is PE-checked at order
// depth + n_x_bound and the certificate recorded.
HankelSystem assemble(const lti::Trajectory& data, std::size_t init_len, std::size_t L,
                      std::optional<std::size_t> n_x_bound = std::nullopt,
                      double rank_tol = num::kDefaultRankTol);

struct Membership {
    bool in_span = false;
    num::Vec alpha;   // witness combination when in_span
    double residual;  // ||[Hu;Hy] alpha - w||_2
};

// Tests whether the stacked candidate trajectory (all inputs first, then all
// outputs, each block in time order) lies in the dictionary's column span.
Membership membership(const HankelSystem& sys, const num::Vec& w_stacked,
                      double tol = kDefaultResidualTol);

struct Continuation {
    std::vector<num::Vec> y;  // the L+1 future outputs
    num::Vec alpha;
    double pinned_residual;  // fit of the pinned rows; large values mean bad data/init
    bool unique = true;      // false when the data leaves the future outputs underdetermined
};

// Unique continuation: pin the init input/output blocks and all future
// inputs, read the future outputs off the combination. Throws when the
// pinned system cannot be fit within tol (bad initialization or data).
Continuation continuation(const HankelSystem& sys, const lti::Trajectory& w_ini,
                          std::span<const num::Vec> u_future,
                          std::span<const num::Vec> d_future = {},
                          double tol = kDefaultResidualTol);

// Stack a trajectory in dictionary order: all (extended) inputs, then all
// outputs. Length must equal the dictionary depth to be used with membership.
num::Vec stack_trajectory(const lti::Trajectory& traj);

}  // namespace ddstl::behavior
