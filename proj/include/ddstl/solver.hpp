#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "ddstl/milp.hpp"

// Self-contained MILP solver: dense-tableau two-phase simplex for the LP
// relaxations and deterministic best-first branch-and-bound over the binary
// variables. Built for the desk-scale problems this library produces, not
// for asymptotics.

namespace ddstl::solver {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
    LpStatus status = LpStatus::IterationLimit;
    num::Vec values;     // per-variable, original signed values
    double objective = 0.0;
    num::Vec row_duals;  // one multiplier per constraint (original orientation)
    std::size_t iterations = 0;
};

struct SolverParams {
    double feastol = 1e-7;
    double inttol = 1e-6;
    std::size_t node_limit = 200000;
    double time_limit_s = 300.0;
    std::size_t iteration_limit = 2000000;  // simplex pivots across one LP solve
    // Observer invoked with each improving incumbent objective.
    std::function<void(double)> on_incumbent;

    void validate() const;
};

// Simplex on the LP relaxation (integrality marks ignored). Deterministic:
// Dantzig pricing with lowest-index tie-breaking, Bland's rule after a stall.
LpSolution solve_lp(const milp::MilpProblem& p, const SolverParams& params = {});

struct MilpSolution {
    LpStatus status = LpStatus::IterationLimit;
    num::Vec values;
    double objective = 0.0;
    bool proven = true;    // false when a node/time limit stopped the search
    std::size_t nodes = 0; // LP relaxations solved
    std::size_t lp_iterations = 0;
    std::string note;
};

// Best-first branch-and-bound on the most fractional binary; ties broken by
// lowest variable id, node queue ordered by (bound, insertion index).
MilpSolution solve_milp(const milp::MilpProblem& p, const SolverParams& params = {});

// Max violation of constraints and bounds at the given point; used to check
// returned solutions independently of the solve path.
double max_violation(const milp::MilpProblem& p, const num::Vec& values);

}  // namespace ddstl::solver
