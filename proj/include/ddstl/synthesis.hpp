#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddstl/behavior.hpp"
#include "ddstl/lti.hpp"
#include "ddstl/milp.hpp"
#include "ddstl/solver.hpp"
#include "ddstl/stl.hpp"

// End-to-end synthesis pipeline: minimal horizon, dictionary assembly with a
// PE certificate, MILP encoding and solve, plus closed-loop verification
// against a known model and a model-based solve used for cross-checks.

namespace ddstl::synthesis {

struct SynthesisConfig {
    std::size_t init_len = 3;   // initialization samples pinning the latent state
    std::size_t n_x_bound = 3;  // rough upper bound on the system order
    milp::CostSpec cost;
    lti::Box input_box;  // empty = unbounded inputs
    milp::EncodingParams encoding;
    solver::SolverParams solver;
    double residual_tol = behavior::kDefaultResidualTol;
    // When positive, the initialization is projected onto the data span and
    // accepted if the projection moves it by at most this much. Keeps
    // rounded-to-print initializations usable; 0 demands exact consistency.
    double init_snap_tol = 0.0;
    std::vector<num::Vec> d_future;  // known disturbance over the controlled window

    void validate() const;
};

enum class SynthStatus { Feasible, Infeasible, NotProven };

struct SolveStats {
    std::size_t nodes = 0;
    std::size_t lp_iterations = 0;
    double runtime_s = 0.0;
    bool proven = true;
};

struct SynthesisResult {
    SynthStatus status = SynthStatus::Infeasible;
    std::size_t L = 0;
    std::vector<num::Vec> u_opt;  // length L+1 when feasible
    std::vector<num::Vec> y_pred;
    double objective = 0.0;
    num::Vec alpha;
    behavior::PeCheck pe;
    lti::Trajectory w_ini_used;
    double init_snap_distance = 0.0;
    double behavioral_residual = 0.0;  // dictionary-equation residual at the optimum
    bool big_m_ok = true;
    std::string warnings;
    SolveStats stats;
};

// Smallest L with L+1 > horizon(phi).
std::size_t compute_L(const stl::Formula& phi);

// The data-driven path: dictionary of depth init_len+L+1 from `data`,
// equality pins from w_ini, big-M encoding of phi, branch-and-bound solve.
SynthesisResult synthesize(const lti::Trajectory& data, const lti::Trajectory& w_ini,
                           const stl::Formula& phi, const SynthesisConfig& cfg);

// The assembled (unsolved) data-driven MILP, after init snapping; used for
// LP-file export and cross-checks.
milp::AssembledProblem build_problem(const lti::Trajectory& data, const lti::Trajectory& w_ini,
                                     const stl::Formula& phi, const SynthesisConfig& cfg);

// Identical problem except the behavioral constraint is the explicit
// state-space recursion with a free initial state pinned by w_ini. Test-side
// oracle for completeness cross-checks; requires the true model.
SynthesisResult model_based_synthesize(const lti::StateSpaceModel& model,
                                       const lti::Trajectory& w_ini, const stl::Formula& phi,
                                       const SynthesisConfig& cfg);

struct Verification {
    bool satisfied = false;
    std::vector<num::Vec> y;  // simulated closed-loop output
    std::optional<std::size_t> t_fail;
    double init_residual = 0.0;  // state-reconstruction fit of w_ini
};

// Reconstruct a state consistent with w_ini by least squares over the
// model's observability relations, simulate u_opt, and monitor phi at t=0.
// Throws when w_ini cannot be fit within tol (bad initialization data).
Verification verify_closed_loop(const lti::StateSpaceModel& model,
                                const lti::Trajectory& w_ini,
                                std::span<const num::Vec> u_opt, const stl::Formula& phi,
                                std::span<const num::Vec> d_future = {}, double tol = 1e-6);

// Result bundle: u_opt.csv, y_pred.csv, y_closed_loop.csv (when verified),
// report.json. Returns the report text that was written.
std::string write_result_bundle(const std::string& dir, const SynthesisResult& result,
                                const std::optional<Verification>& verification,
                                const std::string& cost_name);

// Schema check for report.json; throws std::runtime_error with the first
// problem found. Used by tests and by consumers of the bundle.
void validate_report_json(const std::string& json_text);

}  // namespace ddstl::synthesis
