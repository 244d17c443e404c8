#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddstl/behavior.hpp"
#include "ddstl/stl.hpp"

// Mixed-integer linear program assembly: behavioral equality constraints from
// the data dictionary, big-M satisfaction encoding of the STL formula,
// linearized (weighted 1-norm) cost, and LP-format export.

namespace ddstl::milp {

using VarId = std::int32_t;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary, UnitInterval };

struct Variable {
    std::string name;
    VarKind kind = VarKind::Continuous;
    double lo = -kInf, hi = kInf;  // Binary/UnitInterval carry [0,1]
};

enum class Sense { Le, Eq, Ge };

struct LinTerm {
    VarId var;
    double coef;
};

struct Constraint {
    std::vector<LinTerm> terms;
    Sense sense = Sense::Eq;
    double rhs = 0.0;
};

struct MilpProblem {
    std::vector<Variable> vars;
    std::vector<Constraint> cons;
    std::vector<LinTerm> objective;  // minimized

    // dimensions carried for reporting
    std::size_t init_len = 0, L = 0, n_u = 0, n_y = 0;

    VarId add_var(std::string name, VarKind kind, double lo = -kInf, double hi = kInf);
    void add_constraint(std::vector<LinTerm> terms, Sense sense, double rhs);
    std::size_t binary_count() const;
    void validate() const;
};

// Big-M / epsilon margins for the predicate ties; optionally per time step.
struct EncodingParams {
    double big_m = 1e4;
    double eps = 1e-6;
    std::vector<double> big_m_per_time;
    std::vector<double> eps_per_time;

    double big_m_at(std::size_t t) const {
        return t < big_m_per_time.size() ? big_m_per_time[t] : big_m;
    }
    double eps_at(std::size_t t) const {
        return t < eps_per_time.size() ? eps_per_time[t] : eps;
    }
    void validate() const;
};

struct DynamicsVars {
    std::vector<VarId> alpha;
    std::vector<std::vector<VarId>> u;  // [t][channel], t = 0..L
    std::vector<std::vector<VarId>> y;
};

// Behavioral equality block: one alpha per dictionary column, fresh u/y
// variables over the controlled window, initialization samples substituted as
// constants. Future disturbance channels are pinned to the given schedule.
DynamicsVars encode_dynamics(MilpProblem& p, const behavior::HankelSystem& sys,
                             const lti::Trajectory& w_ini, std::size_t L,
                             std::span<const num::Vec> d_future = {});

// Satisfaction encoding: binary variable per predicate atom per needed time
// step, unit-interval variables for composite operators, window ends clamped
// to L. Returns the root variable to pin, or nullopt when the formula folds
// to a constant (value returned in `constant`).
struct FormulaRoot {
    std::optional<VarId> var;
    bool constant = true;  // meaningful when !var
};
FormulaRoot encode_formula(MilpProblem& p, const stl::Formula& phi,
                           const std::vector<std::vector<VarId>>& y_vars, std::size_t L,
                           const EncodingParams& params);

enum class CostKind { InputNorm, OutputNorm, Mixed };
struct CostSpec {
    CostKind kind = CostKind::InputNorm;
    num::Vec r;  // per-input-channel weights (Mixed)
    num::Vec q;  // per-output-channel weights (Mixed)
};

// Weighted 1-norm via absolute-value auxiliaries s >= x, s >= -x.
void encode_cost(MilpProblem& p, const CostSpec& cost, const DynamicsVars& dyn);

struct AssembledProblem {
    MilpProblem problem;
    DynamicsVars dyn;
    FormulaRoot root;
};

// Full problem: dynamics + formula + cost + input box bounds + root pin.
AssembledProblem assemble_problem(const behavior::HankelSystem& sys,
                                  const lti::Trajectory& w_ini, const stl::Formula& phi,
                                  const CostSpec& cost, const lti::Box& input_box,
                                  const EncodingParams& params,
                                  std::span<const num::Vec> d_future = {});

// LP-format text: Minimize / Subject To / Bounds / Binary / End, numbers with
// 17 significant digits, names as stored in the problem.
void export_lp(const MilpProblem& p, std::ostream& out);
void export_lp_file(const MilpProblem& p, const std::string& path);

}  // namespace ddstl::milp
