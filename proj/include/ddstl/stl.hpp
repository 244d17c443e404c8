#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ddstl/matrix.hpp"

// Signal temporal logic over affine output predicates: abstract syntax,
// concrete-grammar parsing/printing, minimal horizon, and a Boolean monitor.
//
// Grammar (loosest to tightest binding):
//   formula  := orexpr ('->' formula)?            implication, right assoc
//   orexpr   := andexpr ('or' andexpr)*
//   andexpr  := untilexpr ('and' untilexpr)*
//   untilexpr:= unary ('U[a,b]' untilexpr)?       right assoc
//   unary    := 'not' unary | 'G[a,b]' unary | 'F[a,b]' unary | primary
//   primary  := '(' formula ')' | 'true' | 'false' | comparison
//   comparison := affine ('>'|'>='|'<'|'<=') affine
//              |  'abs' '(' affine ')' ('>'|'>='|'<'|'<=') affine
// Affine expressions combine rational constants, outputs y1..yn, and named
// per-time-step schedules. Non-strict comparisons are treated as strict; the
// MILP encoder's epsilon margin makes the distinction unobservable.

namespace ddstl::stl {

struct Schedule {
    std::string name;
    std::vector<double> values;  // indexed by absolute time step
};

class ScheduleSet {
public:
    void add(Schedule s);
    std::shared_ptr<const Schedule> find(const std::string& name) const;
    std::vector<std::string> names() const;
    bool empty() const { return table_.empty(); }

private:
    std::map<std::string, std::shared_ptr<const Schedule>> table_;
};

// Affine output predicate row.y + offset(t) > 0, where the offset may carry
// per-time-step schedule terms.
struct Predicate {
    num::Vec row;
    double offset = 0.0;
    struct SchedTerm {
        std::shared_ptr<const Schedule> sched;
        double coef = 0.0;
    };
    std::vector<SchedTerm> sched_terms;

    double offset_at(std::size_t t) const;
    double value(const num::Vec& y, std::size_t t) const;
};

enum class NodeKind { Bool, Pred, Not, And, Or, Always, Eventually, Until };

struct Formula {
    NodeKind kind = NodeKind::Bool;
    bool value = false;              // Bool
    Predicate pred;                  // Pred
    std::vector<Formula> children;   // Not: 1, And/Or: >= 2, temporal: 1 or 2
    std::size_t a = 0, b = 0;        // discrete-time window, 0 <= a <= b
};

Formula make_bool(bool value);
Formula make_pred(Predicate p);
Formula make_pred(num::Vec row, double offset);
Formula make_not(Formula f);
Formula make_and(std::vector<Formula> children);
Formula make_or(std::vector<Formula> children);
Formula make_always(std::size_t a, std::size_t b, Formula f);
Formula make_eventually(std::size_t a, std::size_t b, Formula f);
Formula make_until(std::size_t a, std::size_t b, Formula left, Formula right);

struct ParseError : std::runtime_error {
    ParseError(std::size_t line, std::size_t col, const std::string& message);
    std::size_t line, col;
};

Formula parse(std::string_view text, std::size_t n_y, const ScheduleSet& schedules = {});

// Canonical concrete-grammar form; parse(to_text(f)) is structurally equal
// to f (predicates are printed normalized, so no abs() reappears).
std::string to_text(const Formula& f);

bool structurally_equal(const Formula& a, const Formula& b);

// Minimal trajectory length bookkeeping: the furthest future index needed to
// decide satisfaction at time 0.
std::size_t horizon(const Formula& f);

// Boolean satisfaction of y_t |= f over the finite trajectory y (length L+1,
// requires t + horizon(f) <= L). Nested window ends are clamped to L, and the
// until operator is evaluated through its always/eventually/unbounded-until
// decomposition, exactly mirroring the MILP encoding, so monitor and encoder
// are verdict-equivalent by construction.
bool monitor(const Formula& f, std::span<const num::Vec> y, std::size_t t);

// Diagnostic for violations: the earliest time index among the failing
// obligations, recursing into whichever sub-obligations are false. Returns
// nullopt when the formula is satisfied at t.
std::optional<std::size_t> first_violation(const Formula& f, std::span<const num::Vec> y,
                                           std::size_t t);

// Sidecar schedule CSV: header "t,value", rows for t = 0..n-1.
Schedule read_schedule_csv(std::istream& in, std::string name);
Schedule read_schedule_csv_file(const std::string& path, std::string name);

}  // namespace ddstl::stl
