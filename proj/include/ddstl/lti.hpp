#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddstl/matrix.hpp"

// Exact state-space simulation of the data-generating systems. Only used for
// producing data sequences and for closed-loop verification; the synthesis
// path never touches these models.

namespace ddstl::lti {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};
using Box = std::vector<Interval>;

struct StateSpaceModel {
    num::Matrix A, B, C, D;          // D is zero when the plant has no feedthrough
    std::optional<num::Matrix> Bd;   // known-disturbance channel, when present
    std::string note;

    std::size_t n_x() const { return A.rows(); }
    std::size_t n_u() const { return B.cols(); }
    std::size_t n_y() const { return C.rows(); }
    std::size_t n_d() const { return Bd ? Bd->cols() : 0; }

    // Validates mutual dimension consistency; D defaults to the zero matrix.
    static StateSpaceModel make(num::Matrix A, num::Matrix B, num::Matrix C,
                                std::optional<num::Matrix> D = std::nullopt,
                                std::optional<num::Matrix> Bd = std::nullopt);
};

// Time-indexed input/output samples; the universal currency between modules.
struct Trajectory {
    std::size_t n_u = 0, n_y = 0, n_d = 0;
    std::vector<num::Vec> u;
    std::vector<num::Vec> y;
    std::vector<num::Vec> d;  // empty when n_d == 0

    std::size_t length() const { return u.size(); }
    void validate() const;  // sample counts and finiteness
};

struct SimulationResult {
    Trajectory traj;
    std::vector<num::Vec> states;  // x_0 .. x_T, plus the post-horizon state x_{T+1}
};

Trajectory simulate(const StateSpaceModel& model, const num::Vec& x0,
                    std::span<const num::Vec> u,
                    std::span<const num::Vec> d = {});
SimulationResult simulate_states(const StateSpaceModel& model, const num::Vec& x0,
                                 std::span<const num::Vec> u,
                                 std::span<const num::Vec> d = {});

// How disturbance samples are produced during data collection: either replayed
// cyclically from a fixed schedule or drawn i.i.d. uniform from a box.
struct DisturbanceSource {
    std::optional<std::vector<num::Vec>> schedule;
    std::optional<Box> box;
};

// Inputs drawn i.i.d. uniform from `input_box` with a deterministic generator;
// simulation starts from the zero state. Equal seeds give equal bytes.
Trajectory generate_data(const StateSpaceModel& model, std::size_t steps,
                         const Box& input_box, std::uint64_t seed,
                         const std::optional<DisturbanceSource>& disturbance = std::nullopt);

// Built-in data-generating systems: "car" (two-vehicle platoon distance) and
// "building" (five-state room temperature with a seven-channel known
// disturbance input).
StateSpaceModel builtin_model(std::string_view name);

// Trajectory CSV: header t,u1..u{n_u}[,d1..d{n_d}],y1..y{n_y}, one row per
// step, shortest round-trip float formatting.
void write_csv(const Trajectory& traj, std::ostream& out);
void write_csv_file(const Trajectory& traj, const std::string& path);
Trajectory read_csv(std::istream& in);
Trajectory read_csv_file(const std::string& path);

// Deterministic uniform double in [lo, hi] from a 64-bit generator draw.
double uniform_from_bits(std::uint64_t bits, double lo, double hi);

}  // namespace ddstl::lti
