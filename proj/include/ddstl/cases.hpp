#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ddstl/lti.hpp"
#include "ddstl/stl.hpp"
#include "ddstl/synthesis.hpp"

// Bundled case studies with their initializations, specifications, input
// boxes, and data-collection defaults, plus plot-data emission.

namespace ddstl::cases {

struct PlotBand {
    std::size_t t_lo = 0, t_hi = 0;
    double lo = 0.0, hi = 0.0;
};

struct CaseStudy {
    std::string name;
    lti::StateSpaceModel model;
    lti::Trajectory w_ini;
    std::string spec_text;
    stl::ScheduleSet schedules;
    synthesis::SynthesisConfig config;

    // data-collection defaults
    std::size_t data_steps = 0;
    std::uint64_t default_seed = 1;
    lti::Box data_u_box;
    std::optional<lti::DisturbanceSource> data_disturbance;

    // plot metadata
    std::optional<PlotBand> band;
    bool temperature_case = false;  // emit the reference column, plot in Celsius

    stl::Formula spec() const { return stl::parse(spec_text, model.n_y(), schedules); }
    lti::Trajectory generate(std::uint64_t seed) const {
        return lti::generate_data(model, data_steps, data_u_box, seed, data_disturbance);
    }
};

// Safe-following-distance scenario: reach and hold |y| within [2,3] on [5,10].
CaseStudy scenario1();
// Close-following scenario: some window of four steps with |y| <= 2 starting
// within [0,10].
CaseStudy scenario2();
// Room-temperature case: keep the output above the comfort schedule whenever
// occupied, over a 24-step horizon with the shipped disturbance schedules.
CaseStudy hvac();

CaseStudy by_name(const std::string& name);

// Tidy per-step CSV for external plotting: t, inputs, predicted outputs,
// closed-loop outputs, plus band or reference columns when applicable.
// Temperature cases are converted from Fahrenheit to Celsius here and only
// here.
void write_plot_data(const std::string& path, const CaseStudy* cs,
                     const synthesis::SynthesisResult& result,
                     const std::optional<synthesis::Verification>& verification);

// Minimal static SVG line chart of predicted/closed-loop outputs.
void write_svg_chart(const std::string& path, const CaseStudy* cs,
                     const synthesis::SynthesisResult& result,
                     const std::optional<synthesis::Verification>& verification);

}  // namespace ddstl::cases
