#pragma once

#include <array>
#include <stdexcept>

namespace avn {

// Straight multilane segment. Lane 1 is the rightmost lane.
struct RoadSegment {
    int lane_count = 3;
    double lane_width = 3.5;   // m
    double length = 2000.0;    // m
    bool wrap_around = false;

    bool lane_valid(int lane) const { return lane >= 1 && lane <= lane_count; }
    // Lateral center offset of a lane, measured from the right road edge.
    double lane_center(int lane) const { return (lane - 0.5) * lane_width; }
};

struct KinematicState {
    double position = 0.0;      // m, longitudinal
    int lane = 1;
    double velocity = 0.0;      // m/s, never negative
    double acceleration = 0.0;  // m/s^2
};

// Gap policy: braking model for IC-gaps, time headway per automation level
// for iv-gaps.
struct GapPolicy {
    double brake_decel = 8.0;    // m/s^2, > 0
    double reaction_time = 0.5;  // s
    std::array<double, 6> headway_by_aul = {1.8, 1.5, 1.2, 0.8, 0.5, 0.3};  // s
    double min_gap_floor = 2.0;  // m

    void validate() const;
};

// Constant-acceleration step with exact mid-step stop handling. Velocity is
// clamped at 0; position uses the closed-form distance up to the stop time.
KinematicState advance_state(const KinematicState& state, double commanded_accel, double dt);

// Gap that absorbs a brick-wall stop of the preceding cohort's tail:
// reaction distance plus braking distance, floored.
double required_ic_gap(double v, const GapPolicy& policy);

// Intra-cohort gap: time headway keyed by automation level, floored.
double required_iv_gap(double v, int aul, const GapPolicy& policy);

}  // namespace avn
