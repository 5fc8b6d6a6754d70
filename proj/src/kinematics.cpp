#include "avn/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace avn {

void GapPolicy::validate() const {
    if (brake_decel <= 0.0) throw std::invalid_argument("GapPolicy: brake_decel must be > 0");
    if (reaction_time < 0.0) throw std::invalid_argument("GapPolicy: reaction_time must be >= 0");
    if (min_gap_floor <= 0.0) throw std::invalid_argument("GapPolicy: min_gap_floor must be > 0");
    for (std::size_t i = 1; i < headway_by_aul.size(); ++i) {
        if (headway_by_aul[i] > headway_by_aul[i - 1])
            throw std::invalid_argument("GapPolicy: headway must be nonincreasing in automation level");
    }
}

KinematicState advance_state(const KinematicState& state, double commanded_accel, double dt) {
    KinematicState next = state;
    next.acceleration = commanded_accel;

    double v = state.velocity;
    double a = commanded_accel;
    if (a < 0.0 && v + a * dt < 0.0) {
        // Vehicle stops mid-step at t_stop = -v/a.
        double t_stop = -v / a;
        next.position = state.position + v * t_stop + 0.5 * a * t_stop * t_stop;
        next.velocity = 0.0;
    } else {
        next.position = state.position + v * dt + 0.5 * a * dt * dt;
        next.velocity = std::max(0.0, v + a * dt);
    }
    return next;
}

double required_ic_gap(double v, const GapPolicy& policy) {
    double stopping = v * policy.reaction_time + v * v / (2.0 * policy.brake_decel);
    return std::max(stopping, policy.min_gap_floor);
}

double required_iv_gap(double v, int aul, const GapPolicy& policy) {
    if (aul < 0 || aul > 5) throw std::invalid_argument("required_iv_gap: aul out of 0..5");
    return std::max(v * policy.headway_by_aul[static_cast<std::size_t>(aul)], policy.min_gap_floor);
}

}  // namespace avn
