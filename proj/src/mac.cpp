#include "avn/mac.hpp"

#include <cmath>
#include <stdexcept>

namespace avn {

void MacFrame::validate() const {
    if (slot_duration <= 0.0) throw std::invalid_argument("MacFrame: slot_duration must be > 0");
    if (slots_per_frame < 1) throw std::invalid_argument("MacFrame: slots_per_frame must be >= 1");
}

SlotTimes slot_times(int rank, const MacFrame& frame) {
    if (rank < 1 || rank > frame.slots_per_frame)
        throw std::invalid_argument("slot_times: rank exceeds frame capacity");
    double offset = (rank - 1) * frame.slot_duration;
    return {offset, offset};
}

double access_delay_bound(const MacFrame& frame) {
    return frame.frame_duration();
}

SafetyMargin safety_margin_check(double lambda, double v, double iv_gap) {
    if (iv_gap <= 0.0) throw std::invalid_argument("safety_margin_check: iv_gap must be > 0");
    SafetyMargin m;
    m.distance_in_lambda = v * lambda;
    if (m.distance_in_lambda == 0.0) {
        m.ratio = 0.0;
        m.pass = true;  // stationary: no distance covered during access delay
    } else {
        m.ratio = iv_gap / m.distance_in_lambda;
        m.pass = m.ratio >= 10.0;
    }
    return m;
}

OwnershipResult check_slot_ownership(const TxRecord& tx, int claimed_rank, const MacFrame& frame,
                                     int max_active_rank) {
    frame.validate();
    if (max_active_rank <= 0 || max_active_rank > frame.slots_per_frame)
        max_active_rank = frame.slots_per_frame;

    double in_frame = std::fmod(tx.tx_time - frame.epoch, frame.frame_duration());
    if (in_frame < 0.0) in_frame += frame.frame_duration();
    // 1 ns guard: slot-start timestamps must not round into the previous
    // slot (or past the frame edge) after fmod.
    int slot = static_cast<int>(std::floor((in_frame + 1e-9) / frame.slot_duration));
    if (slot >= frame.slots_per_frame) slot = 0;
    int owner = slot + 1;

    if (owner > max_active_rank) return {SlotVerdict::off_slot, 0};
    if (owner != claimed_rank) return {SlotVerdict::masquerade, owner};
    return {SlotVerdict::ok, owner};
}

}  // namespace avn
