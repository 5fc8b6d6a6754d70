#pragma once

#include <cstdint>

#include "avn/cohort.hpp"

namespace avn {

enum class Channel { longitudinal, lateral };

// Slotted frame shared over UTC. Longitudinal and lateral traffic use two
// independent channels with identical frame geometry.
struct MacFrame {
    double slot_duration = 0.001;  // s
    int slots_per_frame = 24;
    double epoch = 0.0;  // UTC time of frame 0, slot 0

    double frame_duration() const { return slot_duration * slots_per_frame; }
    void validate() const;
};

struct SlotTimes {
    double lg_offset = 0.0;  // offset of Lg_r within each longitudinal frame
    double lt_offset = 0.0;  // offset of Lt_r within each lateral frame
};

// Rank r owns slot r-1 on each channel.
SlotTimes slot_times(int rank, const MacFrame& frame);

// Worst-case channel access delay: one full frame.
double access_delay_bound(const MacFrame& frame);

struct SafetyMargin {
    double distance_in_lambda = 0.0;  // m travelled during lambda
    double ratio = 0.0;               // iv_gap / distance
    bool pass = false;                // order-of-magnitude criterion
};

SafetyMargin safety_margin_check(double lambda, double v, double iv_gap);

struct TxRecord {
    Name sender;       // claimed name {r, j}
    Channel channel = Channel::longitudinal;
    double tx_time = 0.0;  // UTC seconds
    std::uint64_t payload_digest = 0;
};

enum class SlotVerdict { ok, masquerade, off_slot };

struct OwnershipResult {
    SlotVerdict verdict = SlotVerdict::ok;
    int slot_owner = 0;  // rank owning the observed slot (masquerade case)
};

// Receivers share the frame epoch, so slot ownership is checked from the
// transmit timestamp alone. max_active_rank bounds the occupied slots
// (cohort size); transmissions past it are off-slot.
OwnershipResult check_slot_ownership(const TxRecord& tx, int claimed_rank, const MacFrame& frame,
                                     int max_active_rank = 0);

}  // namespace avn
