#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "avn/mac.hpp"

using namespace avn;

TEST_CASE("frame geometry and slot ownership offsets") {
    MacFrame frame;  // 24 slots of 1 ms
    CHECK(frame.frame_duration() == doctest::Approx(0.024));
    CHECK(access_delay_bound(frame) == doctest::Approx(0.024));

    CHECK(slot_times(1, frame).lg_offset == 0.0);
    CHECK(slot_times(5, frame).lg_offset == doctest::Approx(0.004));
    CHECK(slot_times(24, frame).lg_offset == doctest::Approx(0.023));
    CHECK(slot_times(3, frame).lt_offset == slot_times(3, frame).lg_offset);
    CHECK_THROWS_AS(slot_times(0, frame), std::invalid_argument);
    CHECK_THROWS_AS(slot_times(25, frame), std::invalid_argument);

    MacFrame bad = frame;
    bad.slot_duration = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = frame;
    bad.slots_per_frame = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("safety margin: order-of-magnitude criterion") {
    SafetyMargin fast = safety_margin_check(0.020, 25.0, 8.0);
    CHECK(fast.distance_in_lambda == doctest::Approx(0.5));
    CHECK(fast.ratio == doctest::Approx(16.0));
    CHECK(fast.pass);

    SafetyMargin slow = safety_margin_check(0.100, 25.0, 8.0);
    CHECK(slow.distance_in_lambda == doctest::Approx(2.5));
    CHECK(slow.ratio == doctest::Approx(3.2));
    CHECK_FALSE(slow.pass);

    // Exactly 10x is a pass; stationary trivially passes.
    CHECK(safety_margin_check(0.020, 25.0, 5.0).pass);
    CHECK(safety_margin_check(0.020, 0.0, 5.0).pass);
    CHECK_THROWS_AS(safety_margin_check(0.020, 25.0, 0.0), std::invalid_argument);
}

TEST_CASE("slot ownership verdicts") {
    MacFrame frame;
    auto at = [&](double t) { return TxRecord{{}, Channel::longitudinal, t, 0}; };

    CHECK(check_slot_ownership(at(0.003), 4, frame).verdict == SlotVerdict::ok);
    OwnershipResult masq = check_slot_ownership(at(0.003), 3, frame);
    CHECK(masq.verdict == SlotVerdict::masquerade);
    CHECK(masq.slot_owner == 4);
    // Sending past the occupied ranks of an 8-member cohort is off-slot.
    CHECK(check_slot_ownership(at(0.020), 21, frame, 8).verdict == SlotVerdict::off_slot);
    CHECK(check_slot_ownership(at(0.020), 21, frame).verdict == SlotVerdict::ok);

    // Modular across frames and with a nonzero epoch.
    CHECK(check_slot_ownership(at(17 * 0.024 + 0.007), 8, frame).verdict == SlotVerdict::ok);
    MacFrame shifted = frame;
    shifted.epoch = 0.5;
    CHECK(check_slot_ownership(at(0.5 + 0.001), 2, shifted).verdict == SlotVerdict::ok);
    CHECK(check_slot_ownership(at(0.5 - 0.024 + 0.001), 2, shifted).verdict == SlotVerdict::ok);
}

TEST_CASE("slot ownership is robust at slot boundaries") {
    MacFrame frame;
    // Slot-start timestamps accumulated through repeated float addition land
    // a hair off the exact boundary; the verdict must not flip.
    for (int f = 0; f < 200; ++f) {
        double frame_start = 0.0;
        for (int k = 0; k < f; ++k) frame_start += frame.frame_duration();
        for (int rank = 1; rank <= frame.slots_per_frame; ++rank) {
            double t = frame_start + (rank - 1) * frame.slot_duration;
            CAPTURE(f);
            CAPTURE(rank);
            CHECK(check_slot_ownership({{}, Channel::longitudinal, t, 0}, rank, frame).verdict ==
                  SlotVerdict::ok);
        }
    }
}
