#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "avn/tpd.hpp"

using namespace avn;

TEST_CASE("pseudonym issuance partitions id spaces") {
    TamperProofDevice a = issue_pseudos(1, 100, 5, Compartment::sc, 0);
    TamperProofDevice b = issue_pseudos(2, 101, 5, Compartment::sc, 5);
    CHECK(a.pool.size() == 5);
    CHECK(a.unused_count() == 5);
    CHECK(a.pool.front().id == 0);
    CHECK(a.pool.back().id == 4);
    CHECK(a.pool.front().certificate_id == 100);
    CHECK(b.pool.front().id == 5);
    CHECK(a.owner == 1);
    CHECK_THROWS_AS(issue_pseudos(1, 100, -1, Compartment::sc, 0), std::invalid_argument);
}

TEST_CASE("sign_join consumes the pool and logs usage") {
    TamperProofDevice tpd = issue_pseudos(7, 107, 2, Compartment::sc, 40);
    auto first = sign_join(tpd, 3, 12);
    REQUIRE(first.has_value());
    CHECK(first->joiner == 7);
    CHECK(first->aul == 3);
    CHECK(first->pseudo_id == 40);
    CHECK(first->certificate_id == 107);
    CHECK(first->well_formed);
    CHECK(tpd.unused_count() == 1);
    CHECK(tpd.usage_log.at(40) == 12);

    auto second = sign_join(tpd, 3, 13);
    REQUIRE(second.has_value());
    CHECK(second->pseudo_id == 41);

    // Exhausted pool: authentication unavailable.
    CHECK_FALSE(sign_join(tpd, 3, 14).has_value());
}

TEST_CASE("verify_join outcomes: valid, replay, invalid") {
    PseudonymAuthority authority;
    SignedJoinRequest req{7, 3, 40, 107, true};
    CHECK(verify_join(req, authority) == VerifyOutcome::valid);
    // Same vehicle re-presenting its own pseudonym is not a replay.
    CHECK(verify_join(req, authority) == VerifyOutcome::valid);
    // A different vehicle replaying the consumed pseudonym is.
    SignedJoinRequest replay{8, 3, 40, 108, true};
    CHECK(verify_join(replay, authority) == VerifyOutcome::replay);

    SignedJoinRequest tampered{9, 3, 41, 109, false};
    CHECK(verify_join(tampered, authority) == VerifyOutcome::invalid);
    SignedJoinRequest negative{9, 3, -1, 109, true};
    CHECK(verify_join(negative, authority) == VerifyOutcome::invalid);
    // Invalid requests consume nothing.
    CHECK(authority.consumed.count(41) == 0);
}

TEST_CASE("compartment write rule") {
    TamperProofDevice sc = issue_pseudos(1, 100, 1, Compartment::sc, 0);
    TamperProofDevice nsc = issue_pseudos(1, 100, 1, Compartment::nsc, 1);

    CHECK_NOTHROW(record_violation(sc, {1.0, "P1", 0}, Provenance::sc_event));
    CHECK_THROWS_AS(record_violation(sc, {1.0, "P1", 0}, Provenance::nsc_event),
                    std::logic_error);
    CHECK_NOTHROW(record_violation(nsc, {1.0, "x", 0}, Provenance::nsc_event));
    CHECK(sc.violation_log.size() == 1);
}

TEST_CASE("P1: minimum send separation of one frame") {
    MacFrame frame;  // 24 ms frames
    TpdMonitor monitor;
    TamperProofDevice tpd = issue_pseudos(1, 100, 1, Compartment::sc, 0);

    // Rank 3 sends in its own slot: clean.
    CHECK_FALSE(evaluate_send(monitor, tpd, Channel::longitudinal, 0.002, 3, frame).has_value());
    // A second longitudinal send only 0.4 ms later breaks P1.
    auto v = evaluate_send(monitor, tpd, Channel::longitudinal, 0.0024, 3, frame);
    REQUIRE(v.has_value());
    CHECK(*v == PredicateId::p1_min_separation);
    CHECK(tpd.violation_log.size() == 1);
    CHECK(tpd.violation_log[0].predicate_id == "P1");

    // Exactly one frame later is allowed (the guard absorbs rounding).
    TpdMonitor fresh;
    CHECK_FALSE(evaluate_send(fresh, tpd, Channel::longitudinal, 0.002, 3, frame).has_value());
    CHECK_FALSE(
        evaluate_send(fresh, tpd, Channel::longitudinal, 0.002 + 0.024, 3, frame).has_value());

    // The two channels keep independent clocks.
    TpdMonitor dual;
    CHECK_FALSE(evaluate_send(dual, tpd, Channel::longitudinal, 0.002, 3, frame).has_value());
    CHECK_FALSE(evaluate_send(dual, tpd, Channel::lateral, 0.003, 4, frame).has_value());
}

TEST_CASE("P2: transmissions outside the own slot") {
    MacFrame frame;
    TpdMonitor monitor;
    TamperProofDevice tpd = issue_pseudos(1, 100, 1, Compartment::sc, 0);

    // Rank 3's slot is [0.002, 0.003); sending at 0.0045 is rank 5's slot.
    auto v = evaluate_send(monitor, tpd, Channel::longitudinal, 0.0045, 3, frame);
    REQUIRE(v.has_value());
    CHECK(*v == PredicateId::p2_slot_ownership);
    CHECK(tpd.violation_log[0].predicate_id == "P2");
}

TEST_CASE("P3: exactly K silent frames raise the audit flag once") {
    TpdMonitor monitor;  // K = 3
    TamperProofDevice tpd = issue_pseudos(1, 100, 1, Compartment::sc, 0);

    CHECK_FALSE(evaluate_sensing(monitor, tpd, 9, false, 0.0).has_value());
    CHECK_FALSE(evaluate_sensing(monitor, tpd, 9, false, 0.024).has_value());
    auto v = evaluate_sensing(monitor, tpd, 9, false, 0.048);
    REQUIRE(v.has_value());
    CHECK(*v == PredicateId::p3_silent_neighbor);
    // The counter keeps running past K without re-flagging.
    CHECK_FALSE(evaluate_sensing(monitor, tpd, 9, false, 0.072).has_value());
    // Hearing the neighbor resets the streak.
    CHECK_FALSE(evaluate_sensing(monitor, tpd, 9, true, 0.096).has_value());
    CHECK(monitor.sensed_silence.at(9) == 0);
    CHECK(tpd.violation_log.size() == 1);
    CHECK(tpd.violation_log[0].evidence_digest == 9);
}

TEST_CASE("Stop maneuver arithmetic and the exclusion report") {
    TamperProofDevice sc = issue_pseudos(5, 104, 3, Compartment::sc, 0);
    TamperProofDevice nsc = issue_pseudos(5, 104, 3, Compartment::nsc, 50);
    record_violation(sc, {0.1, "P1", 0}, Provenance::sc_event);

    KinematicState state{128.0, 1, 15.0, 0.0};
    StopResult stop = execute_stop(state, 3.0, sc, nsc, 2);
    CHECK(stop.halt_time == doctest::Approx(5.0));
    CHECK(stop.halt_distance == doctest::Approx(37.5));
    CHECK(stop.report.gnss_location == doctest::Approx(165.5));
    CHECK(stop.report.certificate_id == 104);
    CHECK(stop.report.log_copy.size() == 1);
    CHECK(stop.report.signing_pseudo_id == 50);
    CHECK(nsc.unused_count() == 2);

    CHECK_THROWS_AS(execute_stop(state, 0.0, sc, nsc, 2), std::invalid_argument);

    // An empty NSC pool still yields a (unsigned) report.
    TamperProofDevice empty = issue_pseudos(5, 104, 0, Compartment::nsc, 0);
    StopResult unsigned_stop = execute_stop(state, 3.0, sc, empty, 2);
    CHECK(unsigned_stop.report.signing_pseudo_id == 0);
}

TEST_CASE("attack kind names round-trip") {
    for (AttackKind k : {AttackKind::masquerade, AttackKind::sybil, AttackKind::forge,
                         AttackKind::suppress, AttackKind::false_inject}) {
        auto back = attack_kind_from_string(to_string(k));
        REQUIRE(back.has_value());
        CHECK(*back == k);
    }
    CHECK_FALSE(attack_kind_from_string("dos").has_value());
    CHECK(to_string(PredicateId::p1_min_separation) == "P1");
    CHECK(to_string(PredicateId::p2_slot_ownership) == "P2");
    CHECK(to_string(PredicateId::p3_silent_neighbor) == "P3");
}
