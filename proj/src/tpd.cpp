#include "avn/tpd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace avn {

std::size_t TamperProofDevice::unused_count() const {
    return static_cast<std::size_t>(
        std::count_if(pool.begin(), pool.end(), [](const Pseudonym& p) { return !p.used; }));
}

TamperProofDevice issue_pseudos(VehicleId owner, int certificate_id, int count,
                                Compartment compartment, int id_base) {
    if (count < 0) throw std::invalid_argument("issue_pseudos: negative count");
    TamperProofDevice tpd;
    tpd.compartment = compartment;
    tpd.owner = owner;
    tpd.certificate_id = certificate_id;
    tpd.pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        tpd.pool.push_back({id_base + i, certificate_id, false});
    return tpd;
}

std::optional<SignedJoinRequest> sign_join(TamperProofDevice& tpd, int aul, int day) {
    auto it = std::find_if(tpd.pool.begin(), tpd.pool.end(),
                           [](const Pseudonym& p) { return !p.used; });
    if (it == tpd.pool.end()) return std::nullopt;  // auth unavailable
    it->used = true;
    tpd.usage_log[it->id] = day;
    SignedJoinRequest req;
    req.joiner = tpd.owner;
    req.aul = aul;
    req.pseudo_id = it->id;
    req.certificate_id = it->certificate_id;
    return req;
}

VerifyOutcome verify_join(const SignedJoinRequest& request, PseudonymAuthority& authority) {
    if (!request.well_formed || request.pseudo_id < 0) return VerifyOutcome::invalid;
    auto it = authority.consumed.find(request.pseudo_id);
    if (it != authority.consumed.end() && it->second != request.joiner)
        return VerifyOutcome::replay;
    authority.consumed[request.pseudo_id] = request.joiner;
    return VerifyOutcome::valid;
}

std::string to_string(PredicateId p) {
    switch (p) {
        case PredicateId::p1_min_separation: return "P1";
        case PredicateId::p2_slot_ownership: return "P2";
        case PredicateId::p3_silent_neighbor: return "P3";
    }
    return "?";
}

void record_violation(TamperProofDevice& tpd, const ViolationRecord& record,
                      Provenance provenance) {
    if (tpd.compartment == Compartment::sc && provenance == Provenance::nsc_event)
        throw std::logic_error("compartment breach: NSC event writing SC-TPD");
    tpd.violation_log.push_back(record);
}

std::optional<PredicateId> evaluate_send(TpdMonitor& monitor, TamperProofDevice& tpd,
                                         Channel channel, double utc, int own_rank,
                                         const MacFrame& frame) {
    double separation = monitor.params.min_send_separation;
    if (separation <= 0.0) separation = frame.frame_duration();

    std::optional<double>& last =
        (channel == Channel::longitudinal) ? monitor.last_lg_send : monitor.last_lt_send;
    std::optional<PredicateId> violated;

    if (last && utc - *last < separation - 1e-12) {
        violated = PredicateId::p1_min_separation;
    } else {
        TxRecord tx;
        tx.tx_time = utc;
        tx.channel = channel;
        if (check_slot_ownership(tx, own_rank, frame).verdict != SlotVerdict::ok)
            violated = PredicateId::p2_slot_ownership;
    }
    last = utc;

    if (violated)
        record_violation(tpd, {utc, to_string(*violated), 0}, Provenance::sc_event);
    return violated;
}

std::optional<PredicateId> evaluate_sensing(TpdMonitor& monitor, TamperProofDevice& tpd,
                                            VehicleId sensed_neighbor, bool heard_this_frame,
                                            double utc) {
    int& silent = monitor.sensed_silence[sensed_neighbor];
    if (heard_this_frame) {
        silent = 0;
        return std::nullopt;
    }
    if (++silent == monitor.params.silence_frames) {
        record_violation(tpd, {utc, to_string(PredicateId::p3_silent_neighbor),
                               static_cast<std::uint64_t>(sensed_neighbor)},
                         Provenance::sc_event);
        return PredicateId::p3_silent_neighbor;
    }
    return std::nullopt;
}

StopResult execute_stop(const KinematicState& state, double stop_decel,
                        const TamperProofDevice& sc_tpd, TamperProofDevice& nsc_tpd, int day) {
    if (stop_decel <= 0.0) throw std::invalid_argument("execute_stop: stop_decel must be > 0");

    StopResult out;
    out.halt_time = state.velocity / stop_decel;
    out.halt_distance = state.velocity * state.velocity / (2.0 * stop_decel);

    out.report.gnss_location = state.position + out.halt_distance;
    out.report.certificate_id = sc_tpd.certificate_id;
    out.report.log_copy = sc_tpd.violation_log;

    // Report is signed with an NSC pseudonym; a report is emitted even if
    // the NSC pool is empty (unsigned, id 0).
    if (auto signature = sign_join(nsc_tpd, 0, day))
        out.report.signing_pseudo_id = signature->pseudo_id;
    return out;
}

std::string to_string(AttackKind k) {
    switch (k) {
        case AttackKind::masquerade: return "masquerade";
        case AttackKind::sybil: return "sybil";
        case AttackKind::forge: return "forge";
        case AttackKind::suppress: return "suppress";
        case AttackKind::false_inject: return "false_inject";
    }
    return "?";
}

std::optional<AttackKind> attack_kind_from_string(const std::string& s) {
    for (AttackKind k : {AttackKind::masquerade, AttackKind::sybil, AttackKind::forge,
                         AttackKind::suppress, AttackKind::false_inject})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

}  // namespace avn
