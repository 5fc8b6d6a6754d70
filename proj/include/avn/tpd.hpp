#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avn/kinematics.hpp"
#include "avn/mac.hpp"

namespace avn {

enum class Compartment { sc, nsc };

// Event provenance for the write-access rule: NSC-originated events must
// never mutate SC state.
enum class Provenance { sc_event, nsc_event };

struct Pseudonym {
    int id = 0;
    int certificate_id = 0;
    bool used = false;
};

struct ViolationRecord {
    double utc = 0.0;
    std::string predicate_id;
    std::uint64_t evidence_digest = 0;
};

// Pseudonym pool plus append-only violation log. The pool only shrinks
// during a run; replenishment happens off-road.
struct TamperProofDevice {
    Compartment compartment = Compartment::sc;
    VehicleId owner = 0;
    int certificate_id = 0;  // reversible certificate, one per vehicle
    std::vector<Pseudonym> pool;
    std::vector<ViolationRecord> violation_log;
    std::map<int, int> usage_log;  // pseudonym id -> last-used day

    std::size_t unused_count() const;
};

// Run-initialization issuance. Pseudonym id spaces of distinct vehicles are
// disjoint (id_base partitions them).
TamperProofDevice issue_pseudos(VehicleId owner, int certificate_id, int count,
                                Compartment compartment, int id_base);

struct SignedJoinRequest {
    VehicleId joiner = 0;
    int aul = 0;
    int pseudo_id = 0;
    int certificate_id = 0;
    bool well_formed = true;  // false models a tampered credential
};

// Consumes the next unused pseudonym; empty pool means authentication is
// unavailable and the join cannot be attempted.
std::optional<SignedJoinRequest> sign_join(TamperProofDevice& tpd, int aul, int day);

// Run-scope verification registry: which pseudonyms have been consumed and
// by whom. Also the accountability anchor (certificate ids).
struct PseudonymAuthority {
    double verify_delay = 0.002;  // s, abstract signature verification time
    std::map<int, VehicleId> consumed;
};

enum class VerifyOutcome { valid, invalid, replay };

// Valid iff the request is well-formed and its pseudonym has not been
// consumed by another vehicle. The decision becomes available
// verify_delay seconds after invocation (engine schedules it).
VerifyOutcome verify_join(const SignedJoinRequest& request, PseudonymAuthority& authority);

enum class PredicateId { p1_min_separation, p2_slot_ownership, p3_silent_neighbor };

std::string to_string(PredicateId p);

struct PredicateParams {
    double min_send_separation = 0.0;  // ∂; 0 = one frame duration
    int silence_frames = 3;            // K for P3
};

// Per-vehicle predicate evaluation state.
struct TpdMonitor {
    PredicateParams params;
    std::optional<double> last_lg_send;
    std::optional<double> last_lt_send;
    std::map<VehicleId, int> sensed_silence;  // cell member -> silent frames
};

// Appends to the violation log, enforcing the compartment write rule.
void record_violation(TamperProofDevice& tpd, const ViolationRecord& record, Provenance provenance);

// P1 (minimum send separation) and P2 (own-slot only) over one of this
// vehicle's own transmissions.
std::optional<PredicateId> evaluate_send(TpdMonitor& monitor, TamperProofDevice& tpd,
                                         Channel channel, double utc, int own_rank,
                                         const MacFrame& frame);

// P3: a physically sensed cell member that stays N2N-silent for K frames
// while communications are active. Audit flag, not an auto-Stop.
std::optional<PredicateId> evaluate_sensing(TpdMonitor& monitor, TamperProofDevice& tpd,
                                            VehicleId sensed_neighbor, bool heard_this_frame,
                                            double utc);

struct ExclusionReport {
    double gnss_location = 0.0;  // halt position
    int certificate_id = 0;      // reversible certificate (accountability)
    std::vector<ViolationRecord> log_copy;
    int signing_pseudo_id = 0;   // NSC pseudonym
};

struct StopResult {
    double halt_time = 0.0;      // s from initiation
    double halt_distance = 0.0;  // m travelled
    ExclusionReport report;
};

// Stop maneuver arithmetic plus the accountability report. Cohort removal
// and N2N silencing are orchestrated by the engine.
StopResult execute_stop(const KinematicState& state, double stop_decel,
                        const TamperProofDevice& sc_tpd, TamperProofDevice& nsc_tpd, int day);

enum class AttackKind { masquerade, sybil, forge, suppress, false_inject };

std::string to_string(AttackKind k);
std::optional<AttackKind> attack_kind_from_string(const std::string& s);

struct AttackSpec {
    AttackKind kind = AttackKind::masquerade;
    VehicleId attacker = 0;
    int target_rank = 0;       // victim rank (masquerade), second identity (sybil)
    int start_frame = 0;
    int end_frame = 0;         // inclusive
    std::string payload = "bogus";
    bool override_adversary_model = false;
};

}  // namespace avn
