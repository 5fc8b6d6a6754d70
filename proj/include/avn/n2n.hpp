#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avn/cell.hpp"
#include "avn/cohort.hpp"
#include "avn/mac.hpp"

namespace avn {

struct Membership {
    VehicleId vehicle = 0;
    CohortId cohort = 0;
    int rank = 0;
    int lane = 0;

    Name name() const { return Name{rank, lane}; }
};

// Intra/inter-cell message. Addressing is by name only: no vehicle id,
// pseudonym, certificate, or GNSS coordinates ever appear here.
struct N2NMessage {
    Name sender;          // immediate transmitter
    int origin_rank = 0;  // rank that originated the payload
    Channel channel = Channel::longitudinal;
    std::string payload;
    bool relayed = false;
    double tx_time = 0.0;
};

struct LgTransmission {
    int target_rank = 0;
    N2NMessage msg;
};

// Addressed longitudinal transmissions: ranks r-2, r-1, r+1, r+2 that exist.
std::vector<LgTransmission> lg_send(const Membership& sender, const std::string& payload,
                                    int cohort_size, double tx_time = 0.0, bool relayed = false,
                                    int origin_rank = 0);

// Ground-truth lateral-designation oracle: nearest vehicle in each adjacent
// lane within N2N range. Stands in for the optics-based designation layer.
struct LateralDesignation {
    std::optional<VehicleId> left;
    std::optional<VehicleId> right;
};

LateralDesignation designate_lateral(VehicleId sender, const WorldSnapshot& world,
                                     const RangeConfig& config);

struct LtTransmission {
    VehicleId target = 0;  // physical designation, not part of the message
    N2NMessage msg;
};

std::vector<LtTransmission> lt_send(const Membership& sender, const std::string& payload,
                                    const WorldSnapshot& world, const RangeConfig& config,
                                    double tx_time = 0.0);

enum class FlagKind {
    forgery,
    suppression_or_loss,
    spanning_violation,
    no_majority,
    lateral_minority,
};

struct ReceiveFlag {
    FlagKind kind;
    int implicated_rank = 0;  // 0 when no single sender is implicated
};

std::string to_string(FlagKind k);

struct InboxEvent {
    int origin_rank = 0;
    int sender_rank = 0;
    bool relayed = false;
    std::string payload;
    int frame = 0;
};

// Per-member longitudinal acceptance bookkeeping (seen-twice rule).
struct AcceptanceState {
    int timeout_frames = 2;

    struct Copy {
        int sender_rank = 0;
        bool relayed = false;
        std::string payload;
        int frame = 0;
    };
    struct Pending {
        std::vector<Copy> copies;
        int first_frame = 0;
        bool timeout_flagged = false;    // suppression-or-loss already raised
        std::set<int> flagged_senders;   // forgery flags already raised
    };
    std::map<int, Pending> pending;                  // keyed by origin rank
    std::map<int, std::string> accepted;             // origin rank -> accepted payload
    std::set<std::pair<int, std::string>> relay_done;  // single relay per payload
};

struct AcceptedPayload {
    int origin_rank = 0;
    std::string payload;
    int frame = 0;
};

struct RelayDuty {
    int origin_rank = 0;
    std::string payload;
    int relay_frame = 0;  // next frame
};

struct LgReceiveResult {
    std::vector<AcceptedPayload> accepted;
    std::vector<RelayDuty> relays;
    std::vector<ReceiveFlag> flags;
};

// Acceptance: direct copy from the adjacent originator, or two
// byte-identical copies from distinct senders. Disagreeing copies flag the
// relayer; a lone copy flags suppression-or-loss after the timeout. The
// first copy heard from an adjacent sender schedules this member's single
// relay of the payload for the next frame, but contradicting copies veto
// the relay and unverified lone copies are never re-broadcast, so forged
// bytes never travel through honest members. Copies contradicting an
// already-accepted payload are flagged instead of tracked (one
// dissemination episode per origin).
LgReceiveResult lg_receive(int member_rank, const std::vector<InboxEvent>& events,
                           AcceptanceState& state, int current_frame);

// One copy in a lateral acceptance group: the lateral sender itself plus
// echoes from its two range-1 longitudinal neighbors.
struct LateralCopy {
    int source_rank = 0;
    std::string payload;
};

struct LtReceiveResult {
    std::optional<std::string> accepted;
    std::vector<ReceiveFlag> flags;
};

// 2-of-3 rule: accept iff at least two byte-identical copies; a dissenting
// minority sender is flagged; no majority flags every sender for audit.
LtReceiveResult lt_receive(const std::vector<LateralCopy>& copies);

}  // namespace avn
