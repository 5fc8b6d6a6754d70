#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avn/cell.hpp"

namespace avn {

using CohortId = int;

// Non-reversible message address: rank r in lane j. Carries no identity.
struct Name {
    int rank = 0;
    int lane = 0;
};

struct CohortMember {
    VehicleId vehicle = 0;
    int rank = 0;  // 1 = head
    int aul = 0;   // SAE automated driving level 0..5
};

struct CommonKnowledge {
    int n = 0;
    double velocity = 0.0;  // m/s
    int sl = 0;             // smallest accepted automation level
    int hl = 5;             // highest accepted automation level
};

struct Cohort {
    CohortId id = 0;
    int lane = 1;
    std::vector<CohortMember> members;  // ordered head (rank 1) -> tail (rank n)
    CommonKnowledge knowledge;

    int size() const { return static_cast<int>(members.size()); }
    const CohortMember* member_at_rank(int rank) const;
    const CohortMember* member_of(VehicleId vehicle) const;
    Name name_of(int rank) const { return Name{rank, lane}; }
};

struct CohortPolicy {
    // Step table: first entry whose velocity ceiling is >= v wins;
    // velocities above the last ceiling use fallback_n_max.
    struct SizeStep {
        double velocity_ceiling;  // m/s
        int n_max;
    };
    std::vector<SizeStep> n_max_by_velocity = {{10.0, 24}, {20.0, 18}, {30.0, 12}};
    int fallback_n_max = 8;
    int default_sl = 0;
    int default_hl = 5;
    bool homogeneous = false;  // forces SL = HL on formation

    int n_max(double velocity) const;
    void validate() const;
};

enum class JoinReject { level, full, auth, range, gap };

struct JoinResult {
    bool accepted = false;
    int rank = 0;  // assigned rank on accept
    std::optional<JoinReject> reason;
};

std::string to_string(JoinReject r);

// SL <= aul <= HL and room below n_max.
JoinResult admission_check(int aul, const Cohort& cohort, const CohortPolicy& policy);

// Longitudinal join at the tail. Verification outcome and range check are
// supplied by the caller (security-tpd / world respectively).
JoinResult lg_join(Cohort& cohort, VehicleId joiner, int aul, bool auth_valid,
                   bool within_n2n_of_tail, const CohortPolicy& policy);

// Lateral join into the gap between ranks k and k+1 (k = 0 inserts a new
// head). Former ranks > k shift up by one; the renumbering commits
// atomically.
JoinResult lt_join(Cohort& cohort, VehicleId joiner, int aul, int after_rank,
                   double physical_gap, double required_gap, bool auth_valid,
                   const CohortPolicy& policy);

// Split on a failed link between ranks k and k+1. Second cohort is
// renumbered 1..n-k and gets a fresh id.
std::pair<Cohort, Cohort> split(const Cohort& cohort, int link_after_rank, CohortId new_id);

// Remove the member at the given rank. Head/tail removal leaves one
// renumbered cohort; a mid-cohort removal splits the remainder in two.
std::vector<Cohort> remove_member(const Cohort& cohort, int rank, CohortId new_id);

enum class Direction { headward, tailward, both };

// Per-member outcome of one cohort-wide dissemination.
struct DeliveryReport {
    struct Entry {
        int rank = 0;
        bool accepted = false;
        int accept_frame = -1;  // 0 = origin's transmission frame
        int latency_frames = 0; // frames used, origin frame inclusive
    };
    std::vector<Entry> entries;

    int max_latency() const;
    bool complete() const;
    const Entry* at_rank(int rank) const;
};

// Per-link loss predicate: true = the copy from `from_rank` to `to_rank`
// transmitted in `frame` is lost.
using LinkLoss = std::function<bool(int from_rank, int to_rank, int frame)>;

// Frame-stepped dissemination model. Each member relays at most once, in
// its slot of the frame after it first hears the payload from its adjacent
// upstream neighbor. A member adjacent to the origin accepts the direct
// copy; everyone else needs byte-identical copies from two distinct
// senders. Transmissions reach ranks +-1 and +-2.
DeliveryReport disseminate(const Cohort& cohort, int origin_rank, Direction direction,
                           const LinkLoss& lost = nullptr, int max_frames = -1);

// Invariant check used by tests and the engine's checked mode: consecutive
// ranks from 1, SL <= aul <= HL, n <= n_max, and (when positions are
// supplied) head-to-tail position order strictly decreasing.
void check_cohort_invariants(const Cohort& cohort, const CohortPolicy& policy,
                             const std::function<double(VehicleId)>* position_of = nullptr);

}  // namespace avn
