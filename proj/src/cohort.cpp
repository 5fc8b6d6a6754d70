#include "avn/cohort.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace avn {

const CohortMember* Cohort::member_at_rank(int rank) const {
    for (const auto& m : members)
        if (m.rank == rank) return &m;
    return nullptr;
}

const CohortMember* Cohort::member_of(VehicleId vehicle) const {
    for (const auto& m : members)
        if (m.vehicle == vehicle) return &m;
    return nullptr;
}

int CohortPolicy::n_max(double velocity) const {
    for (const auto& step : n_max_by_velocity)
        if (velocity <= step.velocity_ceiling) return step.n_max;
    return fallback_n_max;
}

void CohortPolicy::validate() const {
    double prev_v = -1.0;
    int prev_n = std::numeric_limits<int>::max();
    for (const auto& step : n_max_by_velocity) {
        if (step.velocity_ceiling <= prev_v)
            throw std::invalid_argument("CohortPolicy: velocity ceilings must increase");
        if (step.n_max > prev_n)
            throw std::invalid_argument("CohortPolicy: n_max must be nonincreasing in velocity");
        prev_v = step.velocity_ceiling;
        prev_n = step.n_max;
    }
    if (fallback_n_max > prev_n || fallback_n_max < 1)
        throw std::invalid_argument("CohortPolicy: bad fallback_n_max");
    if (default_sl < 0 || default_hl > 5 || default_sl > default_hl)
        throw std::invalid_argument("CohortPolicy: bad SL/HL defaults");
}

std::string to_string(JoinReject r) {
    switch (r) {
        case JoinReject::level: return "level";
        case JoinReject::full: return "full";
        case JoinReject::auth: return "auth";
        case JoinReject::range: return "range";
        case JoinReject::gap: return "gap";
    }
    return "?";
}

JoinResult admission_check(int aul, const Cohort& cohort, const CohortPolicy& policy) {
    if (aul < 0 || aul > 5) throw std::invalid_argument("admission_check: aul out of 0..5");
    if (aul < cohort.knowledge.sl || aul > cohort.knowledge.hl)
        return {false, 0, JoinReject::level};
    if (cohort.size() >= policy.n_max(cohort.knowledge.velocity))
        return {false, 0, JoinReject::full};
    return {true, 0, std::nullopt};
}

JoinResult lg_join(Cohort& cohort, VehicleId joiner, int aul, bool auth_valid,
                   bool within_n2n_of_tail, const CohortPolicy& policy) {
    if (!auth_valid) return {false, 0, JoinReject::auth};
    if (!within_n2n_of_tail) return {false, 0, JoinReject::range};
    JoinResult check = admission_check(aul, cohort, policy);
    if (!check.accepted) return check;

    int rank = cohort.size() + 1;
    cohort.members.push_back({joiner, rank, aul});
    cohort.knowledge.n = cohort.size();
    return {true, rank, std::nullopt};
}

JoinResult lt_join(Cohort& cohort, VehicleId joiner, int aul, int after_rank,
                   double physical_gap, double required_gap, bool auth_valid,
                   const CohortPolicy& policy) {
    if (after_rank < 0 || after_rank > cohort.size())
        throw std::invalid_argument("lt_join: insertion rank out of range");
    if (!auth_valid) return {false, 0, JoinReject::auth};
    if (physical_gap < required_gap) return {false, 0, JoinReject::gap};
    JoinResult check = admission_check(aul, cohort, policy);
    if (!check.accepted) return check;

    // Shift former ranks > k up by one; joiner takes rank k+1.
    for (auto& m : cohort.members)
        if (m.rank > after_rank) ++m.rank;
    int rank = after_rank + 1;
    cohort.members.insert(cohort.members.begin() + after_rank, {joiner, rank, aul});
    cohort.knowledge.n = cohort.size();
    return {true, rank, std::nullopt};
}

std::pair<Cohort, Cohort> split(const Cohort& cohort, int link_after_rank, CohortId new_id) {
    int n = cohort.size();
    if (link_after_rank < 1 || link_after_rank >= n)
        throw std::logic_error("split: failed link index out of range");

    Cohort head_part = cohort;
    head_part.members.assign(cohort.members.begin(), cohort.members.begin() + link_after_rank);
    head_part.knowledge.n = head_part.size();

    Cohort tail_part = cohort;
    tail_part.id = new_id;
    tail_part.members.assign(cohort.members.begin() + link_after_rank, cohort.members.end());
    for (std::size_t i = 0; i < tail_part.members.size(); ++i)
        tail_part.members[i].rank = static_cast<int>(i) + 1;
    tail_part.knowledge.n = tail_part.size();

    return {head_part, tail_part};
}

std::vector<Cohort> remove_member(const Cohort& cohort, int rank, CohortId new_id) {
    int n = cohort.size();
    if (rank < 1 || rank > n) throw std::logic_error("remove_member: rank out of range");

    std::vector<Cohort> out;
    if (rank == 1 || rank == n) {
        Cohort rest = cohort;
        rest.members.erase(rest.members.begin() + (rank - 1));
        for (std::size_t i = 0; i < rest.members.size(); ++i)
            rest.members[i].rank = static_cast<int>(i) + 1;
        rest.knowledge.n = rest.size();
        if (!rest.members.empty()) out.push_back(rest);
        return out;
    }
    // A mid-cohort departure breaks the N2N chain: ranks 1..r-1 keep the
    // cohort, ranks r+1..n renumber into a fresh one.
    auto [a, b] = split(cohort, rank - 1, new_id);
    b.members.erase(b.members.begin());  // the departing member, new rank 1
    for (std::size_t i = 0; i < b.members.size(); ++i)
        b.members[i].rank = static_cast<int>(i) + 1;
    b.knowledge.n = b.size();
    out.push_back(a);
    out.push_back(b);
    return out;
}

int DeliveryReport::max_latency() const {
    int best = 0;
    for (const auto& e : entries)
        if (e.accepted) best = std::max(best, e.latency_frames);
    return best;
}

bool DeliveryReport::complete() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const Entry& e) { return e.accepted; });
}

const DeliveryReport::Entry* DeliveryReport::at_rank(int rank) const {
    for (const auto& e : entries)
        if (e.rank == rank) return &e;
    return nullptr;
}

namespace {

// One directional side of a dissemination (sign +1 tailward, -1 headward).
void run_side(const Cohort& cohort, int origin, int sign, const LinkLoss& lost,
              int max_frames, DeliveryReport& report) {
    int n = cohort.size();
    auto in_side = [&](int r) {
        return r >= 1 && r <= n && (r - origin) * sign > 0;
    };
    std::vector<int> side_ranks;
    for (int r = origin + sign; r >= 1 && r <= n; r += sign) side_ranks.push_back(r);
    if (side_ranks.empty()) return;

    std::map<int, std::set<int>> copies;      // rank -> distinct sender ranks heard
    std::map<int, int> first_copy;            // rank -> frame of first copy
    std::map<int, int> relay_at;              // rank -> scheduled relay frame
    std::set<int> relayed;
    std::map<int, int> accept_frame;
    constexpr int kTimeoutFrames = 2;

    auto deliver = [&](int from, int frame) {
        for (int d : {-2, -1, 1, 2}) {
            int to = from + d;
            if (!in_side(to) || to == from) continue;
            if (lost && lost(from, to, frame)) continue;
            copies[to].insert(from);
            first_copy.try_emplace(to, frame);
            // Receipt from the adjacent upstream neighbor schedules this
            // member's single relay for the next frame.
            if (to - sign == from && !relay_at.count(to) && !relayed.count(to))
                relay_at[to] = frame + 1;
            // Acceptance: adjacent to the origin on the direct copy,
            // otherwise two identical copies from distinct senders.
            if (!accept_frame.count(to)) {
                bool adjacent_origin = (to == origin + sign) && from == origin;
                if (adjacent_origin || copies[to].size() >= 2) accept_frame[to] = frame;
            }
        }
    };

    if (max_frames < 0) max_frames = 2 * n + 2;
    deliver(origin, 0);
    for (int frame = 1; frame <= max_frames; ++frame) {
        // Recovery: a member stuck with copies but no acceptance past the
        // timeout window re-broadcasts what it heard (fault-free setting;
        // the adversarial receive path never re-broadcasts lone copies).
        for (const auto& [r, f0] : first_copy)
            if (!accept_frame.count(r) && !relayed.count(r) && !relay_at.count(r) &&
                frame - f0 >= kTimeoutFrames)
                relay_at[r] = frame + 1;
        std::vector<int> due;
        for (const auto& [r, f] : relay_at)
            if (f == frame && !relayed.count(r)) due.push_back(r);
        for (int r : due) {
            relayed.insert(r);
            deliver(r, frame);
        }
    }

    for (int r : side_ranks) {
        DeliveryReport::Entry e;
        e.rank = r;
        if (auto it = accept_frame.find(r); it != accept_frame.end()) {
            e.accepted = true;
            e.accept_frame = it->second;
            e.latency_frames = it->second + 1;  // origin frame inclusive
        }
        report.entries.push_back(e);
    }
}

}  // namespace

DeliveryReport disseminate(const Cohort& cohort, int origin_rank, Direction direction,
                           const LinkLoss& lost, int max_frames) {
    if (!cohort.member_at_rank(origin_rank))
        throw std::invalid_argument("disseminate: origin is not a member");
    DeliveryReport report;
    if (direction == Direction::headward || direction == Direction::both)
        run_side(cohort, origin_rank, -1, lost, max_frames, report);
    if (direction == Direction::tailward || direction == Direction::both)
        run_side(cohort, origin_rank, +1, lost, max_frames, report);
    std::sort(report.entries.begin(), report.entries.end(),
              [](const auto& a, const auto& b) { return a.rank < b.rank; });
    return report;
}

void check_cohort_invariants(const Cohort& cohort, const CohortPolicy& policy,
                             const std::function<double(VehicleId)>* position_of) {
    const auto& ck = cohort.knowledge;
    if (cohort.members.empty()) throw std::logic_error("cohort invariant: empty cohort");
    if (ck.n != cohort.size()) throw std::logic_error("cohort invariant: n != member count");
    if (ck.sl > ck.hl) throw std::logic_error("cohort invariant: SL > HL");
    if (cohort.size() > policy.n_max(ck.velocity))
        throw std::logic_error("cohort invariant: n exceeds n_max(velocity)");
    for (int i = 0; i < cohort.size(); ++i) {
        const auto& m = cohort.members[static_cast<std::size_t>(i)];
        if (m.rank != i + 1) throw std::logic_error("cohort invariant: ranks not consecutive");
        if (m.aul < ck.sl || m.aul > ck.hl)
            throw std::logic_error("cohort invariant: member aul outside [SL, HL]");
    }
    if (position_of) {
        // Head leads: positions strictly decrease with rank.
        for (int i = 1; i < cohort.size(); ++i) {
            double ahead = (*position_of)(cohort.members[static_cast<std::size_t>(i - 1)].vehicle);
            double behind = (*position_of)(cohort.members[static_cast<std::size_t>(i)].vehicle);
            if (!(ahead > behind))
                throw std::logic_error("cohort invariant: rank order != position order");
        }
    }
}

}  // namespace avn
