#include "avn/n2n.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace avn {

std::string to_string(FlagKind k) {
    switch (k) {
        case FlagKind::forgery: return "forgery";
        case FlagKind::suppression_or_loss: return "suppression_or_loss";
        case FlagKind::spanning_violation: return "spanning_violation";
        case FlagKind::no_majority: return "no_majority";
        case FlagKind::lateral_minority: return "lateral_minority";
    }
    return "?";
}

std::vector<LgTransmission> lg_send(const Membership& sender, const std::string& payload,
                                    int cohort_size, double tx_time, bool relayed,
                                    int origin_rank) {
    if (sender.rank < 1 || sender.rank > cohort_size)
        throw std::invalid_argument("lg_send: sender is not a cohort member");
    if (origin_rank == 0) origin_rank = sender.rank;

    std::vector<LgTransmission> out;
    for (int d : {-2, -1, 1, 2}) {
        int target = sender.rank + d;
        if (target < 1 || target > cohort_size) continue;
        N2NMessage msg;
        msg.sender = sender.name();
        msg.origin_rank = origin_rank;
        msg.channel = Channel::longitudinal;
        msg.payload = payload;
        msg.relayed = relayed;
        msg.tx_time = tx_time;
        out.push_back({target, msg});
    }
    return out;
}

LateralDesignation designate_lateral(VehicleId sender, const WorldSnapshot& world,
                                     const RangeConfig& config) {
    const VehicleSnapshot* self = world.find(sender);
    if (!self) throw std::invalid_argument("designate_lateral: unknown vehicle id");

    LateralDesignation out;
    for (int side : {+1, -1}) {  // +1 = left (higher lane number)
        int lane = self->lane + side;
        if (!world.road.lane_valid(lane)) continue;
        const VehicleSnapshot* best = nullptr;
        double best_d = 0.0;
        for (const auto& v : world.vehicles) {
            if (v.lane != lane) continue;
            double d = vehicle_distance(*self, v, world.road);
            if (d > config.n2n_range) continue;
            if (!best || d < best_d || (d == best_d && v.id < best->id)) {
                best = &v;
                best_d = d;
            }
        }
        if (best) (side > 0 ? out.left : out.right) = best->id;
    }
    return out;
}

std::vector<LtTransmission> lt_send(const Membership& sender, const std::string& payload,
                                    const WorldSnapshot& world, const RangeConfig& config,
                                    double tx_time) {
    LateralDesignation targets = designate_lateral(sender.vehicle, world, config);
    std::vector<LtTransmission> out;
    for (const auto& target : {targets.left, targets.right}) {
        if (!target) continue;
        N2NMessage msg;
        msg.sender = sender.name();
        msg.origin_rank = sender.rank;
        msg.channel = Channel::lateral;
        msg.payload = payload;
        msg.tx_time = tx_time;
        out.push_back({*target, msg});
    }
    return out;
}

namespace {

void flag_once(AcceptanceState::Pending& entry, int sender_rank, FlagKind kind,
               LgReceiveResult& result) {
    if (entry.flagged_senders.insert(sender_rank).second)
        result.flags.push_back({kind, sender_rank});
}

// Acceptance check: direct copy from the adjacent originator, or two
// byte-identical copies from distinct senders. Returns true on accept.
bool resolve_entry(int origin, AcceptanceState::Pending& entry, LgReceiveResult& result,
                   AcceptanceState& state, int member_rank, int frame) {
    auto accept = [&](const std::string& payload) {
        state.accepted[origin] = payload;
        result.accepted.push_back({origin, payload, frame});
        for (const auto& c : entry.copies)
            if (c.payload != payload) flag_once(entry, c.sender_rank, FlagKind::forgery, result);
        return true;
    };

    for (const auto& c : entry.copies)
        if (!c.relayed && c.sender_rank == origin && std::abs(origin - member_rank) == 1)
            return accept(c.payload);

    for (std::size_t i = 0; i < entry.copies.size(); ++i) {
        for (std::size_t j = i + 1; j < entry.copies.size(); ++j) {
            const auto& a = entry.copies[i];
            const auto& b = entry.copies[j];
            if (a.sender_rank == b.sender_rank) continue;
            if (a.payload != b.payload) continue;
            return accept(a.payload);
        }
    }

    // Disagreeing copies with no accepted majority: implicate relayers that
    // contradict the direct copy, or every sender when no direct copy
    // arrived (one of them forged; audit decides which). The entry stays so
    // a later honest copy can still complete acceptance.
    const AcceptanceState::Copy* direct = nullptr;
    for (const auto& c : entry.copies)
        if (!c.relayed && c.sender_rank == origin) direct = &c;
    if (direct) {
        for (const auto& c : entry.copies)
            if (c.relayed && c.payload != direct->payload)
                flag_once(entry, c.sender_rank, FlagKind::forgery, result);
    } else if (entry.copies.size() >= 2) {
        bool disagree = false;
        for (std::size_t i = 1; i < entry.copies.size(); ++i)
            if (entry.copies[i].payload != entry.copies[0].payload) disagree = true;
        if (disagree)
            for (const auto& c : entry.copies)
                flag_once(entry, c.sender_rank, FlagKind::forgery, result);
    }
    return false;
}

}  // namespace

LgReceiveResult lg_receive(int member_rank, const std::vector<InboxEvent>& events,
                           AcceptanceState& state, int current_frame) {
    LgReceiveResult result;

    for (const auto& ev : events) {
        if (ev.origin_rank == member_rank) continue;  // own payload echoed back
        int dist = std::abs(ev.sender_rank - member_rank);
        if (dist < 1 || dist > 2) {
            result.flags.push_back({FlagKind::spanning_violation, ev.sender_rank});
            continue;
        }
        // One dissemination episode per origin: after acceptance, identical
        // copies are late duplicates and disagreeing copies are forgeries.
        auto accepted = state.accepted.find(ev.origin_rank);
        if (accepted != state.accepted.end()) {
            if (ev.payload != accepted->second)
                result.flags.push_back({FlagKind::forgery, ev.sender_rank});
            continue;
        }
        auto [it, inserted] = state.pending.try_emplace(ev.origin_rank);
        auto& entry = it->second;
        if (inserted) entry.first_frame = ev.frame;
        entry.copies.push_back({ev.sender_rank, ev.relayed, ev.payload, ev.frame});
    }

    // Relay decision per payload, with the whole frame batch in hand: a
    // copy heard from an adjacent sender is forwarded once in the next
    // frame, but only while no disagreeing copy is held. Unverified lone
    // copies from non-adjacent senders are never re-broadcast, so an
    // honest chain cannot propagate forged bytes.
    for (auto& [origin, entry] : state.pending) {
        const AcceptanceState::Copy* adjacent = nullptr;
        bool contradicted = false;
        for (const auto& c : entry.copies) {
            if (std::abs(c.sender_rank - member_rank) == 1 && !adjacent) adjacent = &c;
            if (c.payload != entry.copies.front().payload) contradicted = true;
        }
        if (adjacent && !contradicted &&
            !state.relay_done.count({origin, adjacent->payload})) {
            state.relay_done.insert({origin, adjacent->payload});
            result.relays.push_back({origin, adjacent->payload, current_frame + 1});
        }
    }

    for (auto it = state.pending.begin(); it != state.pending.end();) {
        if (resolve_entry(it->first, it->second, result, state, member_rank, current_frame))
            it = state.pending.erase(it);
        else
            ++it;
    }

    // Timeouts: an unresolved entry older than the window signals a lost or
    // suppressed relay. Flagged once; the suspected silent party is the
    // adjacent neighbor on the origin side. The entry is kept so late
    // copies can still complete acceptance.
    for (auto& [origin, entry] : state.pending) {
        if (!entry.timeout_flagged && current_frame - entry.first_frame >= state.timeout_frames) {
            entry.timeout_flagged = true;
            int suspected = origin < member_rank ? member_rank - 1 : member_rank + 1;
            result.flags.push_back({FlagKind::suppression_or_loss, suspected});
        }
    }
    return result;
}

LtReceiveResult lt_receive(const std::vector<LateralCopy>& copies) {
    LtReceiveResult result;
    if (copies.size() < 2) return result;  // majority unreachable

    for (std::size_t i = 0; i < copies.size(); ++i) {
        std::size_t votes = 0;
        for (const auto& c : copies)
            if (c.payload == copies[i].payload) ++votes;
        if (votes >= 2) {
            result.accepted = copies[i].payload;
            for (const auto& c : copies)
                if (c.payload != *result.accepted)
                    result.flags.push_back({FlagKind::lateral_minority, c.source_rank});
            return result;
        }
    }
    // All copies pairwise distinct: no majority, flag everyone for audit.
    for (const auto& c : copies)
        result.flags.push_back({FlagKind::no_majority, c.source_rank});
    return result;
}

}  // namespace avn
