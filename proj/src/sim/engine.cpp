#include "avn/sim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "avn/analysis.hpp"
#include "avn/n2n.hpp"
#include "avn/tpd.hpp"

namespace avn::sim {

namespace {

constexpr double kKinematicsDt = 0.01;

std::string hex_digest(const std::string& payload) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(payload)));
    return buf;
}

std::string name_str(int rank, int lane) {
    return "r" + std::to_string(rank) + ".j" + std::to_string(lane);
}

struct VehicleRt {
    VehicleInit init;
    KinematicState kin;
    TamperProofDevice sc_tpd;
    TamperProofDevice nsc_tpd;
    TpdMonitor monitor;
    AcceptanceState accept;
    std::optional<AttackSpec> attack;

    double scripted_accel = 0.0;
    double scripted_accel_until = -1.0;
    bool stopping = false;
    bool silenced = false;
    bool report_emitted = false;
    double halt_report_time = 0.0;
    ExclusionReport pending_report;
};

struct PlannedTx {
    VehicleId sender = 0;
    Channel channel = Channel::longitudinal;
    double tx_time = 0.0;
    int slot_rank = 0;       // slot actually used
    int own_rank = 0;        // sender's true rank when the tx was scheduled
    Name claimed;
    int origin_rank = 0;
    bool relayed = false;
    bool protocol = false;   // carries a payload for the acceptance layer
    std::string payload;
    bool is_attack = false;
};

struct PlannedRelay {
    VehicleId vehicle = 0;
    CohortId cohort = 0;
    int origin_rank = 0;
    std::string payload;
    int frame = 0;
};

struct DissemTracker {
    int origin_frame = 0;
    int origin_rank = 0;
};

class Engine {
public:
    Engine(const Scenario& scenario, const RunOptions& options)
        : sc_(scenario), options_(options) {
        if (options.seed_override) sc_.seed = *options.seed_override;
    }

    ScenarioTrace run();

private:
    Scenario sc_;
    RunOptions options_;
    ScenarioTrace trace_;
    std::mt19937_64 rng_;
    PseudonymAuthority authority_;

    std::map<VehicleId, VehicleRt> vehicles_;
    std::map<CohortId, Cohort> cohorts_;
    CohortId next_cohort_id_ = 1000;
    std::vector<PlannedRelay> planned_relays_;
    std::map<std::pair<CohortId, std::string>, DissemTracker> dissem_;
    std::vector<ScriptedEvent> queue_;
    std::size_t next_event_ = 0;
    int frame_ = 0;
    double t0_ = 0.0;

    double frame_dur() const { return sc_.mac.frame_duration(); }

    void setup();
    WorldSnapshot snapshot() const;
    void advance_kinematics();
    void detect_collisions(const WorldSnapshot& world);
    void process_scripted(const WorldSnapshot& world);
    std::vector<PlannedTx> build_transmissions(const WorldSnapshot& world);
    void deliver_and_receive(std::vector<PlannedTx>& txs, const WorldSnapshot& world);
    void evaluate_own_predicates(const std::vector<PlannedTx>& txs);
    void progress_stops();
    void crowdsource_and_v2x();
    void sense_p3(const WorldSnapshot& world, const std::set<VehicleId>& transmitted);
    void check_invariants(const WorldSnapshot& world);

    std::optional<std::pair<CohortId, int>> membership_of(VehicleId v) const;
    void reset_send_monitors(const Cohort& cohort);
    void initiate_stop(VehicleId v, const std::string& reason);
    void remove_from_cohort(VehicleId v);
    void handle_join(const ScriptedEvent& ev, const WorldSnapshot& world);
    void handle_disseminate(const ScriptedEvent& ev);
    void emit_renum_dissem(const Cohort& cohort, const std::string& why);
};

void Engine::setup() {
    auto problems = sc_.validate();
    if (!problems.empty()) {
        std::string msg = "scenario validation failed:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw std::runtime_error(msg);
    }
    rng_.seed(sc_.seed);

    int cert = 100;
    int pseudo_base = 0;
    for (const auto& vi : sc_.vehicles) {
        VehicleRt rt;
        rt.init = vi;
        rt.kin = {vi.position, vi.lane, vi.velocity, 0.0};
        rt.sc_tpd = issue_pseudos(vi.id, cert, vi.pseudo_pool, Compartment::sc, pseudo_base);
        pseudo_base += vi.pseudo_pool;
        rt.nsc_tpd = issue_pseudos(vi.id, cert, vi.nsc_pseudo_pool, Compartment::nsc, pseudo_base);
        pseudo_base += vi.nsc_pseudo_pool;
        ++cert;
        vehicles_.emplace(vi.id, std::move(rt));
    }
    for (const auto& ci : sc_.cohorts) {
        Cohort c;
        c.id = ci.id;
        c.lane = ci.lane;
        c.knowledge = {static_cast<int>(ci.members.size()), ci.velocity, ci.sl, ci.hl};
        if (sc_.cohort_policy.homogeneous) c.knowledge.sl = c.knowledge.hl;
        int rank = 1;
        for (VehicleId m : ci.members)
            c.members.push_back({m, rank++, vehicles_.at(m).init.aul});
        cohorts_.emplace(c.id, std::move(c));
        next_cohort_id_ = std::max(next_cohort_id_, ci.id + 1000);
    }
    authority_.verify_delay = sc_.verify_delay;

    queue_ = sc_.events;
    std::stable_sort(queue_.begin(), queue_.end(),
                     [](const ScriptedEvent& a, const ScriptedEvent& b) { return a.time < b.time; });
}

WorldSnapshot Engine::snapshot() const {
    WorldSnapshot w;
    w.road = sc_.road;
    w.time = t0_;
    for (const auto& [id, rt] : vehicles_)
        w.vehicles.push_back({id, rt.kin.position, rt.kin.lane});
    return w;
}

std::optional<std::pair<CohortId, int>> Engine::membership_of(VehicleId v) const {
    for (const auto& [cid, c] : cohorts_) {
        const CohortMember* m = c.member_of(v);
        if (m) return std::make_pair(cid, m->rank);
    }
    return std::nullopt;
}

void Engine::advance_kinematics() {
    for (auto& [id, rt] : vehicles_) {
        double accel = 0.0;
        if (rt.stopping) {
            accel = -sc_.stop_decel;
        } else if (t0_ < rt.scripted_accel_until) {
            accel = rt.scripted_accel;
        }
        double remaining = frame_dur();
        while (remaining > 1e-12) {
            double step = std::min(kKinematicsDt, remaining);
            rt.kin = advance_state(rt.kin, accel, step);
            remaining -= step;
        }
        if (sc_.road.wrap_around && rt.kin.position >= sc_.road.length)
            rt.kin.position = std::fmod(rt.kin.position, sc_.road.length);
    }
}

void Engine::detect_collisions(const WorldSnapshot& world) {
    for (int lane = 1; lane <= sc_.road.lane_count; ++lane) {
        std::vector<const VehicleSnapshot*> in_lane;
        for (const auto& v : world.vehicles)
            if (v.lane == lane) in_lane.push_back(&v);
        std::sort(in_lane.begin(), in_lane.end(),
                  [](const auto* a, const auto* b) { return a->position > b->position; });
        for (std::size_t i = 1; i < in_lane.size(); ++i) {
            if (in_lane[i]->position >= in_lane[i - 1]->position) {
                trace_.add(t0_, "COLLISION", "lane" + std::to_string(lane),
                           "pos=" + std::to_string(in_lane[i]->position));
                trace_.bump("collisions");
            }
        }
    }
}

// Renumbering reassigns slots, so the minimum-separation clock restarts:
// a member moving to an earlier slot is not an early sender.
void Engine::reset_send_monitors(const Cohort& cohort) {
    for (const auto& m : cohort.members) {
        auto& monitor = vehicles_.at(m.vehicle).monitor;
        monitor.last_lg_send.reset();
        monitor.last_lt_send.reset();
    }
}

void Engine::emit_renum_dissem(const Cohort& cohort, const std::string& why) {
    trace_.add(t0_, "RENUM", "cohort" + std::to_string(cohort.id),
               "n=" + std::to_string(cohort.size()) + " cause=" + why);
    trace_.add(t0_, "DISSEM", "cohort" + std::to_string(cohort.id),
               "origin=r1 p=" + hex_digest("n=" + std::to_string(cohort.size())));
}

void Engine::handle_join(const ScriptedEvent& ev, const WorldSnapshot& world) {
    auto cit = cohorts_.find(ev.cohort);
    if (cit == cohorts_.end()) {
        trace_.add(t0_, "JOIN_REJ", "v" + std::to_string(ev.vehicle), "reason=gone");
        return;
    }
    Cohort& cohort = cit->second;
    VehicleRt& joiner = vehicles_.at(ev.vehicle);

    // One pseudonym per attempt, accepted or not.
    auto request = sign_join(joiner.sc_tpd, joiner.init.aul, 0);
    if (!request) {
        trace_.add(t0_, "JOIN_REJ", "v" + std::to_string(ev.vehicle), "reason=auth_unavailable");
        return;
    }
    trace_.bump("pseudos_consumed");
    if (ev.forged_signature) request->well_formed = false;
    trace_.add(t0_, "JOIN_REQ", "v" + std::to_string(ev.vehicle),
               "cohort=" + std::to_string(ev.cohort) + " type=" + ev.type +
                   " pseudo=" + std::to_string(request->pseudo_id));

    double decision_time = t0_ + authority_.verify_delay;
    bool auth_ok = verify_join(*request, authority_) == VerifyOutcome::valid;

    JoinResult result;
    if (ev.type == "lg_join") {
        const CohortMember& tail = cohort.members.back();
        const auto& tail_kin = vehicles_.at(tail.vehicle).kin;
        bool behind = joiner.kin.position < tail_kin.position;
        bool near = in_range(ev.vehicle, tail.vehicle, RangeKind::n2n, world, sc_.ranges);
        result = lg_join(cohort, ev.vehicle, joiner.init.aul, auth_ok, behind && near,
                         sc_.cohort_policy);
    } else {
        int k = ev.after_rank;
        double gap = 1e18;
        if (k >= 1 && k < cohort.size()) {
            double front = vehicles_.at(cohort.member_at_rank(k)->vehicle).kin.position;
            double back = vehicles_.at(cohort.member_at_rank(k + 1)->vehicle).kin.position;
            gap = front - back;
        }
        double needed =
            required_iv_gap(joiner.kin.velocity, joiner.init.aul, sc_.gap_policy);
        result = lt_join(cohort, ev.vehicle, joiner.init.aul, k, gap, needed, auth_ok,
                         sc_.cohort_policy);
        if (result.accepted) {
            // Physical lane change into the gap.
            joiner.kin.lane = cohort.lane;
            if (k >= 1 && k < cohort.size() - 1) {
                double front = vehicles_.at(cohort.member_at_rank(k)->vehicle).kin.position;
                double back = vehicles_.at(cohort.member_at_rank(k + 2)->vehicle).kin.position;
                joiner.kin.position = (front + back) / 2.0;
            } else if (k == 0) {
                double head = vehicles_.at(cohort.member_at_rank(2)->vehicle).kin.position;
                joiner.kin.position = head + required_iv_gap(cohort.knowledge.velocity,
                                                             joiner.init.aul, sc_.gap_policy);
            } else {
                double tail = vehicles_.at(cohort.member_at_rank(k)->vehicle).kin.position;
                joiner.kin.position = tail - required_iv_gap(cohort.knowledge.velocity,
                                                             joiner.init.aul, sc_.gap_policy);
            }
            joiner.kin.velocity = cohort.knowledge.velocity;
        }
    }

    if (result.accepted) {
        trace_.add(decision_time, "JOIN_OK", "v" + std::to_string(ev.vehicle),
                   "cohort=" + std::to_string(ev.cohort) +
                       " rank=" + std::to_string(result.rank));
        emit_renum_dissem(cohort, "join");
        reset_send_monitors(cohort);
    } else {
        trace_.add(decision_time, "JOIN_REJ", "v" + std::to_string(ev.vehicle),
                   "reason=" + to_string(*result.reason));
    }
}

void Engine::handle_disseminate(const ScriptedEvent& ev) {
    auto cit = cohorts_.find(ev.cohort);
    if (cit == cohorts_.end()) return;
    Cohort& cohort = cit->second;
    if (!cohort.member_at_rank(ev.origin_rank)) return;

    dissem_[{ev.cohort, ev.payload}] = {frame_, ev.origin_rank};
    VehicleId origin = cohort.member_at_rank(ev.origin_rank)->vehicle;
    planned_relays_.push_back({origin, ev.cohort, ev.origin_rank, ev.payload, frame_});
    trace_.add(t0_, "DISSEM", "cohort" + std::to_string(ev.cohort),
               "origin=r" + std::to_string(ev.origin_rank) + " p=" + hex_digest(ev.payload));
}

void Engine::process_scripted(const WorldSnapshot& world) {
    while (next_event_ < queue_.size() && queue_[next_event_].time <= t0_ + 1e-12) {
        const ScriptedEvent& ev = queue_[next_event_++];
        if (ev.type == "lg_join" || ev.type == "lt_join") {
            handle_join(ev, world);
        } else if (ev.type == "disseminate") {
            handle_disseminate(ev);
        } else if (ev.type == "decelerate") {
            auto& rt = vehicles_.at(ev.vehicle);
            rt.scripted_accel = ev.accel;
            rt.scripted_accel_until = ev.time + ev.duration;
        } else if (ev.type == "attack") {
            vehicles_.at(ev.attack.attacker).attack = ev.attack;
            trace_.add(t0_, "ATTACK_ARMED", "v" + std::to_string(ev.attack.attacker),
                       "kind=" + to_string(ev.attack.kind));
        } else if (ev.type == "misbehave") {
            // handled at transmission build time via a one-shot marker
            auto& rt = vehicles_.at(ev.vehicle);
            AttackSpec spec;
            spec.kind = AttackKind::false_inject;  // placeholder, unused
            spec.attacker = ev.vehicle;
            spec.start_frame = frame_;
            spec.end_frame = frame_;
            spec.payload = ev.misbehavior;  // "early_send" | "off_slot"
            spec.target_rank = -1;          // marks a misbehavior, not an attack
            rt.attack = spec;
        } else if (ev.type == "ecall" || ev.type == "infotainment") {
            auto& rt = vehicles_.at(ev.vehicle);
            V2XClass cls = ev.type == "ecall" ? V2XClass::ecall : V2XClass::infotainment;
            auto permitted = stealth_filter({{cls, ev.payload}}, rt.init.stealth);
            if (permitted.empty()) {
                trace_.bump("v2x_blocked");
            } else {
                trace_.add(t0_, "V2X_TX", "v" + std::to_string(ev.vehicle),
                           "cls=" + to_string(cls) + " p=" + hex_digest(ev.payload));
                trace_.bump("v2x_sent");
            }
        }
    }
}

std::vector<PlannedTx> Engine::build_transmissions(const WorldSnapshot& world) {
    std::vector<PlannedTx> txs;

    auto slot_time = [&](int slot_rank) {
        return t0_ + slot_times(std::min(slot_rank, sc_.mac.slots_per_frame), sc_.mac).lg_offset;
    };

    // Relays due this frame, one per member per frame (extras postponed).
    std::set<VehicleId> relay_sent;
    std::vector<PlannedRelay> keep;
    std::stable_sort(planned_relays_.begin(), planned_relays_.end(),
                     [](const PlannedRelay& a, const PlannedRelay& b) {
                         if (a.frame != b.frame) return a.frame < b.frame;
                         return a.vehicle < b.vehicle;
                     });
    for (auto& relay : planned_relays_) {
        if (relay.frame > frame_) {
            keep.push_back(relay);
            continue;
        }
        auto membership = membership_of(relay.vehicle);
        VehicleRt& rt = vehicles_.at(relay.vehicle);
        if (!membership || membership->first != relay.cohort || rt.silenced) continue;
        if (relay_sent.count(relay.vehicle)) {
            relay.frame = frame_ + 1;
            keep.push_back(relay);
            continue;
        }
        relay_sent.insert(relay.vehicle);

        int rank = membership->second;
        const Cohort& cohort = cohorts_.at(relay.cohort);
        std::string payload = relay.payload;
        bool is_attack = false;
        bool origin_tx = rank == relay.origin_rank;
        if (!origin_tx && rt.attack && rt.attack->target_rank >= 0 &&
            frame_ >= rt.attack->start_frame && frame_ <= rt.attack->end_frame) {
            if (rt.attack->kind == AttackKind::suppress) {
                trace_.bump("attack_events");
                trace_.bump("attack_events_suppress");
                continue;  // relay duty silently dropped
            }
            if (rt.attack->kind == AttackKind::forge) {
                payload = rt.attack->payload;
                is_attack = true;
                trace_.bump("attack_events");
                trace_.bump("attack_events_forge");
            }
        }
        PlannedTx tx;
        tx.sender = relay.vehicle;
        tx.tx_time = slot_time(rank);
        tx.slot_rank = rank;
        tx.own_rank = rank;
        tx.claimed = Name{rank, cohort.lane};
        tx.origin_rank = relay.origin_rank;
        tx.relayed = !origin_tx;
        tx.protocol = true;
        tx.payload = payload;
        tx.is_attack = is_attack;
        txs.push_back(tx);
    }
    planned_relays_ = std::move(keep);

    // Saturation heartbeats: every member not otherwise transmitting.
    if (sc_.saturate) {
        for (const auto& [cid, cohort] : cohorts_) {
            for (const auto& m : cohort.members) {
                if (relay_sent.count(m.vehicle)) continue;
                VehicleRt& rt = vehicles_.at(m.vehicle);
                if (rt.silenced) continue;
                bool attacking_member =
                    rt.attack && rt.attack->target_rank >= 0 &&
                    frame_ >= rt.attack->start_frame && frame_ <= rt.attack->end_frame &&
                    (rt.attack->kind == AttackKind::masquerade ||
                     rt.attack->kind == AttackKind::sybil ||
                     rt.attack->kind == AttackKind::false_inject);
                if (attacking_member) continue;  // attacker's slot use replaced below
                PlannedTx tx;
                tx.sender = m.vehicle;
                tx.tx_time = slot_time(m.rank);
                tx.slot_rank = m.rank;
                tx.own_rank = m.rank;
                tx.claimed = Name{m.rank, cohort.lane};
                tx.origin_rank = m.rank;
                tx.payload = "hb";
                txs.push_back(tx);
            }
        }
    }

    // Attacker and misbehavior transmissions.
    for (auto& [id, rt] : vehicles_) {
        if (!rt.attack || rt.silenced) continue;
        auto membership = membership_of(id);
        if (!membership) continue;
        int own_rank = membership->second;
        int lane = cohorts_.at(membership->first).lane;
        const AttackSpec& spec = *rt.attack;

        if (spec.target_rank == -1) {
            // Scripted own-vehicle misbehavior (P1/P2 exclusion scenarios).
            if (frame_ != spec.start_frame) continue;
            PlannedTx tx;
            tx.sender = id;
            tx.own_rank = own_rank;
            tx.claimed = Name{own_rank, lane};
            tx.origin_rank = own_rank;
            tx.payload = "mb";
            if (spec.payload == "early_send") {
                tx.tx_time = slot_time(own_rank);
                tx.slot_rank = own_rank;
                txs.push_back(tx);
                PlannedTx second = tx;
                second.tx_time += 0.4 * sc_.mac.slot_duration;
                txs.push_back(second);
            } else {  // off_slot
                int foreign = own_rank == 1 ? 2 : 1;
                tx.tx_time = slot_time(foreign) + 0.2 * sc_.mac.slot_duration;
                tx.slot_rank = foreign;
                txs.push_back(tx);
            }
            continue;
        }
        if (frame_ < spec.start_frame || frame_ > spec.end_frame) continue;

        auto push_attack = [&](int claimed_rank, int slot_rank, bool protocol) {
            PlannedTx tx;
            tx.sender = id;
            tx.tx_time = slot_time(slot_rank);
            tx.slot_rank = slot_rank;
            tx.own_rank = own_rank;
            tx.claimed = Name{claimed_rank, lane};
            tx.origin_rank = claimed_rank;
            tx.protocol = protocol;
            tx.payload = spec.payload;
            tx.is_attack = true;
            txs.push_back(tx);
            trace_.bump("attack_events");
            trace_.bump("attack_events_" + to_string(spec.kind));
        };
        switch (spec.kind) {
            case AttackKind::masquerade:
                // Victim's name, but the radio is keyed to the attacker's
                // own slot: receivers see name/slot mismatch.
                push_attack(spec.target_rank, own_rank, false);
                break;
            case AttackKind::sybil: {
                int second = spec.target_rank + 1;
                push_attack(spec.target_rank, spec.target_rank, false);
                push_attack(second, second, false);
                break;
            }
            case AttackKind::false_inject:
                push_attack(spec.target_rank, own_rank, true);
                break;
            default:
                break;  // forge/suppress act on relay duties above
        }
    }

    std::stable_sort(txs.begin(), txs.end(), [](const PlannedTx& a, const PlannedTx& b) {
        if (a.tx_time != b.tx_time) return a.tx_time < b.tx_time;
        return a.sender < b.sender;
    });
    return txs;
}

void Engine::deliver_and_receive(std::vector<PlannedTx>& txs, const WorldSnapshot& world) {
    // Resolve the cohort each transmission claims membership of: the
    // sender's own cohort in the claimed lane, else any cohort there.
    std::vector<const Cohort*> tx_cohort(txs.size(), nullptr);
    for (std::size_t i = 0; i < txs.size(); ++i) {
        for (const auto& [cid, c] : cohorts_)
            if (c.lane == txs[i].claimed.lane && c.member_of(txs[i].sender)) tx_cohort[i] = &c;
        if (!tx_cohort[i])
            for (const auto& [cid, c] : cohorts_)
                if (c.lane == txs[i].claimed.lane) tx_cohort[i] = &c;
    }

    // Slot occupancy per (cohort, slot): overlapping transmissions within
    // one cohort's frame collide and are undecodable; observers flag the
    // conflict. Distinct cohorts reuse slots spatially.
    std::map<std::pair<CohortId, int>, int> slot_count;
    for (std::size_t i = 0; i < txs.size(); ++i)
        if (tx_cohort[i]) ++slot_count[{tx_cohort[i]->id, txs[i].slot_rank}];

    std::map<VehicleId, std::vector<InboxEvent>> inboxes;
    std::set<VehicleId> transmitted;

    for (std::size_t tx_index = 0; tx_index < txs.size(); ++tx_index) {
        const PlannedTx& tx = txs[tx_index];
        transmitted.insert(tx.sender);
        trace_.add(tx.tx_time, "N2N_TX", name_str(tx.claimed.rank, tx.claimed.lane),
                   "ch=lg origin=r" + std::to_string(tx.origin_rank) +
                       " rel=" + (tx.relayed ? std::string("1") : std::string("0")) +
                       " p=" + hex_digest(tx.payload));
        trace_.bump("n2n_tx");
        double access_delay = tx.tx_time + sc_.mac.slot_duration - t0_;
        trace_.metrics["max_access_delay"] =
            std::max(trace_.metrics["max_access_delay"], access_delay);

        const Cohort* cohort = tx_cohort[tx_index];
        if (!cohort) continue;

        bool conflicted = slot_count[{cohort->id, tx.slot_rank}] > 1;
        TxRecord record{tx.claimed, tx.channel, tx.tx_time, fnv1a(tx.payload)};
        OwnershipResult ownership =
            check_slot_ownership(record, tx.claimed.rank, sc_.mac, cohort->size());

        bool discarded = conflicted || ownership.verdict != SlotVerdict::ok;
        bool observed = false;

        for (const auto& m : cohort->members) {
            if (m.vehicle == tx.sender) continue;
            int dist = std::abs(m.rank - tx.claimed.rank);
            bool addressed = dist >= 1 && dist <= 2;
            if (!addressed && !conflicted) continue;

            auto outcome = channel_deliver_one(tx.sender, m.vehicle, RangeKind::n2n, world,
                                               sc_.ranges, sc_.loss, rng_);
            if (outcome == DeliveryOutcome::out_of_range) {
                trace_.bump("n2n_copies_out_of_range");
                continue;
            }
            if (outcome == DeliveryOutcome::lost) {
                trace_.bump("n2n_copies_lost");
                continue;
            }
            trace_.bump("n2n_copies_delivered");
            observed = true;
            if (!discarded && addressed && tx.protocol && !vehicles_.at(m.vehicle).silenced) {
                inboxes[m.vehicle].push_back(
                    {tx.origin_rank, tx.claimed.rank, tx.relayed, tx.payload, frame_});
            }
        }

        if (observed && ownership.verdict != SlotVerdict::ok) {
            std::string kind =
                ownership.verdict == SlotVerdict::masquerade ? "masquerade" : "off_slot";
            trace_.add(tx.tx_time, "MAC_VIOLATION", name_str(tx.claimed.rank, tx.claimed.lane),
                       "kind=" + kind + " owner=r" + std::to_string(ownership.slot_owner));
            trace_.bump("mac_violations");
            if (tx.is_attack) trace_.bump("attack_detected");
        }
        if (observed && conflicted) {
            trace_.add(tx.tx_time, "MAC_VIOLATION", name_str(tx.claimed.rank, tx.claimed.lane),
                       "kind=slot_conflict");
            trace_.bump("mac_violations");
            trace_.bump("slot_conflicts");
            if (tx.is_attack) trace_.bump("attack_detected");
        }
    }

    // Per-member acceptance processing, deterministic order.
    for (auto& [cid, cohort] : cohorts_) {
        for (const auto& m : cohort.members) {
            VehicleRt& rt = vehicles_.at(m.vehicle);
            if (rt.silenced) continue;
            auto it = inboxes.find(m.vehicle);
            static const std::vector<InboxEvent> kEmpty;
            const auto& inbox = it != inboxes.end() ? it->second : kEmpty;
            if (inbox.empty() && rt.accept.pending.empty()) continue;

            LgReceiveResult result = lg_receive(m.rank, inbox, rt.accept, frame_);
            for (const auto& acc : result.accepted) {
                std::string detail = "origin=r" + std::to_string(acc.origin_rank) +
                                     " p=" + hex_digest(acc.payload);
                auto dit = dissem_.find({cid, acc.payload});
                if (dit != dissem_.end()) {
                    int latency = frame_ - dit->second.origin_frame + 1;
                    detail += " latency=" + std::to_string(latency);
                    trace_.metrics["max_dissem_latency"] =
                        std::max(trace_.metrics["max_dissem_latency"],
                                 static_cast<double>(latency));
                }
                trace_.add(t0_, "N2N_ACCEPT", name_str(m.rank, cohort.lane), detail);
                trace_.bump("n2n_accepted");
                bool bogus = false;
                for (const auto& [id2, rt2] : vehicles_)
                    if (rt2.attack && rt2.attack->target_rank >= 0 &&
                        rt2.attack->payload == acc.payload)
                        bogus = true;
                if (bogus && !rt.attack) trace_.bump("forged_accepted");
            }
            for (const auto& flag : result.flags) {
                trace_.add(t0_, "N2N_FLAG", name_str(m.rank, cohort.lane),
                           "kind=" + to_string(flag.kind) +
                               " implicated=r" + std::to_string(flag.implicated_rank));
                trace_.bump("n2n_flags");
                if (flag.kind == FlagKind::forgery) trace_.bump("forgery_flags");
                if (flag.kind == FlagKind::suppression_or_loss)
                    trace_.bump("suppression_flags");
            }
            for (const auto& relay : result.relays)
                planned_relays_.push_back(
                    {m.vehicle, cid, relay.origin_rank, relay.payload, relay.relay_frame});
        }
    }

    if (sc_.p3_enabled) sense_p3(world, transmitted);
}

void Engine::evaluate_own_predicates(const std::vector<PlannedTx>& txs) {
    // Evaluate every send of the frame first; Stop maneuvers mutate the
    // cohorts (splits, renumbering) and run only after the whole batch.
    std::vector<std::pair<VehicleId, std::string>> to_stop;
    for (const auto& tx : txs) {
        VehicleRt& rt = vehicles_.at(tx.sender);
        auto violated = evaluate_send(rt.monitor, rt.sc_tpd, tx.channel, tx.tx_time,
                                      tx.own_rank, sc_.mac);
        if (violated) {
            trace_.add(tx.tx_time, "TPD_VIOLATION", "v" + std::to_string(tx.sender),
                       "pred=" + to_string(*violated));
            trace_.bump("tpd_violations");
            if (!rt.stopping) to_stop.emplace_back(tx.sender, to_string(*violated));
        }
    }
    for (const auto& [vehicle, reason] : to_stop)
        if (!vehicles_.at(vehicle).stopping) initiate_stop(vehicle, reason);
}

void Engine::remove_from_cohort(VehicleId v) {
    auto membership = membership_of(v);
    if (!membership) return;
    auto [cid, rank] = *membership;
    Cohort before = cohorts_.at(cid);
    cohorts_.erase(cid);

    auto pieces = remove_member(before, rank, next_cohort_id_++);
    if (pieces.size() == 2) {
        trace_.add(t0_, "SPLIT", "cohort" + std::to_string(cid),
                   "sizes=" + std::to_string(pieces[0].size()) + "," +
                       std::to_string(pieces[1].size()) +
                       " new=" + std::to_string(pieces[1].id));
        trace_.bump("splits");
    }
    for (auto& piece : pieces) {
        emit_renum_dissem(piece, "exclusion");
        reset_send_monitors(piece);
        cohorts_.emplace(piece.id, std::move(piece));
    }
}

void Engine::initiate_stop(VehicleId v, const std::string& reason) {
    VehicleRt& rt = vehicles_.at(v);
    rt.stopping = true;
    rt.silenced = true;

    StopResult stop = execute_stop(rt.kin, sc_.stop_decel, rt.sc_tpd, rt.nsc_tpd, 0);
    rt.halt_report_time = t0_ + stop.halt_time;
    rt.pending_report = stop.report;

    trace_.add(t0_, "STOP", "v" + std::to_string(v),
               "cause=" + reason + " halt_t=" + std::to_string(stop.halt_time) +
                   " halt_d=" + std::to_string(stop.halt_distance));
    trace_.bump("stops");
    remove_from_cohort(v);
}

void Engine::progress_stops() {
    for (auto& [id, rt] : vehicles_) {
        if (!rt.stopping || rt.report_emitted) continue;
        if (t0_ + frame_dur() >= rt.halt_report_time && rt.kin.velocity <= 1e-9) {
            rt.report_emitted = true;
            const auto& rep = rt.pending_report;
            std::string detail = "cls=exclusion_report cert=" +
                                 std::to_string(rep.certificate_id) +
                                 " pseudo=" + std::to_string(rep.signing_pseudo_id) +
                                 " loc=" + std::to_string(rep.gnss_location) +
                                 " violations=" + std::to_string(rep.log_copy.size());
            trace_.add(rt.halt_report_time, "EXCL_REPORT", "v" + std::to_string(id), detail);
            trace_.add(rt.halt_report_time, "V2X_TX", "v" + std::to_string(id), detail);
            trace_.bump("exclusion_reports");
        }
    }
}

void Engine::crowdsource_and_v2x() {
    if (!sc_.crowdsource.enabled) return;
    if (frame_ % sc_.crowdsource.period_frames != 0) return;
    int round = frame_ / sc_.crowdsource.period_frames;

    CrowdsourceConfig config;
    config.probabilistic = sc_.crowdsource.probabilistic;
    config.p = sc_.crowdsource.p;

    for (auto& [cid, cohort] : cohorts_) {
        auto broadcasters = crowdsource_round(cohort, round, config, rng_);
        for (int rank : broadcasters) {
            const CohortMember* m = cohort.member_at_rank(rank);
            VehicleRt& rt = vehicles_.at(m->vehicle);
            auto signature = sign_join(rt.nsc_tpd, 0, 0);
            int pseudo = signature ? signature->pseudo_id : 0;
            // Carries only the cohort length and a geolocation; no rank,
            // name, or vehicle id.
            std::string body = "cls=crowdsource pseudo=" + std::to_string(pseudo) +
                               " n=" + std::to_string(cohort.size()) +
                               " loc=" + std::to_string(rt.kin.position);
            trace_.add(t0_, "V2X_TX", "cohort" + std::to_string(cid), body);
            trace_.bump("crowdsource_msgs");
        }
    }
}

void Engine::sense_p3(const WorldSnapshot& world, const std::set<VehicleId>& transmitted) {
    for (auto& [id, rt] : vehicles_) {
        if (rt.silenced) continue;
        auto membership = membership_of(id);
        if (!membership) continue;
        CellView cell = compute_cell(id, world, sc_.ranges);
        const Cohort& cohort = cohorts_.at(membership->first);
        for (VehicleId neighbor : cell.members()) {
            if (!cohort.member_of(neighbor)) continue;  // only chain neighbors owe slots
            bool heard = transmitted.count(neighbor) > 0;
            auto violated = evaluate_sensing(rt.monitor, rt.sc_tpd, neighbor, heard, t0_);
            if (violated) {
                trace_.add(t0_, "TPD_VIOLATION", "v" + std::to_string(id),
                           "pred=P3 silent_cell_member");
                trace_.bump("tpd_violations");
                trace_.bump("p3_flags");
            }
        }
    }
}

void Engine::check_invariants(const WorldSnapshot& world) {
    std::function<double(VehicleId)> pos = [&](VehicleId v) {
        return vehicles_.at(v).kin.position;
    };
    for (const auto& [cid, cohort] : cohorts_)
        check_cohort_invariants(cohort, sc_.cohort_policy, &pos);
    for (const auto& v : world.vehicles) {
        CellView cell = compute_cell(v.id, world, sc_.ranges);
        if (cell.size() > 14) throw std::logic_error("cell invariant: more than 14 members");
    }
}

ScenarioTrace Engine::run() {
    setup();
    int frames = static_cast<int>(std::ceil(sc_.duration / frame_dur()));
    for (frame_ = 0; frame_ < frames; ++frame_) {
        t0_ = frame_ * frame_dur();

        advance_kinematics();
        WorldSnapshot world = snapshot();
        detect_collisions(world);
        process_scripted(world);

        auto txs = build_transmissions(world);
        deliver_and_receive(txs, world);
        evaluate_own_predicates(txs);
        progress_stops();
        crowdsource_and_v2x();

        if (options_.checked) check_invariants(world);
    }

    // Conservation: every transmitted copy is delivered, lost, or
    // out of range.
    trace_.metrics["n2n_copies_total"] = trace_.metrics["n2n_copies_delivered"] +
                                         trace_.metrics["n2n_copies_lost"] +
                                         trace_.metrics["n2n_copies_out_of_range"];
    trace_.metrics["trace_hash"] = static_cast<double>(trace_.hash() >> 12);
    return trace_;
}

}  // namespace

ScenarioTrace run_scenario(const Scenario& scenario, const RunOptions& options) {
    Engine engine(scenario, options);
    return engine.run();
}

}  // namespace avn::sim
