#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "avn/cell.hpp"
#include "avn/cohort.hpp"

namespace test_helpers {

// Random multi-lane snapshot, densities up to saturation (vehicles every
// few meters). Positions are continuous draws, so ties are absent by
// construction.
inline avn::WorldSnapshot make_random_world(std::mt19937_64& rng) {
    avn::WorldSnapshot world;
    world.road.lane_count = 3;
    world.road.lane_width = 3.5;
    world.road.length = 400.0;

    std::uniform_int_distribution<int> count_draw(5, 120);
    std::uniform_real_distribution<double> pos_draw(0.0, world.road.length);
    std::uniform_int_distribution<int> lane_draw(1, world.road.lane_count);
    int n = count_draw(rng);
    for (int i = 0; i < n; ++i)
        world.vehicles.push_back({i + 1, pos_draw(rng), lane_draw(rng)});
    return world;
}

// Brute-force cell oracle, written directly from the definition: the two
// strictly nearest same-lane vehicles fore and aft, the five nearest per
// adjacent lane, everything inside the longitudinal window.
inline std::multiset<avn::VehicleId> brute_force_cell(avn::VehicleId subject,
                                                      const avn::WorldSnapshot& world,
                                                      const avn::RangeConfig& config) {
    const avn::VehicleSnapshot* self = world.find(subject);
    std::multiset<avn::VehicleId> out;

    struct Cand {
        double dist;
        avn::VehicleId id;
    };
    auto take = [&](std::vector<Cand> cands, std::size_t k) {
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.dist != b.dist) return a.dist < b.dist;
            return a.id < b.id;
        });
        for (std::size_t i = 0; i < std::min(k, cands.size()); ++i) out.insert(cands[i].id);
    };

    std::vector<Cand> fore, aft, left, right;
    for (const auto& v : world.vehicles) {
        if (v.id == subject) continue;
        double d = v.position - self->position;
        if (std::abs(d) > config.cell_window) continue;
        if (v.lane == self->lane) {
            (d > 0 ? fore : aft).push_back({std::abs(d), v.id});
        } else if (v.lane == self->lane + 1) {
            left.push_back({std::abs(d), v.id});
        } else if (v.lane == self->lane - 1) {
            right.push_back({std::abs(d), v.id});
        }
    }
    take(fore, 2);
    take(aft, 2);
    take(left, 5);
    take(right, 5);
    return out;
}

// Independent dissemination oracle: explicit per-frame message list instead
// of the callback-driven relay scheduler in the library. Rules modeled from
// the protocol description: transmissions reach ranks +-1/+-2 on the origin
// side, a member relays once in the frame after first hearing its adjacent
// upstream neighbor, an unaccepted member with copies re-broadcasts after a
// two-frame timeout, acceptance is a direct adjacent-origin copy or copies
// from two distinct senders.
struct OracleResult {
    std::map<int, int> accept_frame;  // rank -> frame, absent = never
};

inline OracleResult hop_oracle(int n, int origin, int sign,
                               const avn::LinkLoss& lost, int max_frames) {
    OracleResult out;
    struct Msg {
        int from;
        int frame;
    };
    std::vector<Msg> sent = {{origin, 0}};
    std::set<int> relayed = {};
    std::map<int, std::set<int>> heard;
    std::map<int, int> first_heard;
    std::map<int, int> relay_frame;

    auto in_side = [&](int r) { return r >= 1 && r <= n && (r - origin) * sign > 0; };

    for (int frame = 0; frame <= max_frames; ++frame) {
        // Deliver everything sent this frame.
        for (const auto& m : sent) {
            if (m.frame != frame) continue;
            for (int d : {-2, -1, 1, 2}) {
                int to = m.from + d;
                if (!in_side(to)) continue;
                if (lost && lost(m.from, to, frame)) continue;
                heard[to].insert(m.from);
                first_heard.try_emplace(to, frame);
                if (!out.accept_frame.count(to)) {
                    if ((to == origin + sign && m.from == origin) || heard[to].size() >= 2)
                        out.accept_frame[to] = frame;
                }
                if (to - sign == m.from && !relay_frame.count(to) && !relayed.count(to))
                    relay_frame[to] = frame + 1;
            }
        }
        // Timeout recovery: stuck members re-broadcast once.
        for (const auto& [r, f0] : first_heard)
            if (!out.accept_frame.count(r) && !relayed.count(r) && !relay_frame.count(r) &&
                frame + 1 - f0 >= 2)
                relay_frame[r] = frame + 2;
        // Emit next frame's relays.
        for (const auto& [r, f] : relay_frame)
            if (f == frame + 1 && !relayed.count(r)) {
                relayed.insert(r);
                sent.push_back({r, f});
            }
    }
    return out;
}

// Randomized membership churn over several concurrent cohorts. Every
// operation is followed by a full invariant check (consecutive ranks,
// aul window, n_max, rank order == position order). Throws on violation.
inline void rank_integrity_fuzz(int operations, std::uint64_t seed) {
    avn::CohortPolicy policy;
    std::mt19937_64 rng(seed);

    std::map<avn::VehicleId, double> pos;
    std::vector<avn::Cohort> cohorts;
    int next_vehicle = 1;
    int next_cohort = 1;
    const double velocities[] = {8.0, 15.0, 25.0, 35.0};

    std::function<double(avn::VehicleId)> pos_of = [&](avn::VehicleId v) { return pos.at(v); };

    auto new_cohort = [&]() {
        avn::Cohort c;
        c.id = next_cohort++;
        c.lane = 1;
        c.knowledge.velocity = velocities[rng() % 4];
        c.knowledge.sl = 0;
        c.knowledge.hl = 5;
        double head = 1e6 + static_cast<double>(rng() % 100000);
        int aul = static_cast<int>(rng() % 6);
        c.members.push_back({next_vehicle, 1, aul});
        pos[next_vehicle++] = head;
        c.knowledge.n = 1;
        cohorts.push_back(c);
    };
    new_cohort();

    std::uniform_real_distribution<double> gap_draw(5.0, 15.0);
    for (int op = 0; op < operations; ++op) {
        std::size_t which = rng() % cohorts.size();
        avn::Cohort& c = cohorts[which];
        int n = c.size();
        switch (rng() % 6) {
            case 0: {  // tail join
                int aul = static_cast<int>(rng() % 6);
                double tail_pos = pos.at(c.members.back().vehicle);
                auto res = avn::lg_join(c, next_vehicle, aul, true, true, policy);
                if (res.accepted) pos[next_vehicle++] = tail_pos - gap_draw(rng);
                break;
            }
            case 1: {  // lateral join
                int after = static_cast<int>(rng() % static_cast<std::uint64_t>(n + 1));
                double p;
                if (after == 0)
                    p = pos.at(c.members.front().vehicle) + gap_draw(rng);
                else if (after == n)
                    p = pos.at(c.members.back().vehicle) - gap_draw(rng);
                else {
                    double a = pos.at(c.members[static_cast<std::size_t>(after - 1)].vehicle);
                    double b = pos.at(c.members[static_cast<std::size_t>(after)].vehicle);
                    if (a - b < 1e-9) break;
                    p = (a + b) / 2.0;
                }
                int aul = static_cast<int>(rng() % 6);
                auto res = avn::lt_join(c, next_vehicle, aul, after, 10.0, 5.0, true, policy);
                if (res.accepted) pos[next_vehicle++] = p;
                break;
            }
            case 2: {  // split at a random link
                if (n < 2 || cohorts.size() >= 8) break;
                int link = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
                auto [a, b] = avn::split(c, link, next_cohort++);
                cohorts[which] = a;
                cohorts.push_back(b);
                break;
            }
            case 3: {  // member removal
                int rank = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
                bool mid = rank > 1 && rank < n;
                if (mid && cohorts.size() >= 8) break;
                auto pieces = avn::remove_member(c, rank, next_cohort++);
                if (pieces.empty()) {
                    cohorts.erase(cohorts.begin() + static_cast<long>(which));
                    if (cohorts.empty()) new_cohort();
                } else {
                    cohorts[which] = pieces[0];
                    for (std::size_t i = 1; i < pieces.size(); ++i) cohorts.push_back(pieces[i]);
                }
                break;
            }
            default:
                if (cohorts.size() < 8) new_cohort();
                break;
        }
        for (const auto& cohort : cohorts)
            avn::check_cohort_invariants(cohort, policy, &pos_of);
    }
}

}  // namespace test_helpers
