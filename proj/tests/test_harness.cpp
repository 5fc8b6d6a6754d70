#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "avn/sim/channel.hpp"
#include "avn/sim/engine.hpp"
#include "avn/sim/scenario.hpp"
#include "avn/sim/trace.hpp"

using namespace avn;
using namespace avn::sim;

TEST_CASE("loss model validation and overrides") {
    LossModel loss;
    loss.p = 0.1;
    loss.overrides[{1, 2}] = 0.9;
    CHECK_NOTHROW(loss.validate());
    CHECK(loss.link_p(1, 2) == 0.9);
    CHECK(loss.link_p(2, 1) == 0.1);

    LossModel bad;
    bad.p = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.p = 0.0;
    bad.overrides[{1, 2}] = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

namespace {

WorldSnapshot two_vehicle_world(double gap) {
    WorldSnapshot world;
    world.vehicles = {{1, 0.0, 1}, {2, gap, 1}};
    return world;
}

}  // namespace

TEST_CASE("channel delivery: trivial p values and range gating") {
    RangeConfig config;
    std::mt19937_64 rng(1);

    WorldSnapshot near = two_vehicle_world(10.0);
    LossModel lossless;
    CHECK(channel_deliver_one(1, 2, RangeKind::n2n, near, config, lossless, rng) ==
          DeliveryOutcome::delivered);
    LossModel total;
    total.p = 1.0;
    CHECK(channel_deliver_one(1, 2, RangeKind::n2n, near, config, total, rng) ==
          DeliveryOutcome::lost);

    WorldSnapshot far = two_vehicle_world(45.0);
    CHECK(channel_deliver_one(1, 2, RangeKind::n2n, far, config, lossless, rng) ==
          DeliveryOutcome::out_of_range);
    CHECK(channel_deliver_one(1, 2, RangeKind::sc_v2v, far, config, lossless, rng) ==
          DeliveryOutcome::delivered);
}

TEST_CASE("out-of-range pairs consume no randomness") {
    RangeConfig config;
    LossModel loss;
    loss.p = 0.5;
    WorldSnapshot world;
    world.vehicles = {{1, 0.0, 1}, {2, 10.0, 1}, {3, 500.0, 1}};

    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        std::mt19937_64 with_oor(seed), without(seed);
        auto mixed = channel_deliver({{1, 3}, {1, 2}}, RangeKind::n2n, world, config, loss,
                                     with_oor);
        auto plain = channel_deliver({{1, 2}}, RangeKind::n2n, world, config, loss, without);
        CHECK(mixed[0].outcome == DeliveryOutcome::out_of_range);
        CHECK(mixed[1].outcome == plain[0].outcome);
    }
}

TEST_CASE("Bernoulli losses hit the configured rate") {
    RangeConfig config;
    LossModel loss;
    loss.p = 0.1;
    WorldSnapshot world = two_vehicle_world(10.0);
    std::mt19937_64 rng(2024);

    int delivered = 0;
    const int pairs = 10000;
    for (int i = 0; i < pairs; ++i)
        if (channel_deliver_one(1, 2, RangeKind::n2n, world, config, loss, rng) ==
            DeliveryOutcome::delivered)
            ++delivered;
    double fraction = static_cast<double>(delivered) / pairs;
    CHECK(fraction == doctest::Approx(0.9).epsilon(0.0112));  // 0.9 +/- 0.01
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 14695981039346656037ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("trace formatting and hashing") {
    ScenarioTrace trace;
    trace.add(1.5, "STOP", "v3", "cause=P1");
    trace.add(2.0, "SPLIT", "cohort1");
    CHECK(format_event(trace.events[0]) == "t=1.500000 ev=STOP subj=v3 d=cause=P1");
    CHECK(format_event(trace.events[1]) == "t=2.000000 ev=SPLIT subj=cohort1");

    std::ostringstream os;
    trace.write_events(os);
    CHECK(os.str() ==
          "t=1.500000 ev=STOP subj=v3 d=cause=P1\nt=2.000000 ev=SPLIT subj=cohort1\n");

    ScenarioTrace same;
    same.add(99.0, "STOP", "v3", "cause=P1");  // time excluded from the hash
    same.add(99.0, "SPLIT", "cohort1");
    CHECK(trace.hash() == same.hash());
    ScenarioTrace different;
    different.add(1.5, "STOP", "v4", "cause=P1");
    different.add(2.0, "SPLIT", "cohort1");
    CHECK(trace.hash() != different.hash());

    trace.bump("stops");
    trace.bump("stops", 2.0);
    CHECK(trace.metrics.at("stops") == 3.0);
}

TEST_CASE("scenario parsing covers every field group") {
    const char* text = R"({
        "schema_version": 1,
        "name": "parse-check",
        "duration_s": 2.5,
        "seed": 77,
        "road": {"lane_count": 2, "lane_width": 3.0, "length": 800.0},
        "ranges": {"n2n_range": 25.0, "sc_v2v_range": 50.0},
        "gap_policy": {"brake_decel": 7.0, "headway_by_aul": [2.0, 1.6, 1.2, 0.9, 0.6, 0.4]},
        "mac": {"slot_duration": 0.002, "slots_per_frame": 12},
        "loss": {"p": 0.05, "overrides": [{"from": 1, "to": 2, "p": 0.5}]},
        "saturate": true,
        "p3_enabled": true,
        "stop_decel": 4.0,
        "crowdsource": {"enabled": true, "period_frames": 5},
        "vehicles": [
            {"id": 1, "position": 100.0, "lane": 1, "velocity": 10.0, "aul": 3},
            {"id": 2, "position": 90.0, "lane": 1, "velocity": 10.0, "aul": 3}
        ],
        "cohorts": [
            {"id": 1, "lane": 1, "velocity": 10.0, "members": [1, 2]}
        ],
        "events": [
            {"time": 0.5, "type": "disseminate", "cohort": 1, "origin_rank": 1, "payload": "x"},
            {"time": 1.0, "type": "attack", "kind": "forge", "attacker": 2,
             "start_frame": 3, "end_frame": 6, "attack_payload": "fake"}
        ]
    })";
    Scenario s = parse_scenario(text);
    CHECK(s.name == "parse-check");
    CHECK(s.duration == 2.5);
    CHECK(s.seed == 77);
    CHECK(s.road.lane_count == 2);
    CHECK(s.ranges.n2n_range == 25.0);
    CHECK(s.ranges.cell_window == 50.0);  // defaults to sc_v2v_range
    CHECK(s.gap_policy.brake_decel == 7.0);
    CHECK(s.gap_policy.headway_by_aul[3] == 0.9);
    CHECK(s.mac.slots_per_frame == 12);
    CHECK(s.loss.p == 0.05);
    CHECK(s.loss.link_p(1, 2) == 0.5);
    CHECK(s.saturate);
    CHECK(s.p3_enabled);
    CHECK(s.stop_decel == 4.0);
    CHECK(s.crowdsource.enabled);
    CHECK(s.crowdsource.period_frames == 5);
    REQUIRE(s.vehicles.size() == 2);
    CHECK(s.vehicles[0].stealth);  // default on
    REQUIRE(s.cohorts.size() == 1);
    CHECK(s.cohorts[0].members == std::vector<int>{1, 2});
    REQUIRE(s.events.size() == 2);
    CHECK(s.events[1].attack.kind == AttackKind::forge);
    CHECK(s.events[1].attack.payload == "fake");
    CHECK(s.validate().empty());

    CHECK_THROWS(parse_scenario("{not json"));
    CHECK_THROWS_AS(load_scenario("/nonexistent/path.json"), std::runtime_error);
}

TEST_CASE("scenario validation enumerates every problem") {
    Scenario s;
    s.duration = -1.0;
    s.vehicles = {{1, 100.0, 1, 10.0, 3}, {1, 100.0, 1, 10.0, 9}, {2, 50.0, 7, -5.0, 3}};
    CohortInit c;
    c.id = 1;
    c.lane = 1;
    c.velocity = 10.0;
    c.sl = 4;
    c.hl = 2;
    c.members = {2, 99};
    s.cohorts = {c};
    ScriptedEvent bad_ev;
    bad_ev.time = 0.0;
    bad_ev.type = "teleport";
    s.events = {bad_ev};

    auto problems = s.validate();
    auto contains = [&](const std::string& needle) {
        for (const auto& p : problems)
            if (p.find(needle) != std::string::npos) return true;
        return false;
    };
    CHECK(problems.size() >= 6);
    CHECK(contains("duration"));
    CHECK(contains("duplicate vehicle id 1"));
    CHECK(contains("lane out of range"));
    CHECK(contains("negative velocity"));
    CHECK(contains("aul out of 0..5"));
    CHECK(contains("overlaps another vehicle"));
    CHECK(contains("SL > HL"));
    CHECK(contains("unknown member 99"));
    CHECK(contains("unknown event type: teleport"));
}

TEST_CASE("engine smoke: short run is deterministic and validated") {
    Scenario s = load_scenario(std::string(SCENARIO_DIR) + "/fig2-join.json");
    RunOptions checked;
    checked.checked = true;
    ScenarioTrace a = run_scenario(s, checked);
    ScenarioTrace b = run_scenario(s, checked);
    CHECK(a.hash() == b.hash());
    CHECK(a.events.size() == b.events.size());

    Scenario broken = s;
    broken.duration = -1.0;
    CHECK_THROWS_AS(run_scenario(broken), std::runtime_error);
}
