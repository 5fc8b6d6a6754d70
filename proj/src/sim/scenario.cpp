#include "avn/sim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace avn::sim {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (j.contains(key)) return j.at(key).get<T>();
    return fallback;
}

ScriptedEvent parse_event(const json& j) {
    ScriptedEvent ev;
    ev.time = j.at("time").get<double>();
    ev.type = j.at("type").get<std::string>();
    ev.vehicle = get_or(j, "vehicle", 0);
    ev.cohort = get_or(j, "cohort", 0);
    ev.after_rank = get_or(j, "after_rank", 0);
    ev.origin_rank = get_or(j, "origin_rank", 1);
    ev.direction = get_or<std::string>(j, "direction", "tailward");
    ev.payload = get_or<std::string>(j, "payload", "");
    ev.accel = get_or(j, "accel", 0.0);
    ev.duration = get_or(j, "duration", 0.0);
    ev.forged_signature = get_or(j, "forged_signature", false);
    ev.misbehavior = get_or<std::string>(j, "misbehavior", "");
    if (ev.type == "attack") {
        auto kind = attack_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) throw std::invalid_argument("scenario: unknown attack kind");
        ev.attack.kind = *kind;
        ev.attack.attacker = j.at("attacker").get<int>();
        ev.attack.target_rank = get_or(j, "target_rank", 0);
        ev.attack.start_frame = get_or(j, "start_frame", 0);
        ev.attack.end_frame = get_or(j, "end_frame", 1 << 30);
        ev.attack.payload = get_or<std::string>(j, "attack_payload", "bogus");
        ev.attack.override_adversary_model = get_or(j, "override_adversary_model", false);
    }
    return ev;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    json j = json::parse(text);
    Scenario s;
    s.schema_version = get_or(j, "schema_version", 1);
    s.name = get_or<std::string>(j, "name", "unnamed");
    s.duration = get_or(j, "duration_s", 10.0);
    s.seed = get_or<std::uint64_t>(j, "seed", 1);

    if (j.contains("road")) {
        const auto& r = j["road"];
        s.road.lane_count = get_or(r, "lane_count", 3);
        s.road.lane_width = get_or(r, "lane_width", 3.5);
        s.road.length = get_or(r, "length", 2000.0);
        s.road.wrap_around = get_or(r, "wrap_around", false);
    }
    if (j.contains("ranges")) {
        const auto& r = j["ranges"];
        s.ranges.n2n_range = get_or(r, "n2n_range", 30.0);
        s.ranges.sc_v2v_range = get_or(r, "sc_v2v_range", 60.0);
        s.ranges.cell_window = get_or(r, "cell_window", s.ranges.sc_v2v_range);
    }
    if (j.contains("gap_policy")) {
        const auto& g = j["gap_policy"];
        s.gap_policy.brake_decel = get_or(g, "brake_decel", 8.0);
        s.gap_policy.reaction_time = get_or(g, "reaction_time", 0.5);
        s.gap_policy.min_gap_floor = get_or(g, "min_gap_floor", 2.0);
        if (g.contains("headway_by_aul")) {
            auto arr = g["headway_by_aul"].get<std::vector<double>>();
            if (arr.size() != 6)
                throw std::invalid_argument("scenario: headway_by_aul needs 6 entries");
            for (std::size_t i = 0; i < 6; ++i) s.gap_policy.headway_by_aul[i] = arr[i];
        }
    }
    if (j.contains("cohort_policy")) {
        const auto& c = j["cohort_policy"];
        if (c.contains("n_max_by_velocity")) {
            s.cohort_policy.n_max_by_velocity.clear();
            for (const auto& step : c["n_max_by_velocity"])
                s.cohort_policy.n_max_by_velocity.push_back(
                    {step.at(0).get<double>(), step.at(1).get<int>()});
        }
        s.cohort_policy.fallback_n_max = get_or(c, "fallback_n_max", 8);
        s.cohort_policy.homogeneous = get_or(c, "homogeneous", false);
    }
    if (j.contains("mac")) {
        const auto& m = j["mac"];
        s.mac.slot_duration = get_or(m, "slot_duration", 0.001);
        s.mac.slots_per_frame = get_or(m, "slots_per_frame", 24);
    }
    if (j.contains("loss")) {
        const auto& l = j["loss"];
        s.loss.p = get_or(l, "p", 0.0);
        if (l.contains("overrides"))
            for (const auto& o : l["overrides"])
                s.loss.overrides[{o.at("from").get<int>(), o.at("to").get<int>()}] =
                    o.at("p").get<double>();
    }
    s.verify_delay = get_or(j, "verify_delay_s", 0.002);
    s.stop_decel = get_or(j, "stop_decel", 3.0);
    s.saturate = get_or(j, "saturate", false);
    s.p3_enabled = get_or(j, "p3_enabled", false);
    s.infotainment_period_frames = get_or(j, "infotainment_period_frames", 0);
    if (j.contains("crowdsource")) {
        const auto& c = j["crowdsource"];
        s.crowdsource.enabled = get_or(c, "enabled", false);
        s.crowdsource.probabilistic = get_or(c, "probabilistic", false);
        s.crowdsource.p = get_or(c, "p", 0.1);
        s.crowdsource.period_frames = get_or(c, "period_frames", 10);
    }

    for (const auto& v : j.value("vehicles", json::array())) {
        VehicleInit vi;
        vi.id = v.at("id").get<int>();
        vi.position = v.at("position").get<double>();
        vi.lane = v.at("lane").get<int>();
        vi.velocity = get_or(v, "velocity", 0.0);
        vi.aul = get_or(v, "aul", 0);
        vi.stealth = get_or(v, "stealth", true);
        vi.pseudo_pool = get_or(v, "pseudo_pool", 5000);
        vi.nsc_pseudo_pool = get_or(v, "nsc_pseudo_pool", 1000);
        s.vehicles.push_back(vi);
    }
    for (const auto& c : j.value("cohorts", json::array())) {
        CohortInit ci;
        ci.id = c.at("id").get<int>();
        ci.lane = c.at("lane").get<int>();
        ci.velocity = get_or(c, "velocity", 0.0);
        ci.sl = get_or(c, "sl", 0);
        ci.hl = get_or(c, "hl", 5);
        ci.members = c.at("members").get<std::vector<int>>();
        s.cohorts.push_back(ci);
    }
    for (const auto& e : j.value("events", json::array())) s.events.push_back(parse_event(e));
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::vector<std::string> Scenario::validate() const {
    std::vector<std::string> problems;
    auto complain = [&](const std::string& msg) { problems.push_back(msg); };

    try {
        ranges.validate();
    } catch (const std::exception& e) {
        complain(e.what());
    }
    try {
        gap_policy.validate();
    } catch (const std::exception& e) {
        complain(e.what());
    }
    try {
        cohort_policy.validate();
    } catch (const std::exception& e) {
        complain(e.what());
    }
    try {
        mac.validate();
    } catch (const std::exception& e) {
        complain(e.what());
    }
    try {
        loss.validate();
    } catch (const std::exception& e) {
        complain(e.what());
    }
    if (duration <= 0.0) complain("duration must be > 0");

    std::set<VehicleId> ids;
    std::set<std::pair<int, long long>> occupied;
    for (const auto& v : vehicles) {
        if (!ids.insert(v.id).second) complain("duplicate vehicle id " + std::to_string(v.id));
        if (!road.lane_valid(v.lane))
            complain("vehicle " + std::to_string(v.id) + ": lane out of range");
        if (v.velocity < 0.0) complain("vehicle " + std::to_string(v.id) + ": negative velocity");
        if (v.aul < 0 || v.aul > 5)
            complain("vehicle " + std::to_string(v.id) + ": aul out of 0..5");
        // Overlap = same lane within 10 cm.
        auto key = std::make_pair(v.lane, static_cast<long long>(v.position * 10.0));
        if (!occupied.insert(key).second)
            complain("vehicle " + std::to_string(v.id) + ": overlaps another vehicle");
    }

    std::set<CohortId> cohort_ids;
    std::set<VehicleId> members_seen;
    for (const auto& c : cohorts) {
        if (!cohort_ids.insert(c.id).second)
            complain("duplicate cohort id " + std::to_string(c.id));
        if (c.members.empty()) complain("cohort " + std::to_string(c.id) + ": no members");
        if (c.sl > c.hl) complain("cohort " + std::to_string(c.id) + ": SL > HL");
        if (static_cast<int>(c.members.size()) > cohort_policy.n_max(c.velocity))
            complain("cohort " + std::to_string(c.id) + ": exceeds n_max");
        double prev_pos = 1e18;
        for (VehicleId m : c.members) {
            if (!ids.count(m))
                complain("cohort " + std::to_string(c.id) + ": unknown member " +
                         std::to_string(m));
            else {
                const VehicleInit* vi = nullptr;
                for (const auto& v : vehicles)
                    if (v.id == m) vi = &v;
                if (vi->lane != c.lane)
                    complain("cohort " + std::to_string(c.id) + ": member " + std::to_string(m) +
                             " not in cohort lane");
                if (vi->aul < c.sl || vi->aul > c.hl)
                    complain("cohort " + std::to_string(c.id) + ": member " + std::to_string(m) +
                             " aul outside [SL, HL]");
                if (vi->position >= prev_pos)
                    complain("cohort " + std::to_string(c.id) +
                             ": member order does not match positions");
                prev_pos = vi->position;
            }
            if (!members_seen.insert(m).second)
                complain("vehicle " + std::to_string(m) + " in more than one cohort");
        }
    }

    for (const auto& e : events) {
        if (e.type == "attack") {
            if (!ids.count(e.attack.attacker)) complain("attack: unknown attacker vehicle");
            if (e.attack.end_frame < e.attack.start_frame) complain("attack: empty frame window");
        } else if (e.type == "lg_join" || e.type == "lt_join") {
            if (!ids.count(e.vehicle)) complain(e.type + ": unknown vehicle");
            if (!cohort_ids.count(e.cohort)) complain(e.type + ": unknown cohort");
            if (members_seen.count(e.vehicle)) complain(e.type + ": joiner already a member");
        } else if (e.type == "disseminate") {
            if (!cohort_ids.count(e.cohort)) complain("disseminate: unknown cohort");
        } else if (e.type == "decelerate" || e.type == "misbehave" || e.type == "ecall" ||
                   e.type == "infotainment") {
            if (!ids.count(e.vehicle)) complain(e.type + ": unknown vehicle");
        } else {
            complain("unknown event type: " + e.type);
        }
    }
    return problems;
}

}  // namespace avn::sim
