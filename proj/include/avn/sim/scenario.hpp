#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avn/cell.hpp"
#include "avn/cohort.hpp"
#include "avn/kinematics.hpp"
#include "avn/mac.hpp"
#include "avn/sim/channel.hpp"
#include "avn/tpd.hpp"

namespace avn::sim {

struct VehicleInit {
    VehicleId id = 0;
    double position = 0.0;
    int lane = 1;
    double velocity = 0.0;
    int aul = 0;
    bool stealth = true;
    int pseudo_pool = 5000;
    int nsc_pseudo_pool = 1000;
};

struct CohortInit {
    CohortId id = 0;
    int lane = 1;
    double velocity = 0.0;
    int sl = 0;
    int hl = 5;
    std::vector<VehicleId> members;  // head first
};

// Scripted protocol/fault events. Unused fields are ignored per type.
struct ScriptedEvent {
    double time = 0.0;
    std::string type;  // lg_join | lt_join | disseminate | decelerate |
                       // misbehave | attack | infotainment | ecall
    VehicleId vehicle = 0;
    CohortId cohort = 0;
    int after_rank = 0;           // lt_join insertion point
    int origin_rank = 1;          // disseminate
    std::string direction = "tailward";
    std::string payload;
    double accel = 0.0;           // decelerate
    double duration = 0.0;
    bool forged_signature = false;
    std::string misbehavior;      // "early_send" (P1) | "off_slot" (P2)
    AttackSpec attack;
};

struct CrowdsourceSettings {
    bool enabled = false;
    bool probabilistic = false;
    double p = 0.1;
    int period_frames = 10;
};

struct Scenario {
    int schema_version = 1;
    std::string name;
    double duration = 10.0;  // s
    std::uint64_t seed = 1;

    RoadSegment road;
    RangeConfig ranges;
    GapPolicy gap_policy;
    CohortPolicy cohort_policy;
    MacFrame mac;
    LossModel loss;

    double verify_delay = 0.002;  // s
    double stop_decel = 3.0;      // m/s^2
    bool saturate = false;        // every member heartbeats every frame
    bool p3_enabled = false;
    int infotainment_period_frames = 0;  // 0 = none
    CrowdsourceSettings crowdsource;

    std::vector<VehicleInit> vehicles;
    std::vector<CohortInit> cohorts;
    std::vector<ScriptedEvent> events;

    // Returns every problem found; empty = valid.
    std::vector<std::string> validate() const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);

}  // namespace avn::sim
