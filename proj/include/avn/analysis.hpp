#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "avn/cohort.hpp"

namespace avn {

// Positional gap between two observers' latest records of the same
// beaconing vehicle after some beacons were lost by one of them.
struct BeaconModel {
    double velocity = 25.0;        // m/s
    double beacon_frequency = 1.0; // Hz
    int lost_count = 1;
};

double ldm_discrepancy(const BeaconModel& model);

// Fraction of a verifier core consumed by signature checks on beacons from
// x vehicles in radio range.
struct PkiLoad {
    double utilization = 0.0;
    bool thrashing = false;
};

PkiLoad pki_load(int vehicles_in_range, double beacon_frequency, double verify_time,
                 double thrashing_threshold = 0.95);

struct CrowdsourceConfig {
    bool probabilistic = false;
    double p = 0.1;  // per-member broadcast probability
};

// One crowdsourcing round: deterministic mode rotates through ranks,
// probabilistic mode draws per member. Broadcast messages carry only the
// cohort length and the broadcaster's position.
std::vector<int> crowdsource_round(const Cohort& cohort, int round, const CrowdsourceConfig& config,
                                   std::mt19937_64& rng);

enum class V2XClass { ecall, crowdsource, exclusion_report, infotainment, other };

std::string to_string(V2XClass c);

struct V2XMessage {
    V2XClass cls = V2XClass::other;
    std::string body;
};

// Cyber-stealth filter: with stealth on, only e-Call, crowdsourcing, and
// exclusion reports leave the vehicle. N2N/SC-V2V channels are untouched.
std::vector<V2XMessage> stealth_filter(const std::vector<V2XMessage>& outbound, bool stealth_on);

}  // namespace avn
