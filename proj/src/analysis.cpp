#include "avn/analysis.hpp"

#include <stdexcept>

namespace avn {

double ldm_discrepancy(const BeaconModel& model) {
    if (model.beacon_frequency <= 0.0)
        throw std::invalid_argument("ldm_discrepancy: frequency must be > 0");
    if (model.lost_count < 0) throw std::invalid_argument("ldm_discrepancy: negative lost count");
    return model.lost_count * model.velocity / model.beacon_frequency;
}

PkiLoad pki_load(int vehicles_in_range, double beacon_frequency, double verify_time,
                 double thrashing_threshold) {
    if (vehicles_in_range < 0 || beacon_frequency < 0.0 || verify_time < 0.0)
        throw std::invalid_argument("pki_load: inputs must be >= 0");
    PkiLoad out;
    out.utilization = vehicles_in_range * beacon_frequency * verify_time;
    out.thrashing = out.utilization >= thrashing_threshold;
    return out;
}

std::vector<int> crowdsource_round(const Cohort& cohort, int round, const CrowdsourceConfig& config,
                                   std::mt19937_64& rng) {
    int n = cohort.size();
    if (n < 1) throw std::invalid_argument("crowdsource_round: empty cohort");

    std::vector<int> broadcasters;
    if (!config.probabilistic) {
        broadcasters.push_back((round % n) + 1);
        return broadcasters;
    }
    if (config.p <= 0.0 || config.p > 1.0)
        throw std::invalid_argument("crowdsource_round: p out of (0, 1]");
    std::uniform_real_distribution<double> draw(0.0, 1.0);
    for (int rank = 1; rank <= n; ++rank)
        if (draw(rng) < config.p) broadcasters.push_back(rank);
    return broadcasters;
}

std::string to_string(V2XClass c) {
    switch (c) {
        case V2XClass::ecall: return "ecall";
        case V2XClass::crowdsource: return "crowdsource";
        case V2XClass::exclusion_report: return "exclusion_report";
        case V2XClass::infotainment: return "infotainment";
        case V2XClass::other: return "other";
    }
    return "?";
}

std::vector<V2XMessage> stealth_filter(const std::vector<V2XMessage>& outbound, bool stealth_on) {
    if (!stealth_on) return outbound;
    std::vector<V2XMessage> permitted;
    for (const auto& m : outbound) {
        if (m.cls == V2XClass::ecall || m.cls == V2XClass::crowdsource ||
            m.cls == V2XClass::exclusion_report)
            permitted.push_back(m);
    }
    return permitted;
}

}  // namespace avn
