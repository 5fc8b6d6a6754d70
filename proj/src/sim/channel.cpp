#include "avn/sim/channel.hpp"

#include <stdexcept>

namespace avn::sim {

double LossModel::link_p(VehicleId from, VehicleId to) const {
    if (auto it = overrides.find({from, to}); it != overrides.end()) return it->second;
    return p;
}

void LossModel::validate() const {
    auto check = [](double v) {
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("LossModel: p must be in [0, 1]");
    };
    check(p);
    for (const auto& [link, v] : overrides) check(v);
}

DeliveryOutcome channel_deliver_one(VehicleId sender, VehicleId receiver, RangeKind kind,
                                    const WorldSnapshot& world, const RangeConfig& config,
                                    const LossModel& loss, std::mt19937_64& rng) {
    // Out-of-range pairs never consume a loss draw.
    if (!in_range(sender, receiver, kind, world, config)) return DeliveryOutcome::out_of_range;
    double link = loss.link_p(sender, receiver);
    if (link <= 0.0) return DeliveryOutcome::delivered;
    std::uniform_real_distribution<double> draw(0.0, 1.0);
    return draw(rng) < link ? DeliveryOutcome::lost : DeliveryOutcome::delivered;
}

std::vector<Delivery> channel_deliver(const std::vector<std::pair<VehicleId, VehicleId>>& pairs,
                                      RangeKind kind, const WorldSnapshot& world,
                                      const RangeConfig& config, const LossModel& loss,
                                      std::mt19937_64& rng) {
    std::vector<Delivery> out;
    out.reserve(pairs.size());
    for (const auto& [from, to] : pairs)
        out.push_back({from, to, channel_deliver_one(from, to, kind, world, config, loss, rng)});
    return out;
}

}  // namespace avn::sim
