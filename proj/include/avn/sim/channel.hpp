#pragma once

#include <map>
#include <random>
#include <utility>
#include <vector>

#include "avn/cell.hpp"

namespace avn::sim {

// Independent Bernoulli loss per (tx, receiver) pair. Draws are consumed
// in the caller's pair order, which the engine keeps sorted for
// deterministic replay.
struct LossModel {
    double p = 0.0;
    std::map<std::pair<VehicleId, VehicleId>, double> overrides;

    double link_p(VehicleId from, VehicleId to) const;
    void validate() const;
};

enum class DeliveryOutcome { delivered, lost, out_of_range };

DeliveryOutcome channel_deliver_one(VehicleId sender, VehicleId receiver, RangeKind kind,
                                    const WorldSnapshot& world, const RangeConfig& config,
                                    const LossModel& loss, std::mt19937_64& rng);

struct Delivery {
    VehicleId sender = 0;
    VehicleId receiver = 0;
    DeliveryOutcome outcome = DeliveryOutcome::delivered;
};

std::vector<Delivery> channel_deliver(const std::vector<std::pair<VehicleId, VehicleId>>& pairs,
                                      RangeKind kind, const WorldSnapshot& world,
                                      const RangeConfig& config, const LossModel& loss,
                                      std::mt19937_64& rng);

}  // namespace avn::sim
