#pragma once

#include <optional>
#include <vector>

#include "avn/kinematics.hpp"

namespace avn {

using VehicleId = int;

struct VehicleSnapshot {
    VehicleId id = 0;
    double position = 0.0;  // m, longitudinal
    int lane = 1;
};

// Immutable world view at one instant. Queries are pure.
struct WorldSnapshot {
    RoadSegment road;
    double time = 0.0;
    std::vector<VehicleSnapshot> vehicles;

    const VehicleSnapshot* find(VehicleId id) const;
};

struct RangeConfig {
    double n2n_range = 30.0;     // m
    double sc_v2v_range = 60.0;  // m
    double cell_window = 60.0;   // m, longitudinal half-width for cell candidacy

    void validate() const;
};

enum class RangeKind { n2n, sc_v2v };

// Cell(X): up to 2 closest predecessors/successors in X's lane plus up to
// 5 nearest neighbors in each adjacent lane; at most 14 members total.
struct CellView {
    VehicleId subject = 0;
    double capture_time = 0.0;
    std::vector<VehicleId> predecessors;   // nearest first
    std::vector<VehicleId> successors;     // nearest first
    std::vector<VehicleId> left_lane;      // by |delta position|, ties by lower id
    std::vector<VehicleId> right_lane;

    std::vector<VehicleId> members() const;
    std::size_t size() const;
};

CellView compute_cell(VehicleId subject, const WorldSnapshot& world, const RangeConfig& config);

// Euclidean distance test using lane-center lateral offsets.
bool in_range(VehicleId a, VehicleId b, RangeKind kind, const WorldSnapshot& world,
              const RangeConfig& config);

double vehicle_distance(const VehicleSnapshot& a, const VehicleSnapshot& b, const RoadSegment& road);

}  // namespace avn
