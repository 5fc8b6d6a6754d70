#include "avn/cell.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace avn {

const VehicleSnapshot* WorldSnapshot::find(VehicleId id) const {
    for (const auto& v : vehicles)
        if (v.id == id) return &v;
    return nullptr;
}

void RangeConfig::validate() const {
    if (n2n_range <= 0.0 || n2n_range > sc_v2v_range)
        throw std::invalid_argument("RangeConfig: require 0 < n2n_range <= sc_v2v_range");
    if (cell_window <= 0.0) throw std::invalid_argument("RangeConfig: cell_window must be > 0");
}

std::vector<VehicleId> CellView::members() const {
    std::vector<VehicleId> out;
    out.reserve(size());
    for (const auto* group : {&predecessors, &successors, &left_lane, &right_lane})
        out.insert(out.end(), group->begin(), group->end());
    return out;
}

std::size_t CellView::size() const {
    return predecessors.size() + successors.size() + left_lane.size() + right_lane.size();
}

namespace {

// Nearest-k lateral neighbors by |delta position|, ties by lower id.
std::vector<VehicleId> lateral_members(const WorldSnapshot& world, const VehicleSnapshot& subject,
                                       int lane, double window, std::size_t k) {
    std::vector<const VehicleSnapshot*> candidates;
    for (const auto& v : world.vehicles) {
        if (v.lane != lane || v.id == subject.id) continue;
        if (std::abs(v.position - subject.position) > window) continue;
        candidates.push_back(&v);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](const VehicleSnapshot* a, const VehicleSnapshot* b) {
                  double da = std::abs(a->position - subject.position);
                  double db = std::abs(b->position - subject.position);
                  if (da != db) return da < db;
                  return a->id < b->id;
              });
    if (candidates.size() > k) candidates.resize(k);
    std::vector<VehicleId> out;
    for (const auto* c : candidates) out.push_back(c->id);
    return out;
}

}  // namespace

CellView compute_cell(VehicleId subject, const WorldSnapshot& world, const RangeConfig& config) {
    const VehicleSnapshot* self = world.find(subject);
    if (!self) throw std::invalid_argument("compute_cell: unknown vehicle id");

    CellView cell;
    cell.subject = subject;
    cell.capture_time = world.time;

    // Same-lane: 2 strictly nearest ahead and behind within the window.
    std::vector<const VehicleSnapshot*> ahead, behind;
    for (const auto& v : world.vehicles) {
        if (v.lane != self->lane || v.id == subject) continue;
        double d = v.position - self->position;
        if (std::abs(d) > config.cell_window) continue;
        (d > 0 ? ahead : behind).push_back(&v);
    }
    auto by_distance = [&](const VehicleSnapshot* a, const VehicleSnapshot* b) {
        double da = std::abs(a->position - self->position);
        double db = std::abs(b->position - self->position);
        if (da != db) return da < db;
        return a->id < b->id;
    };
    std::sort(ahead.begin(), ahead.end(), by_distance);
    std::sort(behind.begin(), behind.end(), by_distance);
    if (ahead.size() > 2) ahead.resize(2);
    if (behind.size() > 2) behind.resize(2);
    for (const auto* v : ahead) cell.predecessors.push_back(v->id);
    for (const auto* v : behind) cell.successors.push_back(v->id);

    if (world.road.lane_valid(self->lane + 1))
        cell.left_lane = lateral_members(world, *self, self->lane + 1, config.cell_window, 5);
    if (world.road.lane_valid(self->lane - 1))
        cell.right_lane = lateral_members(world, *self, self->lane - 1, config.cell_window, 5);

    return cell;
}

double vehicle_distance(const VehicleSnapshot& a, const VehicleSnapshot& b, const RoadSegment& road) {
    double dx = a.position - b.position;
    double dy = road.lane_center(a.lane) - road.lane_center(b.lane);
    return std::sqrt(dx * dx + dy * dy);
}

bool in_range(VehicleId a, VehicleId b, RangeKind kind, const WorldSnapshot& world,
              const RangeConfig& config) {
    const VehicleSnapshot* va = world.find(a);
    const VehicleSnapshot* vb = world.find(b);
    if (!va || !vb) throw std::invalid_argument("in_range: unknown vehicle id");
    double limit = (kind == RangeKind::n2n) ? config.n2n_range : config.sc_v2v_range;
    return vehicle_distance(*va, *vb, world.road) <= limit;
}

}  // namespace avn
