#pragma once

#include <optional>

#include "avn/sim/scenario.hpp"
#include "avn/sim/trace.hpp"

namespace avn::sim {

struct RunOptions {
    bool checked = false;  // assert module invariants at every frame
    std::optional<std::uint64_t> seed_override;
};

// Deterministic single-threaded frame loop. Throws std::runtime_error on
// validation failure and std::logic_error on an invariant breach in
// checked mode.
ScenarioTrace run_scenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace avn::sim
