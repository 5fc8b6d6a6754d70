#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace avn::sim {

std::uint64_t fnv1a(std::string_view data);

// Stable event codes; the trace format is one event per line with fixed
// field order: t=<time> ev=<code> subj=<subject> d=<detail>
struct TraceEvent {
    double time = 0.0;
    std::string code;
    std::string subject;
    std::string detail;
};

struct ScenarioTrace {
    std::vector<TraceEvent> events;
    std::map<std::string, double> metrics;

    void add(double time, std::string code, std::string subject, std::string detail = "");
    void bump(const std::string& metric, double amount = 1.0);

    // Pure function of event codes, subjects, and detail digests.
    std::uint64_t hash() const;

    void write_events(std::ostream& os) const;
    void write_metrics(std::ostream& os) const;
};

std::string format_event(const TraceEvent& ev);

}  // namespace avn::sim
