#include "avn/sim/trace.hpp"

#include <cstdio>

namespace avn::sim {

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void ScenarioTrace::add(double time, std::string code, std::string subject, std::string detail) {
    events.push_back({time, std::move(code), std::move(subject), std::move(detail)});
}

void ScenarioTrace::bump(const std::string& metric, double amount) {
    metrics[metric] += amount;
}

std::uint64_t ScenarioTrace::hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (i * 8)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& ev : events) {
        mix(fnv1a(ev.code));
        mix(fnv1a(ev.subject));
        mix(fnv1a(ev.detail));
    }
    return h;
}

std::string format_event(const TraceEvent& ev) {
    char head[64];
    std::snprintf(head, sizeof(head), "t=%.6f", ev.time);
    std::string line = head;
    line += " ev=" + ev.code + " subj=" + ev.subject;
    if (!ev.detail.empty()) line += " d=" + ev.detail;
    return line;
}

void ScenarioTrace::write_events(std::ostream& os) const {
    for (const auto& ev : events) os << format_event(ev) << "\n";
}

void ScenarioTrace::write_metrics(std::ostream& os) const {
    for (const auto& [k, v] : metrics) os << k << "=" << v << "\n";
}

}  // namespace avn::sim
