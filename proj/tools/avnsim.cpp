#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avn/analysis.hpp"
#include "avn/sim/engine.hpp"

namespace {

int cmd_validate(const std::string& path) {
    avn::sim::Scenario scenario = avn::sim::load_scenario(path);
    auto problems = scenario.validate();
    if (problems.empty()) {
        std::cout << "ok: " << scenario.name << "\n";
        return 0;
    }
    for (const auto& p : problems) std::cerr << "error: " << p << "\n";
    return 1;
}

int cmd_run(const std::string& path, std::uint64_t seed, bool has_seed, bool checked,
            const std::string& trace_path, const std::string& metrics_path) {
    avn::sim::Scenario scenario = avn::sim::load_scenario(path);
    avn::sim::RunOptions options;
    options.checked = checked;
    if (has_seed) options.seed_override = seed;

    avn::sim::ScenarioTrace trace = avn::sim::run_scenario(scenario, options);

    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out) throw std::runtime_error("cannot open trace file: " + trace_path);
        trace.write_events(out);
    } else {
        trace.write_events(std::cout);
    }
    if (!metrics_path.empty()) {
        std::ofstream out(metrics_path);
        if (!out) throw std::runtime_error("cannot open metrics file: " + metrics_path);
        trace.write_metrics(out);
    } else {
        trace.write_metrics(std::cout);
    }
    std::printf("trace_hash=%016llx\n", static_cast<unsigned long long>(trace.hash()));
    return 0;
}

int cmd_attack_suite(const std::string& path, const std::vector<std::string>& kinds) {
    avn::sim::Scenario base = avn::sim::load_scenario(path);
    // The attack-free twin measures false positives on the same traffic.
    avn::sim::Scenario twin = base;
    twin.events.erase(std::remove_if(twin.events.begin(), twin.events.end(),
                                     [](const avn::sim::ScriptedEvent& e) {
                                         return e.type == "attack";
                                     }),
                      twin.events.end());
    avn::sim::ScenarioTrace clean = avn::sim::run_scenario(twin);
    double false_positives = clean.metrics["mac_violations"] + clean.metrics["tpd_violations"] +
                             clean.metrics["n2n_flags"];

    std::printf("%-14s %8s %9s %6s %15s %15s\n", "kind", "events", "detected", "rate",
                "forged_accepted", "false_positives");
    int failures = 0;
    for (const auto& kind_name : kinds) {
        auto kind = avn::attack_kind_from_string(kind_name);
        if (!kind) throw std::runtime_error("unknown attack kind: " + kind_name);

        avn::sim::Scenario variant = twin;
        for (const auto& e : base.events)
            if (e.type == "attack" && e.attack.kind == *kind) variant.events.push_back(e);
        std::stable_sort(variant.events.begin(), variant.events.end(),
                         [](const auto& a, const auto& b) { return a.time < b.time; });

        avn::sim::ScenarioTrace trace = avn::sim::run_scenario(variant);
        double events = trace.metrics["attack_events_" + kind_name];
        double detected = 0.0;
        if (*kind == avn::AttackKind::forge)
            detected = trace.metrics["forgery_flags"];
        else if (*kind == avn::AttackKind::suppress)
            detected = trace.metrics["suppression_flags"];
        else
            detected = trace.metrics["attack_detected"];
        detected = std::min(detected, events);
        double rate = events > 0 ? detected / events : 0.0;
        double forged = trace.metrics["forged_accepted"];
        std::printf("%-14s %8.0f %9.0f %5.0f%% %15.0f %15.0f\n", kind_name.c_str(), events,
                    detected, rate * 100.0, forged, false_positives);
        if (events <= 0 || rate < 1.0 || forged > 0 || false_positives > 0) ++failures;
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cohort-based vehicular network simulator"};
    app.require_subcommand(1);

    // run
    std::string scenario_path, trace_path, metrics_path;
    std::uint64_t seed = 0;
    bool checked = false;
    auto* run = app.add_subcommand("run", "Run a scenario and emit trace + metrics");
    run->add_option("scenario", scenario_path, "Scenario file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
    run->add_flag("--checked", checked, "Assert module invariants every frame");
    run->add_option("--trace", trace_path, "Write the event trace to a file");
    run->add_option("--metrics", metrics_path, "Write the metrics summary to a file");

    // validate
    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Validate a scenario file");
    validate->add_option("scenario", validate_path, "Scenario file")->required();

    // attack-suite
    std::string suite_path;
    std::vector<std::string> kinds = {"masquerade", "sybil", "forge", "suppress", "false_inject"};
    auto* suite = app.add_subcommand("attack-suite", "Run the attack corpus per kind");
    suite->add_option("scenario", suite_path, "Scenario with scripted attacks")->required();
    suite->add_option("--kinds", kinds, "Attack kinds to exercise")->delimiter(',');

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Closed-form protocol analyses");
    analyze->require_subcommand(1);

    double velocity = 25.0, frequency = 1.0;
    int lost = 1;
    auto* ldm = analyze->add_subcommand("ldm", "Map discrepancy after lost beacons");
    ldm->add_option("--velocity", velocity, "m/s");
    ldm->add_option("--frequency", frequency, "beacons/s");
    ldm->add_option("--lost", lost, "consecutive beacons lost");

    int in_range = 70;
    double beacon_hz = 7.0, verify_time = 0.002;
    auto* pki = analyze->add_subcommand("pki", "Signature-verification load");
    pki->add_option("--vehicles", in_range, "vehicles in radio range");
    pki->add_option("--frequency", beacon_hz, "beacons/s per vehicle");
    pki->add_option("--verify-time", verify_time, "s per signature check");

    int crowd_n = 8, rounds = 10;
    bool probabilistic = false;
    double crowd_p = 0.1;
    std::uint64_t crowd_seed = 1;
    auto* crowd = analyze->add_subcommand("crowd", "Crowdsourced traffic estimation rounds");
    crowd->add_option("--n", crowd_n, "cohort size");
    crowd->add_option("--rounds", rounds, "rounds to simulate");
    crowd->add_flag("--probabilistic", probabilistic, "per-member Bernoulli broadcasts");
    crowd->add_option("--p", crowd_p, "broadcast probability");
    crowd->add_option("--seed", crowd_seed, "rng seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(scenario_path, seed, seed_opt->count() > 0, checked, trace_path,
                           metrics_path);
        if (*validate) return cmd_validate(validate_path);
        if (*suite) return cmd_attack_suite(suite_path, kinds);
        if (*ldm) {
            avn::BeaconModel model{velocity, frequency, lost};
            std::printf("discrepancy_m=%.6f\n", avn::ldm_discrepancy(model));
            return 0;
        }
        if (*pki) {
            avn::PkiLoad load = avn::pki_load(in_range, beacon_hz, verify_time);
            std::printf("utilization=%.6f thrashing=%s\n", load.utilization,
                        load.thrashing ? "yes" : "no");
            return 0;
        }
        if (*crowd) {
            avn::Cohort cohort;
            cohort.id = 1;
            for (int r = 1; r <= crowd_n; ++r) cohort.members.push_back({r, r, 3});
            cohort.knowledge.n = crowd_n;
            avn::CrowdsourceConfig config{probabilistic, crowd_p};
            std::mt19937_64 rng(crowd_seed);
            for (int round = 0; round < rounds; ++round) {
                auto broadcasters = avn::crowdsource_round(cohort, round, config, rng);
                std::ostringstream line;
                line << "round=" << round << " broadcasters=";
                for (std::size_t i = 0; i < broadcasters.size(); ++i)
                    line << (i ? "," : "") << broadcasters[i];
                std::cout << line.str() << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
