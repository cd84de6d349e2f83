// Command-line front end: run single scenarios, sweep experiment matrices,
// validate configuration files, and replay recorded traces against the
// protocol invariants.
//
// Exit codes: 0 success, 1 configuration error, 2 invariant violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rcasim/scenario.hpp"
#include "rcasim/trace.hpp"

namespace {

int cmd_run(const std::string& scenario_path, long seed_arg, const std::string& trace_path) {
    rcasim::Scenario scenario = rcasim::parse_scenario(scenario_path);
    const std::uint64_t seed =
        seed_arg >= 0 ? static_cast<std::uint64_t>(seed_arg) : scenario.seed;
    const bool want_trace = !trace_path.empty();
    const auto result = rcasim::run(scenario, seed, want_trace);
    if (want_trace) {
        std::ofstream out(trace_path);
        if (!out) throw rcasim::ConfigError(trace_path + ": cannot open for writing");
        out << result.trace;
    }
    std::printf("algorithm=%s seed=%llu flows=%zu\n", rcasim::algorithm_name(scenario.algorithm),
                static_cast<unsigned long long>(seed), result.metrics.per_flow.size());
    std::fputs(rcasim::metrics_to_string(result.metrics).c_str(), stdout);
    std::printf("collisions=%ld metrics_hash=%016llx\n", result.collisions,
                static_cast<unsigned long long>(result.hash));
    return 0;
}

int cmd_matrix(const std::string& config_path, const std::string& out_path) {
    const auto matrix = rcasim::parse_matrix(config_path);
    rcasim::run_matrix(matrix, out_path);
    std::printf("wrote %s and %s\n", out_path.c_str(),
                rcasim::summary_path_for(out_path).c_str());
    return 0;
}

int cmd_validate(const std::string& scenario_path) {
    const auto s = rcasim::parse_scenario(scenario_path);
    std::printf("OK: nodes=%d area=%.0fx%.0f range=%.0f channels=%d interfaces=%d\n", s.nodes,
                s.area_x, s.area_y, s.range, s.channels, s.interfaces);
    std::printf("    algorithm=%s flows=%d rate=%.2f packet_size=%d duration=%.1f queue_cap=%d\n",
                rcasim::algorithm_name(s.algorithm), s.flows, s.rate, s.packet_size, s.duration,
                s.queue_cap);
    return 0;
}

int cmd_replay(const std::string& trace_path) {
    std::ifstream in(trace_path);
    if (!in) throw rcasim::ConfigError(trace_path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto issues = rcasim::validate_trace(buf.str());
    if (issues.empty()) {
        std::printf("trace ok\n");
        return 0;
    }
    for (const auto& issue : issues)
        std::fprintf(stderr, "%s:%zu: %s\n", trace_path.c_str(), issue.line, issue.message.c_str());
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wireless mesh channel-assignment simulator"};
    app.require_subcommand(1);

    std::string scenario_path, trace_path, config_path, out_path;
    long seed = -1;

    auto* run = app.add_subcommand("run", "simulate one scenario");
    run->add_option("--scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--trace", trace_path, "write the event trace to this file");

    auto* matrix = app.add_subcommand("matrix", "run an experiment matrix");
    matrix->add_option("--config", config_path, "matrix file")->required();
    matrix->add_option("--out", out_path, "output CSV path")->required();

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("--scenario", scenario_path, "scenario file")->required();

    auto* replay = app.add_subcommand("replay", "re-check invariants over a recorded trace");
    replay->add_option("--trace", trace_path, "trace file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run)) return cmd_run(scenario_path, seed, trace_path);
        if (app.got_subcommand(matrix)) return cmd_matrix(config_path, out_path);
        if (app.got_subcommand(validate)) return cmd_validate(scenario_path);
        if (app.got_subcommand(replay)) return cmd_replay(trace_path);
    } catch (const rcasim::SimInvariantViolation& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
