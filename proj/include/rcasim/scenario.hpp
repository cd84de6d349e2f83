#ifndef RCASIM_SCENARIO_HPP
#define RCASIM_SCENARIO_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcasim/simkernel.hpp"

namespace rcasim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Placement { Random, Grid };
enum class EndpointPolicy { RandomPairs, FixedList };

// One complete run description, parsed from a flat `key = value` file.
struct Scenario {
    // topology
    int nodes = 30;
    double area_x = 1200.0;
    double area_y = 1200.0;
    double range = 250.0;
    int channels = 4;
    int interfaces = 4;
    Placement placement = Placement::Random;
    std::optional<std::uint64_t> topology_seed; // defaults to the run seed
    InterferenceModel interference = InterferenceModel::Trca;

    // workload
    Algorithm algorithm = Algorithm::Rca;
    int flows = 4;
    double rate = 10.0; // packets per second per flow
    int packet_size = 512;
    double duration = 50.0;
    EndpointPolicy flow_endpoint_policy = EndpointPolicy::RandomPairs;
    std::vector<std::pair<NodeId, NodeId>> flow_list; // used with FixedList
    int min_hop_distance = 2;
    int max_hop_distance = 0; // 0 = unlimited
    double start_stagger = 0.2;

    // protocol / engine knobs
    int queue_cap = 10; // waiting-node address queue
    std::uint64_t seed = 1;
    double link_rate_mbps = 2.0;
    int iface_queue_cap = 50;
    double wait_timeout = 2.0;
    double retry_holdoff = 0.25;
    double burst_on = 5.0;
    double burst_off = 5.0;
    bool control_overhead = false;
    bool wait_double_incoming = false;
};

Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& name);

// Build the pieces of a run from a scenario. Exposed so tests can drive the
// engine with scenario-derived inputs.
Topology build_topology(const Scenario& s, std::uint64_t seed);
std::vector<Flow> build_flows(const Scenario& s, const Topology& topo, std::uint64_t seed);
SimConfig build_sim_config(const Scenario& s);

struct RunResult {
    Metrics metrics;
    long collisions = 0;
    std::string trace;
    std::uint64_t hash = 0; // metrics hash
};

// Run one scenario with the given seed. The seed overrides the scenario's.
RunResult run(const Scenario& scenario, std::uint64_t seed, bool with_trace = false);

enum class SweepKey { Rate, Flows };

// The experiment grid: every algorithm x sweep value x seed combination of a
// base scenario.
struct ExperimentMatrix {
    Scenario base;
    SweepKey sweep_key = SweepKey::Rate;
    std::vector<double> sweep_values;
    std::vector<Algorithm> algorithms;
    std::vector<std::uint64_t> seeds;
};

ExperimentMatrix parse_matrix(const std::string& path);
ExperimentMatrix parse_matrix_text(const std::string& text, const std::string& name);

struct MatrixRow {
    Algorithm algorithm = Algorithm::Rca;
    SweepKey sweep_key = SweepKey::Rate;
    double sweep_value = 0.0;
    std::uint64_t seed = 0;
    Metrics metrics;
};

std::vector<MatrixRow> run_matrix_collect(const ExperimentMatrix& matrix);
std::string matrix_csv(const std::vector<MatrixRow>& rows);
std::string matrix_summary_csv(const std::vector<MatrixRow>& rows);

// Runs the grid and writes the per-run CSV to `out_path` and the seed-averaged
// summary to `out_path` with a ".summary.csv" suffix in place of ".csv".
void run_matrix(const ExperimentMatrix& matrix, const std::string& out_path);

std::string summary_path_for(const std::string& out_path);

} // namespace rcasim

#endif
