#ifndef RCASIM_SIMKERNEL_HPP
#define RCASIM_SIMKERNEL_HPP

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcasim/baselines.hpp"
#include "rcasim/routing.hpp"
#include "rcasim/trace.hpp"

namespace rcasim {

enum class Algorithm { Rca, Static, Single };

const char* algorithm_name(Algorithm a);

// Constant-rate traffic descriptor. Packets are generated in on/off bursts
// (configured in SimConfig) inside the [start, stop) window; each burst
// performs its own route establishment and teardown.
struct Flow {
    int id = 0;
    NodeId src = -1;
    NodeId dst = -1;
    double rate_pps = 10.0;
    int packet_size = 512;
    double start = 0.0;
    double stop = 50.0;
};

struct SimConfig {
    Algorithm algorithm = Algorithm::Rca;
    double link_rate_mbps = 2.0;   // data bit rate; airtime = size*8/rate
    int iface_queue_cap = 50;      // drop-tail buffer per node interface
    int waiter_queue_cap = 10;     // waiting-node address queue length
    double wait_timeout = 2.0;     // seconds a discovery may sit parked
    double retry_holdoff = 0.25;   // pause before re-running a failed discovery
    double burst_on = 5.0;         // traffic burst length
    double burst_off = 5.0;        // idle gap between bursts (0 = continuous)
    bool control_overhead = false; // model control frames as channel-1 airtime
    ProtocolConfig protocol;
    std::uint64_t static_seed = 1; // seed for the static channel plan
};

struct FlowMetrics {
    int flow = 0;
    long sent = 0;
    long delivered = 0;
    long collided = 0;
    long dropped = 0;
    double delivery_rate = 0.0;
    double throughput_kbps = 0.0;
};

struct Metrics {
    std::vector<FlowMetrics> per_flow;
    long sent = 0;
    long delivered = 0;
    long collided = 0;
    long dropped = 0;
    double mean_delivery_rate = 0.0;
    double mean_throughput_kbps = 0.0;
};

// Aggregate per-flow accumulators into the reported metrics. Flows that sent
// nothing report a delivery rate of 0 by convention.
Metrics collect_metrics(const std::vector<FlowMetrics>& per_flow);

uint64_t metrics_hash(const Metrics& m);
std::string metrics_to_string(const Metrics& m);

// A single packet transmission attempt on the air.
struct TransmissionSpan {
    NodeId tx = -1;
    NodeId rx = -1;
    ChannelId channel = 0;
    double start = 0.0;
    double airtime = 0.0;
};

enum class TxOutcome { Delivered, Collided };

// Pure pairwise resolution: a transmission collides iff it overlaps in time
// with another transmission it interferes with. Both sides of an interfering
// overlap collide; there is no capture.
std::vector<TxOutcome> resolve_transmissions(const std::vector<TransmissionSpan>& spans,
                                             const Topology& topo);

// Raised when the engine detects a violated protocol invariant (an interfering
// route establishment, an overcommitted radio). These indicate bugs, not
// scenario failures.
struct SimInvariantViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Deterministic single-threaded discrete-event simulation of one scenario run.
// Identical (topology, config, flows) inputs produce identical metrics and an
// identical trace.
class Simulation {
public:
    Simulation(Topology topo, SimConfig cfg, std::vector<Flow> flows, TraceLog* trace = nullptr);
    ~Simulation();
    Simulation(Simulation&&) noexcept;
    Simulation& operator=(Simulation&&) noexcept;

    Metrics run();

    const Topology& topology() const;
    const ChannelInfo& node_state(NodeId n) const;
    long collision_count() const;
    const StaticAssignment* static_plan() const; // null unless algorithm == Static

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace rcasim

#endif
