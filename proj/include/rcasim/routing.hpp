#ifndef RCASIM_ROUTING_HPP
#define RCASIM_ROUTING_HPP

#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "rcasim/protocol.hpp"

namespace rcasim {

// AODV-style route request, extended with the responder's channel answer so the
// previous hop learns how to proceed.
struct RouteRequest {
    NodeId origin = -1;
    NodeId destination = -1;
    int request_id = 0;
    std::vector<NodeId> hop_list;     // begins with origin, no repeats
    std::optional<Response> response_info;
    std::set<NodeId> excluded;
};

// Route reply carrying the per-hop channel assignment back to the origin.
struct RouteReply {
    NodeId destination = -1;
    std::vector<NodeId> path;
    std::vector<ChannelId> channels;  // channels[i] serves hop path[i] -> path[i+1]
    ChannelId expected_channel = 0;
    double expected_completion = 0.0;
};

struct EstablishedRoute {
    int flow_id = -1;
    std::vector<NodeId> path;
    std::vector<ChannelId> channels;
    double established_at = 0.0;
};

// A channel that became fully free at a node, to be fanned out as waiter
// notifications by the caller.
struct FreedChannel {
    NodeId node = -1;
    ChannelId channel = 0;
};

// One hop whose claim was given back (both endpoints released).
struct HopRelease {
    NodeId a = -1;
    NodeId b = -1;
    ChannelId channel = 0;
};

struct ReleaseOutcome {
    std::vector<HopRelease> hops;   // every hop actually released
    std::vector<FreedChannel> freed; // channels that became fully free
};

enum class DiscoveryStatus {
    Probing,       // still expanding toward the destination
    WaitingRemote, // parked in a next hop's waiter queue
    WaitingLocal,  // all own channels/radios busy, waiting for one to free
    Established,
    NoPath,        // graph disconnected under the exclusions
    NoChannel      // paths exist but channel assignment failed everywhere
};

// Result of one advance() call: at most one hop attempt (which may carry
// several channel proposals), preceded by any backtracking pops.
struct AdvanceResult {
    DiscoveryStatus status = DiscoveryStatus::Probing;
    NodeId from = -1;
    NodeId to = -1;
    std::optional<ChannelId> channel;
    std::vector<std::pair<ChannelId, ResponseKind>> attempts;
    std::vector<ChannelBroadcast> broadcasts;
    ReleaseOutcome released; // hops given back by backtracking
    bool backtracked = false;
};

// One route discovery: a deterministic shortest-hop-first expansion from the
// source, claiming a channel per hop through step_distribution. Reroute
// responses blacklist the offending node for this discovery and the search
// backtracks; Wait responses suspend the discovery until a notify (or a
// timeout handled by the caller). Driven step by step so a simulation can
// charge per-hop control latency and interleave other events.
class Discovery {
public:
    Discovery(const Topology& topo, int flow_id, int request_id, NodeId src, NodeId dst,
              std::set<NodeId> excluded, ProtocolConfig cfg = {});

    AdvanceResult advance(std::vector<ChannelInfo>& states, double now, double flow_completion,
                          std::optional<ChannelId> preferred = std::nullopt);

    // True when this discovery is the addressee of the notify: its frontier is
    // `recipient` and it waits on the notify's holder.
    bool matches_notify(NodeId recipient, const WaitNotify& notify) const;

    // Resume a remotely waiting discovery on the freed channel. A stale notify
    // (not matching) is ignored and reported as such.
    AdvanceResult resume(std::vector<ChannelInfo>& states, NodeId recipient, const WaitNotify& notify,
                         double now, double flow_completion);

    // Abandon the discovery: drop the queue slot at the waited node and release
    // every channel claimed along the prefix.
    ReleaseOutcome abort(std::vector<ChannelInfo>& states, double now);

    DiscoveryStatus status() const { return status_; }
    NodeId source() const { return src_; }
    NodeId destination() const { return dst_; }
    NodeId frontier() const { return path_.back(); }
    std::optional<NodeId> waiting_on() const { return waiting_on_; }
    const std::vector<NodeId>& path() const { return path_; }
    const std::vector<ChannelId>& channels() const { return channels_; }
    int flow_id() const { return flow_id_; }
    int request_id() const { return request_id_; }

    RouteRequest request_snapshot() const;
    EstablishedRoute route(double now) const; // valid once Established
    RouteReply reply(double flow_completion) const;

private:
    std::optional<NodeId> next_candidate(double now) const;
    std::vector<int> hops_to_destination() const;

    const Topology& topo_;
    int flow_id_;
    int request_id_;
    NodeId src_;
    NodeId dst_;
    std::set<NodeId> excluded_;   // caller-provided plus rerouted nodes
    std::set<NodeId> failed_;     // dead ends discovered while searching
    std::vector<NodeId> path_;
    std::vector<ChannelId> channels_;
    DiscoveryStatus status_ = DiscoveryStatus::Probing;
    std::optional<NodeId> waiting_on_;
    std::optional<Response> last_response_;
    ProtocolConfig cfg_;
};

struct DiscoveryOutcome {
    std::optional<EstablishedRoute> route;
    DiscoveryStatus status = DiscoveryStatus::NoPath;
    std::unique_ptr<Discovery> pending; // set when the search is parked waiting
};

// Synchronous convenience wrapper: advances a Discovery until it either
// establishes a route, fails, or parks waiting. Broadcasts are applied to the
// sender's neighborhood immediately.
DiscoveryOutcome discover_route(const Topology& topo, std::vector<ChannelInfo>& states, int flow_id,
                                NodeId src, NodeId dst, const std::set<NodeId>& excluded, double now,
                                double flow_completion, const ProtocolConfig& cfg = {});

// Deliver occupancy broadcasts to every neighbor of each sender.
void apply_broadcasts(const Topology& topo, std::vector<ChannelInfo>& states,
                      const std::vector<ChannelBroadcast>& broadcasts, double now);

// Release both endpoints of every hop of the route. Idempotent: hops already
// released are skipped. Returns the channels that became fully free.
ReleaseOutcome teardown(const EstablishedRoute& route, std::vector<ChannelInfo>& states, double now);

} // namespace rcasim

#endif
