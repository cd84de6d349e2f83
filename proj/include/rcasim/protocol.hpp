#ifndef RCASIM_PROTOCOL_HPP
#define RCASIM_PROTOCOL_HPP

#include <optional>
#include <utility>
#include <vector>

#include "rcasim/chanstate.hpp"
#include "rcasim/topology.hpp"

namespace rcasim {

// What a node answers when a neighbor asks to open a link on a channel.
enum class ResponseKind {
    Available,      // channel granted, keep routing through me
    RouteElsewhere, // pick another channel or another next hop
    Wait            // requester's address stored; resume on notify
};

struct Response {
    ResponseKind kind = ResponseKind::RouteElsewhere;
    std::optional<ChannelId> granted_channel; // present iff kind == Available
    double completion_echo = 0.0;             // responder's busy horizon
    bool alternatives_available = false;      // responder still has free channels
};

// Occupancy announcement a node sends to its radio neighborhood after a grant.
struct ChannelBroadcast {
    NodeId sender = -1;
    ChannelId channel = 0;
    double busy_until = 0.0;
};

// Sent to the head waiter once one of the holder's channels frees up.
struct WaitNotify {
    NodeId holder = -1; // the node that gave up the channel
    ChannelId freed_channel = 0;
};

struct ProtocolConfig {
    // Wait-branch horizon update. Default accumulates the waiter's estimate on
    // top of the holder's own horizon; the alternative replaces it with twice
    // the incoming estimate.
    bool double_incoming_wait_horizon = false;
};

// Lowest unoccupied channel, or nothing when all channels are busy or every
// radio interface is already committed.
std::optional<ChannelId> select_channel(const ChannelInfo& own, double now, int channel_count,
                                        int interfaces_in_use, int interface_count);

// Response management, run by the node receiving a link request. Grants the
// requested channel when it is free and a radio is spare; otherwise steers the
// requester to try another channel, to route around, or to wait in the queue,
// arbitrated by comparing the requester's completion estimate against this
// node's busy horizon.
Response handle_request(ChannelInfo& own, ChannelId requested_channel, double incoming_completion,
                        NodeId requester, double now, int channel_count, int interface_count,
                        const ProtocolConfig& cfg = {});

// Record an overheard occupancy announcement. The blocked entry self-expires at
// the announced completion time.
void apply_broadcast(ChannelInfo& own, const ChannelBroadcast& msg, double now);

// A notify message together with the waiting node it must be delivered to.
struct NotifyDispatch {
    NodeId to = -1;
    WaitNotify notify;
};

// Called when one of `self`'s channels becomes fully free. Pops the head waiter
// (if any) so it can resume routing toward this node on the freed channel.
std::optional<NotifyDispatch> channel_freed(ChannelInfo& own, NodeId self, ChannelId freed, double now);

enum class StepOutcome { Proceed, Reroute, Waiting };

struct StepResult {
    StepOutcome outcome = StepOutcome::Reroute;
    std::optional<ChannelId> channel;    // granted channel on Proceed
    std::optional<NodeId> waiting_on;    // holder when waiting remotely; empty = waiting for own radio
    std::vector<ChannelBroadcast> broadcasts;
    std::vector<std::pair<ChannelId, ResponseKind>> attempts; // one entry per request sent
};

// One hop of the distribution algorithm: the sender walks its free channels in
// ascending order, requesting each from the next hop until one is granted, the
// next hop parks it in the wait queue, or the candidates run out. A grant
// occupies the channel at both endpoints and announces it from both.
StepResult step_distribution(const Topology& topo, NodeId node, NodeId next_hop,
                             ChannelInfo& sender, ChannelInfo& receiver, double now,
                             double flow_completion, const ProtocolConfig& cfg = {},
                             std::optional<ChannelId> preferred = std::nullopt);

} // namespace rcasim

#endif
