#include "rcasim/protocol.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rcasim {

std::optional<ChannelId> select_channel(const ChannelInfo& own, double now, int channel_count,
                                        int interfaces_in_use, int interface_count) {
    if (interfaces_in_use >= interface_count) return std::nullopt;
    const auto avail = own.available_channels(now, channel_count);
    if (avail.empty()) return std::nullopt;
    return avail.front();
}

Response handle_request(ChannelInfo& own, ChannelId requested_channel, double incoming_completion,
                        NodeId requester, double now, int channel_count, int interface_count,
                        const ProtocolConfig& cfg) {
    if (requested_channel < 1 || requested_channel > channel_count)
        throw std::invalid_argument("requested channel " + std::to_string(requested_channel) +
                                    " outside 1.." + std::to_string(channel_count));

    const bool radio_spare = own.interfaces_in_use(now) < interface_count;
    if (radio_spare && own.is_available(requested_channel, now)) {
        own.occupy(requested_channel, OccupancyReason::SelfTx, incoming_completion);
        own.raise_completion(incoming_completion);
        return {ResponseKind::Available, requested_channel, own.completion_horizon(now, channel_count),
                !own.available_channels(now, channel_count).empty()};
    }

    // The requested channel cannot be served. While this node still has a free
    // channel and a spare radio, the requester should simply try another
    // channel; the wait-vs-reroute arbitration applies only once nothing here
    // is usable at all.
    const double horizon = own.completion_horizon(now, channel_count);
    if (radio_spare && !own.available_channels(now, channel_count).empty())
        return {ResponseKind::RouteElsewhere, std::nullopt, horizon, true};

    if (incoming_completion < horizon)
        return {ResponseKind::RouteElsewhere, std::nullopt, horizon, false};

    if (own.enqueue_waiter(requester)) {
        if (cfg.double_incoming_wait_horizon)
            own.set_completion(incoming_completion + incoming_completion);
        else
            own.add_wait_burden(requester, incoming_completion);
        return {ResponseKind::Wait, std::nullopt, horizon, false};
    }
    // Queue full (or requester already queued): refuse and send it elsewhere.
    return {ResponseKind::RouteElsewhere, std::nullopt, horizon, false};
}

void apply_broadcast(ChannelInfo& own, const ChannelBroadcast& msg, double now) {
    own.prune(now);
    own.occupy(msg.channel, OccupancyReason::NeighborBlock, msg.busy_until, msg.sender);
}

std::optional<NotifyDispatch> channel_freed(ChannelInfo& own, NodeId self, ChannelId freed, double /*now*/) {
    const auto head = own.dequeue_waiter();
    if (!head) return std::nullopt;
    return NotifyDispatch{*head, WaitNotify{self, freed}};
}

StepResult step_distribution(const Topology& topo, NodeId node, NodeId next_hop,
                             ChannelInfo& sender, ChannelInfo& receiver, double now,
                             double flow_completion, const ProtocolConfig& cfg,
                             std::optional<ChannelId> preferred) {
    const auto& nbrs = topo.neighbors(node);
    if (!std::binary_search(nbrs.begin(), nbrs.end(), next_hop))
        throw std::invalid_argument("next hop " + std::to_string(next_hop) +
                                    " is not a neighbor of node " + std::to_string(node));

    const int C = topo.channel_count();
    const int K = topo.interfaces_per_node();
    StepResult result;

    if (sender.interfaces_in_use(now) >= K) {
        result.outcome = StepOutcome::Waiting; // all own radios busy
        return result;
    }
    auto candidates = sender.available_channels(now, C);
    if (preferred) {
        const auto it = std::find(candidates.begin(), candidates.end(), *preferred);
        if (it != candidates.end()) {
            candidates.erase(it);
            candidates.insert(candidates.begin(), *preferred);
        }
    }
    if (candidates.empty()) {
        result.outcome = StepOutcome::Waiting; // wait for one of our channels to free
        return result;
    }

    for (ChannelId ch : candidates) {
        sender.expected_channel = ch;
        const Response resp =
            handle_request(receiver, ch, flow_completion, node, now, C, K, cfg);
        result.attempts.emplace_back(ch, resp.kind);
        switch (resp.kind) {
        case ResponseKind::Available:
            sender.occupy(ch, OccupancyReason::SelfTx, flow_completion);
            sender.raise_completion(flow_completion);
            sender.expected_channel.reset();
            result.outcome = StepOutcome::Proceed;
            result.channel = ch;
            result.broadcasts.push_back({node, ch, flow_completion});
            result.broadcasts.push_back({next_hop, ch, flow_completion});
            return result;
        case ResponseKind::Wait:
            sender.expected_channel.reset();
            result.outcome = StepOutcome::Waiting;
            result.waiting_on = next_hop;
            return result;
        case ResponseKind::RouteElsewhere:
            if (!resp.alternatives_available) {
                // Receiver is saturated; further channel proposals are futile.
                sender.expected_channel.reset();
                result.outcome = StepOutcome::Reroute;
                return result;
            }
            break;
        }
    }
    sender.expected_channel.reset();
    result.outcome = StepOutcome::Reroute;
    return result;
}

} // namespace rcasim
