#ifndef RCASIM_BASELINES_HPP
#define RCASIM_BASELINES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "rcasim/routing.hpp"

namespace rcasim {

// Fixed multi-radio channel plan: per-node interface channels plus one fixed
// channel per link, unchanged for the whole run.
struct StaticAssignment {
    std::vector<std::vector<ChannelId>> interfaces;            // per node, ascending
    std::map<std::pair<NodeId, NodeId>, ChannelId> link_channel; // key: (min, max)
    bool common_fallback = false; // every interface pinned to channel 1

    std::optional<ChannelId> channel_for_link(NodeId a, NodeId b) const;
    std::uint64_t hash() const;
};

// Build the static plan. Interfaces get a deterministic degree-rank spread over
// the channel inventory (rotated by the seed); each link is then pinned to the
// lowest shared channel that no adjacent link already uses, falling back to the
// least-conflicting shared channel. If any neighbor pair ends up sharing no
// channel at all, the whole plan degenerates to channel 1 everywhere so that
// connectivity is never lost.
StaticAssignment static_assign(const Topology& topo, int channels, int interfaces,
                               std::uint64_t seed);

// Shortest path over links that share a channel, each hop on its fixed link
// channel. No reassignment ever happens.
std::optional<EstablishedRoute> static_route(const StaticAssignment& assignment,
                                             const Topology& topo, NodeId src, NodeId dst);

// Single-radio baseline: every node on one common channel, shortest path, all
// hops on channel 1.
std::optional<EstablishedRoute> single_radio_route(const Topology& topo, NodeId src, NodeId dst);

// Deterministic BFS shortest path (lowest-id tie-break) over an arbitrary
// link predicate. Exposed for the baseline implementations and tests.
std::optional<std::vector<NodeId>> shortest_path(const Topology& topo, NodeId src, NodeId dst,
                                                 const std::map<std::pair<NodeId, NodeId>, ChannelId>* usable);

} // namespace rcasim

#endif
