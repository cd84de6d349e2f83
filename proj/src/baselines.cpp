#include "rcasim/baselines.hpp"

#include <algorithm>
#include <iterator>
#include <limits>
#include <queue>
#include <stdexcept>

namespace rcasim {

namespace {

std::pair<NodeId, NodeId> edge_key(NodeId a, NodeId b) {
    return {std::min(a, b), std::max(a, b)};
}

std::uint64_t fnv1a_step(std::uint64_t h, std::uint64_t v) {
    h ^= v;
    return h * 0x100000001b3ULL;
}

} // namespace

std::optional<ChannelId> StaticAssignment::channel_for_link(NodeId a, NodeId b) const {
    const auto it = link_channel.find(edge_key(a, b));
    if (it == link_channel.end()) return std::nullopt;
    return it->second;
}

std::uint64_t StaticAssignment::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& ifs : interfaces)
        for (ChannelId ch : ifs) h = fnv1a_step(h, static_cast<std::uint64_t>(ch) + 1);
    for (const auto& [key, ch] : link_channel) {
        h = fnv1a_step(h, static_cast<std::uint64_t>(key.first));
        h = fnv1a_step(h, static_cast<std::uint64_t>(key.second));
        h = fnv1a_step(h, static_cast<std::uint64_t>(ch));
    }
    return fnv1a_step(h, common_fallback ? 1 : 2);
}

StaticAssignment static_assign(const Topology& topo, int channels, int interfaces,
                               std::uint64_t seed) {
    if (channels < interfaces)
        throw std::invalid_argument("static assignment needs channels >= interfaces");
    const int n = topo.node_count();
    StaticAssignment plan;
    plan.interfaces.resize(n);

    // Degree rank: stable position after sorting by (degree desc, id asc).
    std::vector<NodeId> order(n);
    for (NodeId i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        const auto da = topo.neighbors(a).size();
        const auto db = topo.neighbors(b).size();
        if (da != db) return da > db;
        return a < b;
    });
    std::vector<int> rank(n);
    for (int i = 0; i < n; ++i) rank[order[i]] = i;

    const int rotation = static_cast<int>(seed % static_cast<std::uint64_t>(channels));
    for (NodeId v = 0; v < n; ++v) {
        for (int i = 0; i < interfaces; ++i)
            plan.interfaces[v].push_back((i + rank[v] + rotation) % channels + 1);
        std::sort(plan.interfaces[v].begin(), plan.interfaces[v].end());
    }

    // Pin each link to a fixed shared channel. The pick is a plain spread over
    // the endpoints' interface ranks: deterministic and diverse, but blind to
    // which nearby links end up on the same channel, as a fixed per-interface
    // plan is.
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId a = 0; a < n; ++a)
        for (NodeId b : topo.neighbors(a))
            if (a < b) edges.emplace_back(a, b);
    std::sort(edges.begin(), edges.end());

    bool fallback = false;
    for (const auto& [a, b] : edges) {
        std::vector<ChannelId> shared;
        std::set_intersection(plan.interfaces[a].begin(), plan.interfaces[a].end(),
                              plan.interfaces[b].begin(), plan.interfaces[b].end(),
                              std::back_inserter(shared));
        if (shared.empty()) {
            fallback = true;
            break;
        }
        plan.link_channel[edge_key(a, b)] =
            shared[static_cast<std::size_t>(rank[a] + rank[b]) % shared.size()];
    }

    if (fallback) {
        plan.common_fallback = true;
        plan.link_channel.clear();
        for (const auto& e : edges) plan.link_channel[e] = 1;
        for (NodeId v = 0; v < n; ++v) plan.interfaces[v] = {1};
    }
    return plan;
}

std::optional<std::vector<NodeId>> shortest_path(const Topology& topo, NodeId src, NodeId dst,
                                                 const std::map<std::pair<NodeId, NodeId>, ChannelId>* usable) {
    const int n = topo.node_count();
    std::vector<NodeId> parent(n, -1);
    std::vector<char> seen(n, 0);
    std::queue<NodeId> frontier;
    seen[src] = 1;
    frontier.push(src);
    while (!frontier.empty() && !seen[dst]) {
        const NodeId cur = frontier.front();
        frontier.pop();
        for (NodeId next : topo.neighbors(cur)) {
            if (seen[next]) continue;
            if (usable && !usable->count(edge_key(cur, next))) continue;
            seen[next] = 1;
            parent[next] = cur;
            frontier.push(next);
        }
    }
    if (!seen[dst]) return std::nullopt;
    std::vector<NodeId> path;
    for (NodeId cur = dst; cur != -1; cur = parent[cur]) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
}

std::optional<EstablishedRoute> static_route(const StaticAssignment& assignment,
                                             const Topology& topo, NodeId src, NodeId dst) {
    if (src == dst) throw std::invalid_argument("source and destination must differ");
    const auto path = shortest_path(topo, src, dst, &assignment.link_channel);
    if (!path) return std::nullopt;
    EstablishedRoute route;
    route.path = *path;
    for (std::size_t i = 0; i + 1 < path->size(); ++i)
        route.channels.push_back(*assignment.channel_for_link((*path)[i], (*path)[i + 1]));
    return route;
}

std::optional<EstablishedRoute> single_radio_route(const Topology& topo, NodeId src, NodeId dst) {
    if (src == dst) throw std::invalid_argument("source and destination must differ");
    const auto path = shortest_path(topo, src, dst, nullptr);
    if (!path) return std::nullopt;
    EstablishedRoute route;
    route.path = *path;
    route.channels.assign(path->size() - 1, 1);
    return route;
}

} // namespace rcasim
