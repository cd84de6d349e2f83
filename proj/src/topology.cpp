#include "rcasim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

#include "rcasim/rng.hpp"

namespace rcasim {

Topology::Topology(std::vector<Point> positions, int interfaces_per_node, int channel_count,
                   double reception_range, InterferenceModel model)
    : positions_(std::move(positions)),
      interfaces_(interfaces_per_node),
      channels_(channel_count),
      range_(reception_range),
      model_(model) {
    if (positions_.empty())
        throw std::invalid_argument("topology needs at least one node");
    if (interfaces_ < 1)
        throw std::invalid_argument("interfaces per node must be >= 1");
    if (channels_ <= 1)
        throw std::invalid_argument("channel count must be > 1");
    if (channels_ < interfaces_)
        throw std::invalid_argument("channel count must be >= interfaces per node");
    if (range_ <= 0.0)
        throw std::invalid_argument("reception range must be positive");

    const int n = node_count();
    adjacency_.resize(n);
    for (NodeId a = 0; a < n; ++a) {
        for (NodeId b = a + 1; b < n; ++b) {
            if (distance(a, b) <= range_) {
                adjacency_[a].push_back(b);
                adjacency_[b].push_back(a);
            }
        }
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

void Topology::check_node(NodeId n) const {
    if (n < 0 || n >= node_count())
        throw std::invalid_argument("unknown node id " + std::to_string(n));
}

const Point& Topology::position(NodeId n) const {
    check_node(n);
    return positions_[n];
}

double Topology::distance(NodeId a, NodeId b) const {
    check_node(a);
    check_node(b);
    const double dx = positions_[a].x - positions_[b].x;
    const double dy = positions_[a].y - positions_[b].y;
    return std::sqrt(dx * dx + dy * dy);
}

bool Topology::in_range(NodeId a, NodeId b) const {
    return a != b && distance(a, b) <= range_;
}

const std::vector<NodeId>& Topology::neighbors(NodeId n) const {
    check_node(n);
    return adjacency_[n];
}

bool Topology::link_exists(NodeId a, NodeId b, std::optional<ChannelId> shared_channel) const {
    check_node(a);
    check_node(b);
    if (a == b) throw std::invalid_argument("link endpoints must differ");
    return shared_channel.has_value() && in_range(a, b);
}

bool Topology::interferes(NodeId tx1, NodeId rx1, ChannelId ch1,
                          NodeId tx2, NodeId rx2, ChannelId ch2) const {
    check_node(tx1);
    check_node(rx1);
    check_node(tx2);
    check_node(rx2);
    if (ch1 != ch2) return false; // orthogonal channels
    if (model_ == InterferenceModel::ReceiverOnly) {
        return distance(rx1, tx2) <= range_ || distance(rx2, tx1) <= range_ ||
               rx1 == tx2 || rx2 == tx1 || rx1 == rx2 || tx1 == tx2;
    }
    // Trca: any endpoint of one link inside the reception range of any endpoint
    // of the other blocks both.
    const NodeId first[2] = {tx1, rx1};
    const NodeId second[2] = {tx2, rx2};
    for (NodeId a : first)
        for (NodeId b : second)
            if (a == b || distance(a, b) <= range_) return true;
    return false;
}

bool Topology::is_connected() const {
    const int n = node_count();
    std::vector<char> seen(n, 0);
    std::queue<NodeId> frontier;
    frontier.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        const NodeId cur = frontier.front();
        frontier.pop();
        for (NodeId next : adjacency_[cur]) {
            if (!seen[next]) {
                seen[next] = 1;
                ++reached;
                frontier.push(next);
            }
        }
    }
    return reached == n;
}

Topology make_random_topology(int nodes, double area_x, double area_y, double range,
                              int interfaces, int channels, std::uint64_t seed,
                              InterferenceModel model, int max_attempts) {
    if (nodes < 1) throw std::invalid_argument("node count must be >= 1");
    Rng rng(seed);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<Point> pts(nodes);
        for (auto& p : pts) {
            p.x = rng.uniform(0.0, area_x);
            p.y = rng.uniform(0.0, area_y);
        }
        Topology topo(std::move(pts), interfaces, channels, range, model);
        if (topo.is_connected()) return topo;
    }
    throw std::runtime_error("could not place a connected topology; increase range or density");
}

Topology make_grid_topology(int nodes, double area_x, double area_y, double range,
                            int interfaces, int channels, InterferenceModel model) {
    if (nodes < 1) throw std::invalid_argument("node count must be >= 1");
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(nodes))));
    const int rows = (nodes + cols - 1) / cols;
    double spacing = 0.9 * range;
    if (cols > 1) spacing = std::min(spacing, area_x / (cols - 1));
    if (rows > 1) spacing = std::min(spacing, area_y / (rows - 1));
    std::vector<Point> pts(nodes);
    for (int i = 0; i < nodes; ++i) {
        pts[i].x = (i % cols) * spacing;
        pts[i].y = (i / cols) * spacing;
    }
    return Topology(std::move(pts), interfaces, channels, range, model);
}

} // namespace rcasim
