#ifndef RCASIM_TOPOLOGY_HPP
#define RCASIM_TOPOLOGY_HPP

#include <cstdint>
#include <optional>
#include <vector>

namespace rcasim {

using NodeId = int;
using ChannelId = int; // valid channels are 1..C

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// How two same-channel links conflict. Trca blocks a link whenever any endpoint
// of one is within reception range of any endpoint of the other; ReceiverOnly
// only protects receivers from the other link's transmitter.
enum class InterferenceModel { Trca, ReceiverOnly };

// Static network model: node placement, radio/channel inventory, link existence
// and the interference predicate. Immutable after construction; all queries are
// pure and safe to share across threads.
class Topology {
public:
    Topology(std::vector<Point> positions, int interfaces_per_node, int channel_count,
             double reception_range, InterferenceModel model = InterferenceModel::Trca);

    int node_count() const { return static_cast<int>(positions_.size()); }
    int interfaces_per_node() const { return interfaces_; }
    int channel_count() const { return channels_; }
    double reception_range() const { return range_; }
    InterferenceModel interference_model() const { return model_; }
    const Point& position(NodeId n) const;

    double distance(NodeId a, NodeId b) const;
    bool in_range(NodeId a, NodeId b) const; // distance <= range, a != b

    // Nodes within reception range, excluding the node itself. Sorted ascending.
    const std::vector<NodeId>& neighbors(NodeId n) const;

    // A usable link needs both range and a common channel.
    bool link_exists(NodeId a, NodeId b, std::optional<ChannelId> shared_channel) const;

    // Whether transmissions (tx1 -> rx1 on ch1) and (tx2 -> rx2 on ch2) conflict.
    // Orthogonal channels never interfere.
    bool interferes(NodeId tx1, NodeId rx1, ChannelId ch1,
                    NodeId tx2, NodeId rx2, ChannelId ch2) const;

    bool is_connected() const;

private:
    void check_node(NodeId n) const;

    std::vector<Point> positions_;
    int interfaces_;
    int channels_;
    double range_;
    InterferenceModel model_;
    std::vector<std::vector<NodeId>> adjacency_;
};

// Seeded uniform placement inside [0,area_x]x[0,area_y], resampled until the
// neighbor graph is connected. Throws after max_attempts failures.
Topology make_random_topology(int nodes, double area_x, double area_y, double range,
                              int interfaces, int channels, std::uint64_t seed,
                              InterferenceModel model = InterferenceModel::Trca,
                              int max_attempts = 1000);

// Square-ish grid placement with spacing <= 0.9 * range, clipped to the area.
Topology make_grid_topology(int nodes, double area_x, double area_y, double range,
                            int interfaces, int channels,
                            InterferenceModel model = InterferenceModel::Trca);

} // namespace rcasim

#endif
