#ifndef RCASIM_CHANSTATE_HPP
#define RCASIM_CHANSTATE_HPP

#include <deque>
#include <map>
#include <limits>
#include <optional>
#include <vector>

#include "rcasim/topology.hpp"

namespace rcasim {

// Why a node treats a channel as occupied. SelfTx entries are created by the
// node's own grants and are released explicitly when the communication ends;
// NeighborBlock entries come from overheard occupancy broadcasts and simply
// expire at the announced completion time.
enum class OccupancyReason { SelfTx, NeighborBlock };

struct OccupancyEntry {
    ChannelId channel = 0;
    OccupancyReason reason = OccupancyReason::SelfTx;
    double busy_until = 0.0;
    NodeId source = -1; // announcing neighbor for NeighborBlock entries
};

inline constexpr double kNeverExpires = std::numeric_limits<double>::infinity();

// Per-node channel bookkeeping: the channel the node expects to use next, the
// set of channels it currently treats as occupied (with per-entry expiry), its
// expected-completion horizon, and the FIFO queue of nodes waiting for one of
// its channels to free up. Owned and mutated by a single event loop.
class ChannelInfo {
public:
    explicit ChannelInfo(int waiter_capacity = 10);

    // --- occupied-channel table -------------------------------------------
    bool is_available(ChannelId ch, double now) const;
    // Unoccupied channels in ascending order.
    std::vector<ChannelId> available_channels(double now, int channel_count) const;
    // Add or extend an entry. Re-occupying the same (channel, reason, source)
    // keeps the later of the two expiries. Blocks learned from different
    // neighbors stay separate so one neighbor's release cannot clear another's.
    void occupy(ChannelId ch, OccupancyReason reason, double busy_until, NodeId source = -1);

    struct ReleaseResult {
        bool removed = false; // a matching entry existed and was dropped
        bool freed = false;   // the channel is unoccupied afterwards
    };
    ReleaseResult release(ChannelId ch, OccupancyReason reason, NodeId source = -1);

    // Drop entries whose expiry has passed; returns true if any were dropped.
    bool prune(double now);

    // Number of channels the node itself is transmitting/receiving on, i.e.
    // radio interfaces in use.
    int interfaces_in_use(double now) const;

    // When the given channel stops being occupied (now if already free).
    double channel_clear_time(ChannelId ch, double now) const;
    // Earliest instant at which some channel in 1..C is free.
    double earliest_clear_time(double now, int channel_count) const;

    const std::vector<OccupancyEntry>& entries() const { return entries_; }

    // --- expected completion horizon --------------------------------------
    // The comparison value for wait-vs-reroute decisions: the accumulated
    // completion estimate, floored by when a channel actually clears. Queued
    // waiters push the horizon out; their share is taken back when they are
    // served or give up, so stale waits cannot inflate the horizon forever.
    double completion_horizon(double now, int channel_count) const;
    void raise_completion(double t);               // max-merge (new grant)
    void add_wait_burden(NodeId waiter, double t); // accumulate a queued waiter's estimate
    void set_completion(double t) { completion_ = t; }
    double completion_accumulator() const { return completion_; }
    void reset_completion();

    // --- expected channel ---------------------------------------------------
    std::optional<ChannelId> expected_channel;

    // --- waiting-node queue -------------------------------------------------
    // Append if there is room and the node is not already queued.
    bool enqueue_waiter(NodeId node);
    std::optional<NodeId> dequeue_waiter();
    bool remove_waiter(NodeId node);
    const std::deque<NodeId>& waiters() const { return waiters_; }
    int waiter_capacity() const { return waiter_capacity_; }

private:
    void settle_burden(NodeId node);

    std::vector<OccupancyEntry> entries_;
    std::deque<NodeId> waiters_;
    std::map<NodeId, double> waiter_burden_;
    int waiter_capacity_;
    double completion_ = 0.0;
};

// Expected completion time of a transmission with `remaining_packets` still to
// send at `rate_pps` packets per second. Per-packet airtime is folded into the
// inter-packet interval, so the packet size does not shift the estimate.
double estimate_completion_time(long remaining_packets, int packet_size_bytes,
                                double rate_pps, double now);

} // namespace rcasim

#endif
