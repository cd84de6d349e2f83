#include "rcasim/chanstate.hpp"

#include <algorithm>
#include <stdexcept>

namespace rcasim {

ChannelInfo::ChannelInfo(int waiter_capacity) : waiter_capacity_(waiter_capacity) {
    if (waiter_capacity_ < 1) throw std::invalid_argument("waiter queue capacity must be >= 1");
}

bool ChannelInfo::is_available(ChannelId ch, double now) const {
    for (const auto& e : entries_)
        if (e.channel == ch && e.busy_until > now) return false;
    return true;
}

std::vector<ChannelId> ChannelInfo::available_channels(double now, int channel_count) const {
    std::vector<ChannelId> out;
    for (ChannelId ch = 1; ch <= channel_count; ++ch)
        if (is_available(ch, now)) out.push_back(ch);
    return out;
}

void ChannelInfo::occupy(ChannelId ch, OccupancyReason reason, double busy_until, NodeId source) {
    if (ch < 1) throw std::invalid_argument("channel ids start at 1");
    if (reason == OccupancyReason::SelfTx) source = -1;
    for (auto& e : entries_) {
        if (e.channel == ch && e.reason == reason && e.source == source) {
            e.busy_until = std::max(e.busy_until, busy_until);
            return;
        }
    }
    entries_.push_back({ch, reason, busy_until, source});
}

ChannelInfo::ReleaseResult ChannelInfo::release(ChannelId ch, OccupancyReason reason, NodeId source) {
    ReleaseResult result;
    if (reason == OccupancyReason::SelfTx) source = -1;
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (it->channel != ch || it->reason != reason) continue;
        // source -1 on a neighbor release matches the first announcing source
        if (reason == OccupancyReason::NeighborBlock && source != -1 && it->source != source)
            continue;
        entries_.erase(it);
        result.removed = true;
        break;
    }
    result.freed = true;
    for (const auto& e : entries_)
        if (e.channel == ch) result.freed = false;
    return result;
}

bool ChannelInfo::prune(double now) {
    const auto before = entries_.size();
    std::erase_if(entries_, [now](const OccupancyEntry& e) { return e.busy_until <= now; });
    return entries_.size() != before;
}

int ChannelInfo::interfaces_in_use(double now) const {
    int used = 0;
    for (const auto& e : entries_)
        if (e.reason == OccupancyReason::SelfTx && e.busy_until > now) ++used;
    return used;
}

double ChannelInfo::channel_clear_time(ChannelId ch, double now) const {
    double clear = now;
    for (const auto& e : entries_)
        if (e.channel == ch && e.busy_until > clear) clear = e.busy_until;
    return clear;
}

double ChannelInfo::earliest_clear_time(double now, int channel_count) const {
    double earliest = kNeverExpires;
    for (ChannelId ch = 1; ch <= channel_count; ++ch)
        earliest = std::min(earliest, channel_clear_time(ch, now));
    return earliest;
}

double ChannelInfo::completion_horizon(double now, int channel_count) const {
    return std::max(completion_, earliest_clear_time(now, channel_count));
}

void ChannelInfo::raise_completion(double t) { completion_ = std::max(completion_, t); }

void ChannelInfo::add_wait_burden(NodeId waiter, double t) {
    completion_ += t;
    waiter_burden_[waiter] = t;
}

void ChannelInfo::reset_completion() {
    completion_ = 0.0;
    waiter_burden_.clear();
}

bool ChannelInfo::enqueue_waiter(NodeId node) {
    if (static_cast<int>(waiters_.size()) >= waiter_capacity_) return false;
    if (std::find(waiters_.begin(), waiters_.end(), node) != waiters_.end()) return false;
    waiters_.push_back(node);
    return true;
}

void ChannelInfo::settle_burden(NodeId node) {
    const auto it = waiter_burden_.find(node);
    if (it == waiter_burden_.end()) return;
    completion_ = std::max(0.0, completion_ - it->second);
    waiter_burden_.erase(it);
}

std::optional<NodeId> ChannelInfo::dequeue_waiter() {
    if (waiters_.empty()) return std::nullopt;
    const NodeId head = waiters_.front();
    waiters_.pop_front();
    settle_burden(head);
    return head;
}

bool ChannelInfo::remove_waiter(NodeId node) {
    const auto it = std::find(waiters_.begin(), waiters_.end(), node);
    if (it == waiters_.end()) return false;
    waiters_.erase(it);
    settle_burden(node);
    return true;
}

double estimate_completion_time(long remaining_packets, int /*packet_size_bytes*/,
                                double rate_pps, double now) {
    if (rate_pps <= 0.0) throw std::invalid_argument("packet rate must be positive");
    if (remaining_packets < 0) throw std::invalid_argument("remaining packet count must be >= 0");
    return now + static_cast<double>(remaining_packets) / rate_pps;
}

} // namespace rcasim
