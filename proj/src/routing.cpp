#include "rcasim/routing.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace rcasim {

namespace {

// Release one hop's channel at both endpoints, collecting full frees. Hops
// whose claims are already gone are skipped, which makes teardown idempotent.
void release_hop(std::vector<ChannelInfo>& states, NodeId a, NodeId b, ChannelId ch,
                 ReleaseOutcome& out) {
    bool any_removed = false;
    for (NodeId n : {a, b}) {
        const auto res = states[n].release(ch, OccupancyReason::SelfTx);
        if (res.removed && res.freed) out.freed.push_back({n, ch});
        any_removed = any_removed || res.removed;
    }
    if (any_removed) out.hops.push_back({a, b, ch});
}

} // namespace

Discovery::Discovery(const Topology& topo, int flow_id, int request_id, NodeId src, NodeId dst,
                     std::set<NodeId> excluded, ProtocolConfig cfg)
    : topo_(topo),
      flow_id_(flow_id),
      request_id_(request_id),
      src_(src),
      dst_(dst),
      excluded_(std::move(excluded)),
      cfg_(cfg) {
    if (src_ == dst_) throw std::invalid_argument("source and destination must differ");
    topo_.neighbors(src_); // validates ids
    topo_.neighbors(dst_);
    path_.push_back(src_);
    if (excluded_.count(src_) || excluded_.count(dst_) || hops_to_destination()[src_] < 0)
        status_ = DiscoveryStatus::NoPath;
}

// BFS hop counts toward the destination over the nodes this discovery may still
// use. -1 marks unreachable. The current path interior is off limits (no
// repeated hops); the frontier itself is allowed.
std::vector<int> Discovery::hops_to_destination() const {
    const int n = topo_.node_count();
    std::vector<char> allowed(n, 1);
    for (NodeId x : excluded_) allowed[x] = 0;
    for (NodeId x : failed_) allowed[x] = 0;
    for (NodeId x : path_) allowed[x] = 0;
    if (!path_.empty()) allowed[path_.back()] = 1;
    allowed[dst_] = 1;
    std::vector<int> dist(n, -1);
    if (!allowed[dst_]) return dist;
    std::queue<NodeId> frontier;
    dist[dst_] = 0;
    frontier.push(dst_);
    while (!frontier.empty()) {
        const NodeId cur = frontier.front();
        frontier.pop();
        for (NodeId next : topo_.neighbors(cur)) {
            if (allowed[next] && dist[next] < 0) {
                dist[next] = dist[cur] + 1;
                frontier.push(next);
            }
        }
    }
    return dist;
}

std::optional<NodeId> Discovery::next_candidate(double /*now*/) const {
    const auto dist = hops_to_destination();
    const NodeId u = path_.back();
    std::optional<NodeId> best;
    int best_dist = std::numeric_limits<int>::max();
    for (NodeId v : topo_.neighbors(u)) {
        if (excluded_.count(v) || failed_.count(v)) continue;
        if (std::find(path_.begin(), path_.end(), v) != path_.end()) continue;
        if (dist[v] < 0) continue;
        if (dist[v] < best_dist) {
            best_dist = dist[v];
            best = v;
        }
    }
    return best;
}

AdvanceResult Discovery::advance(std::vector<ChannelInfo>& states, double now, double flow_completion,
                                 std::optional<ChannelId> preferred) {
    AdvanceResult out;
    if (status_ == DiscoveryStatus::WaitingRemote || status_ == DiscoveryStatus::WaitingLocal) {
        // resumed by the caller
        status_ = DiscoveryStatus::Probing;
        waiting_on_.reset();
    }
    if (status_ != DiscoveryStatus::Probing) {
        out.status = status_;
        return out;
    }

    while (true) {
        const NodeId u = path_.back();
        const auto v = next_candidate(now);
        if (!v) {
            if (u == src_) {
                status_ = DiscoveryStatus::NoChannel;
                out.status = status_;
                return out;
            }
            // Dead end: give the hop back and retreat to the previous node.
            const NodeId prev = path_[path_.size() - 2];
            release_hop(states, prev, u, channels_.back(), out.released);
            failed_.insert(u);
            path_.pop_back();
            channels_.pop_back();
            out.backtracked = true;
            continue;
        }

        out.from = u;
        out.to = *v;
        StepResult step = step_distribution(topo_, u, *v, states[u], states[*v], now,
                                            flow_completion, cfg_, preferred);
        out.attempts = std::move(step.attempts);
        out.broadcasts = std::move(step.broadcasts);
        if (!out.attempts.empty()) {
            Response resp;
            resp.kind = out.attempts.back().second;
            if (resp.kind == ResponseKind::Available) resp.granted_channel = step.channel;
            last_response_ = resp;
        }
        switch (step.outcome) {
        case StepOutcome::Proceed:
            path_.push_back(*v);
            channels_.push_back(*step.channel);
            out.channel = step.channel;
            if (*v == dst_) status_ = DiscoveryStatus::Established;
            out.status = status_;
            return out;
        case StepOutcome::Reroute:
            failed_.insert(*v);
            out.status = status_; // keep probing; next advance tries another node
            return out;
        case StepOutcome::Waiting:
            waiting_on_ = step.waiting_on;
            status_ = waiting_on_ ? DiscoveryStatus::WaitingRemote : DiscoveryStatus::WaitingLocal;
            out.status = status_;
            return out;
        }
    }
}

bool Discovery::matches_notify(NodeId recipient, const WaitNotify& notify) const {
    return status_ == DiscoveryStatus::WaitingRemote && frontier() == recipient &&
           waiting_on_ == notify.holder;
}

AdvanceResult Discovery::resume(std::vector<ChannelInfo>& states, NodeId recipient,
                                const WaitNotify& notify, double now, double flow_completion) {
    if (!matches_notify(recipient, notify)) {
        AdvanceResult out;
        out.status = status_;
        return out;
    }
    return advance(states, now, flow_completion, notify.freed_channel);
}

ReleaseOutcome Discovery::abort(std::vector<ChannelInfo>& states, double /*now*/) {
    ReleaseOutcome out;
    if (status_ == DiscoveryStatus::WaitingRemote && waiting_on_)
        states[*waiting_on_].remove_waiter(frontier());
    for (std::size_t i = channels_.size(); i-- > 0;)
        release_hop(states, path_[i], path_[i + 1], channels_[i], out);
    path_.resize(1);
    channels_.clear();
    waiting_on_.reset();
    status_ = DiscoveryStatus::NoChannel;
    return out;
}

RouteRequest Discovery::request_snapshot() const {
    RouteRequest req;
    req.origin = src_;
    req.destination = dst_;
    req.request_id = request_id_;
    req.hop_list = path_;
    req.response_info = last_response_;
    req.excluded = excluded_;
    for (NodeId f : failed_) req.excluded.insert(f);
    return req;
}

EstablishedRoute Discovery::route(double now) const {
    if (status_ != DiscoveryStatus::Established)
        throw std::logic_error("route() called before the discovery established one");
    return EstablishedRoute{flow_id_, path_, channels_, now};
}

RouteReply Discovery::reply(double flow_completion) const {
    RouteReply rep;
    rep.destination = dst_;
    rep.path = path_;
    rep.channels = channels_;
    rep.expected_channel = channels_.empty() ? 0 : channels_.front();
    rep.expected_completion = flow_completion;
    return rep;
}

void apply_broadcasts(const Topology& topo, std::vector<ChannelInfo>& states,
                      const std::vector<ChannelBroadcast>& broadcasts, double now) {
    for (const auto& msg : broadcasts)
        for (NodeId n : topo.neighbors(msg.sender)) apply_broadcast(states[n], msg, now);
}

DiscoveryOutcome discover_route(const Topology& topo, std::vector<ChannelInfo>& states, int flow_id,
                                NodeId src, NodeId dst, const std::set<NodeId>& excluded, double now,
                                double flow_completion, const ProtocolConfig& cfg) {
    DiscoveryOutcome outcome;
    auto disc = std::make_unique<Discovery>(topo, flow_id, 0, src, dst, excluded, cfg);
    while (disc->status() == DiscoveryStatus::Probing) {
        const auto step = disc->advance(states, now, flow_completion);
        apply_broadcasts(topo, states, step.broadcasts, now);
    }
    outcome.status = disc->status();
    if (outcome.status == DiscoveryStatus::Established)
        outcome.route = disc->route(now);
    else if (outcome.status == DiscoveryStatus::WaitingRemote ||
             outcome.status == DiscoveryStatus::WaitingLocal)
        outcome.pending = std::move(disc);
    return outcome;
}

ReleaseOutcome teardown(const EstablishedRoute& route, std::vector<ChannelInfo>& states,
                        double /*now*/) {
    ReleaseOutcome out;
    for (std::size_t i = 0; i < route.channels.size(); ++i)
        release_hop(states, route.path[i], route.path[i + 1], route.channels[i], out);
    return out;
}

} // namespace rcasim
