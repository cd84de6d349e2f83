#include "rcasim/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <tuple>
#include <variant>

namespace rcasim {

const char* algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::Rca: return "rca";
    case Algorithm::Static: return "static";
    case Algorithm::Single: return "single";
    }
    return "?";
}

Metrics collect_metrics(const std::vector<FlowMetrics>& per_flow) {
    Metrics m;
    m.per_flow = per_flow;
    for (const auto& f : per_flow) {
        m.sent += f.sent;
        m.delivered += f.delivered;
        m.collided += f.collided;
        m.dropped += f.dropped;
        m.mean_delivery_rate += f.delivery_rate;
        m.mean_throughput_kbps += f.throughput_kbps;
    }
    if (!per_flow.empty()) {
        m.mean_delivery_rate /= static_cast<double>(per_flow.size());
        m.mean_throughput_kbps /= static_cast<double>(per_flow.size());
    }
    return m;
}

std::string metrics_to_string(const Metrics& m) {
    std::string out;
    char buf[160];
    for (const auto& f : m.per_flow) {
        std::snprintf(buf, sizeof(buf), "flow %d sent=%ld delivered=%ld collided=%ld dropped=%ld rate=%.6f tput=%.3f\n",
                      f.flow, f.sent, f.delivered, f.collided, f.dropped, f.delivery_rate,
                      f.throughput_kbps);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "total sent=%ld delivered=%ld collided=%ld dropped=%ld mean_rate=%.6f mean_tput=%.3f\n",
                  m.sent, m.delivered, m.collided, m.dropped, m.mean_delivery_rate,
                  m.mean_throughput_kbps);
    out += buf;
    return out;
}

uint64_t metrics_hash(const Metrics& m) { return fnv1a64(metrics_to_string(m)); }

std::vector<TxOutcome> resolve_transmissions(const std::vector<TransmissionSpan>& spans,
                                             const Topology& topo) {
    std::vector<TxOutcome> out(spans.size(), TxOutcome::Delivered);
    for (std::size_t i = 0; i < spans.size(); ++i) {
        for (std::size_t j = i + 1; j < spans.size(); ++j) {
            const auto& a = spans[i];
            const auto& b = spans[j];
            const bool overlap =
                a.start < b.start + b.airtime && b.start < a.start + a.airtime;
            if (!overlap) continue;
            if (topo.interferes(a.tx, a.rx, a.channel, b.tx, b.rx, b.channel)) {
                out[i] = TxOutcome::Collided;
                out[j] = TxOutcome::Collided;
            }
        }
    }
    return out;
}

namespace {

// ---- events -----------------------------------------------------------------

struct EvFlowStart {
    int flow;
};
struct EvFlowStop {
    int flow;
    int burst;
};
struct EvPacketGen {
    int flow;
    long pkt;
};
struct EvPacketArrive {
    int txn;
};
struct EvChannelExpire {
    NodeId node;
};
struct EvNotify {
    NodeId to;
    WaitNotify notify;
};
struct EvDiscoveryTimeout {
    int flow;
    int generation;
};
struct EvDiscoveryStep {
    int flow;
    int generation;
    std::optional<ChannelId> preferred;
};
struct EvRetry {
    int flow;
};

using Payload = std::variant<EvFlowStart, EvFlowStop, EvPacketGen, EvPacketArrive, EvChannelExpire,
                             EvNotify, EvDiscoveryTimeout, EvDiscoveryStep, EvRetry>;

struct Event {
    double time;
    std::uint64_t seq;
    Payload payload;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

struct QueuedPacket {
    int flow;
    long pkt;
    int hop;
    int route_gen;
};

struct Iface {
    std::deque<QueuedPacket> queue;
    bool busy = false;     // currently transmitting
    bool deferred = false; // parked in the carrier-sense wait list
};

struct Txn {
    NodeId tx = -1, rx = -1;
    ChannelId channel = 0;
    double start = 0, end = 0;
    int flow = -1;
    long pkt = 0;
    int hop = 0;
    int route_gen = 0;
    bool control = false;
    bool collided = false;
};

struct FlowRt {
    Flow def;
    bool in_burst = false;
    int burst_index = -1;
    double burst_start = 0, burst_end = 0;
    long next_pkt = 0;
    long burst_pkt0 = 0; // first packet id of the current burst
    std::optional<EstablishedRoute> route;
    int route_gen = 0;
    std::unique_ptr<Discovery> discovery;
    int disc_gen = 0;
    double next_retry = 0;
    std::set<NodeId> retry_excluded; // route around these on the next attempt
    std::deque<long> pending;
    long sent = 0, delivered = 0, collided = 0, dropped = 0;
};

std::string arrow(NodeId a, NodeId b) { return std::to_string(a) + ">" + std::to_string(b); }

// Deterministic per-flow, per-burst jitter in [0,1). Keeps flow burst cycles
// from locking into one global period without drawing from the run RNG.
double burst_jitter(int flow, int burst) {
    std::uint64_t x = (static_cast<std::uint64_t>(flow) << 32) ^ static_cast<std::uint64_t>(burst) ^
                      0x9e3779b97f4a7c15ULL;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

const char* response_token(ResponseKind k) {
    switch (k) {
    case ResponseKind::Available: return "available";
    case ResponseKind::RouteElsewhere: return "route_elsewhere";
    case ResponseKind::Wait: return "wait";
    }
    return "?";
}

} // namespace

// ---- engine -------------------------------------------------------------------

struct Simulation::Impl {
    Topology topo;
    SimConfig cfg;
    TraceLog* trace;
    std::optional<StaticAssignment> plan;

    std::vector<ChannelInfo> states;
    std::vector<FlowRt> flows;
    std::vector<Iface> ifaces; // indexed node * C + (channel - 1)
    std::vector<Txn> txns;
    std::vector<int> active; // in-flight transmission indices
    std::map<ChannelId, std::deque<NodeId>> deferred; // carrier-sense wait lists
    std::map<NodeId, std::set<int>> local_waiters;
    std::map<int, EstablishedRoute> active_routes; // rca validator registry
    std::vector<int> next_request_id;

    std::priority_queue<Event, std::vector<Event>, EventAfter> queue;
    std::uint64_t next_seq = 0;
    double clock = 0;
    long total_collisions = 0;
    bool ran = false;

    Impl(Topology t, SimConfig c, std::vector<Flow> fl, TraceLog* tr)
        : topo(std::move(t)), cfg(c), trace(tr) {
        states.assign(topo.node_count(), ChannelInfo(cfg.waiter_queue_cap));
        ifaces.resize(static_cast<std::size_t>(topo.node_count()) * topo.channel_count());
        next_request_id.assign(topo.node_count(), 0);
        for (auto& f : fl) {
            if (f.src == f.dst || f.rate_pps <= 0 || f.start >= f.stop)
                throw std::invalid_argument("invalid flow definition");
            if (f.id != static_cast<int>(flows.size()))
                throw std::invalid_argument("flow ids must be dense and start at 0");
            FlowRt rt;
            rt.def = f;
            flows.push_back(std::move(rt));
        }
        if (cfg.algorithm == Algorithm::Static)
            plan = static_assign(topo, topo.channel_count(), topo.interfaces_per_node(),
                                 cfg.static_seed);
        if (trace && trace->enabled())
            trace->header(topo, cfg.waiter_queue_cap, algorithm_name(cfg.algorithm));
    }

    // -- helpers ------------------------------------------------------------

    double airtime(int bytes) const { return bytes * 8.0 / (cfg.link_rate_mbps * 1e6); }
    double control_latency() const { return airtime(512); }

    void log(const char* kind, const std::string& nodes, int channel, int flow,
             const std::string& outcome) {
        if (trace) trace->record(clock, kind, nodes, channel, flow, outcome);
    }

    void schedule(double t, Payload p) {
        if (t < clock - 1e-9)
            throw SimInvariantViolation("event scheduled in the past");
        queue.push(Event{std::max(t, clock), next_seq++, std::move(p)});
    }

    Iface& iface(NodeId n, ChannelId ch) {
        return ifaces[static_cast<std::size_t>(n) * topo.channel_count() + (ch - 1)];
    }

    double flow_completion(const FlowRt& f) const {
        const double horizon = std::max(0.0, f.burst_end - clock);
        const long to_generate =
            std::max(0L, static_cast<long>(std::ceil(horizon * f.def.rate_pps - 1e-9)));
        const long remaining = static_cast<long>(f.pending.size()) + to_generate;
        return estimate_completion_time(remaining, f.def.packet_size, f.def.rate_pps, clock);
    }

    // -- run loop -------------------------------------------------------------

    Metrics run() {
        if (ran) throw std::logic_error("Simulation::run() may only be called once");
        ran = true;
        for (const auto& f : flows) schedule(f.def.start, EvFlowStart{f.def.id});
        while (!queue.empty()) {
            const Event ev = queue.top();
            queue.pop();
            clock = ev.time;
            std::visit([this](const auto& e) { handle(e); }, ev.payload);
        }
        std::vector<FlowMetrics> per_flow;
        for (const auto& f : flows) {
            FlowMetrics fm;
            fm.flow = f.def.id;
            fm.sent = f.sent;
            fm.delivered = f.delivered;
            fm.collided = f.collided;
            fm.dropped = f.dropped;
            fm.delivery_rate = f.sent ? static_cast<double>(f.delivered) / f.sent : 0.0;
            fm.throughput_kbps =
                f.delivered * f.def.packet_size * 8.0 / (f.def.stop - f.def.start) / 1000.0;
            per_flow.push_back(fm);
        }
        return collect_metrics(per_flow);
    }

    // -- flow lifecycle -------------------------------------------------------

    void handle(const EvFlowStart& e) {
        FlowRt& f = flows[e.flow];
        if (clock >= f.def.stop) return;
        f.in_burst = true;
        ++f.burst_index;
        f.burst_start = clock;
        f.burst_pkt0 = f.next_pkt;
        const double burst_len = cfg.burst_off <= 0 ? f.def.stop - clock : cfg.burst_on;
        f.burst_end = std::min(clock + burst_len, f.def.stop);
        log("flow_start", arrow(f.def.src, f.def.dst), 0, f.def.id,
            "burst=" + std::to_string(f.burst_index));
        schedule(f.burst_end, EvFlowStop{e.flow, f.burst_index});
        schedule(clock, EvPacketGen{e.flow, f.next_pkt});
        start_discovery(f);
    }

    void handle(const EvFlowStop& e) {
        FlowRt& f = flows[e.flow];
        if (e.burst != f.burst_index) return;
        f.in_burst = false;
        for (long pkt : f.pending) {
            (void)pkt;
            ++f.dropped;
            log("drop", std::to_string(f.def.src), 0, f.def.id, "pending");
        }
        f.pending.clear();
        end_route(f);
        abort_discovery(f, false);
        log("flow_stop", arrow(f.def.src, f.def.dst), 0, f.def.id,
            "burst=" + std::to_string(f.burst_index));
        if (cfg.burst_off > 0) {
            const double gap =
                cfg.burst_off * (0.6 + 0.8 * burst_jitter(f.def.id, f.burst_index));
            if (f.burst_end + gap < f.def.stop)
                schedule(f.burst_end + gap, EvFlowStart{e.flow});
        }
    }

    void end_route(FlowRt& f) {
        if (!f.route) return;
        // flush this flow's packets still queued along the path
        for (std::size_t i = 0; i < f.route->channels.size(); ++i) {
            auto& ifc = iface(f.route->path[i], f.route->channels[i]);
            const auto before = ifc.queue.size();
            std::erase_if(ifc.queue,
                          [&](const QueuedPacket& q) { return q.flow == f.def.id; });
            for (std::size_t k = ifc.queue.size(); k < before; ++k) {
                ++f.dropped;
                log("drop", std::to_string(f.route->path[i]), f.route->channels[i], f.def.id,
                    "teardown");
            }
        }
        if (cfg.algorithm == Algorithm::Rca)
            announce_releases(teardown(*f.route, states, clock), f.def.id);
        active_routes.erase(f.def.id);
        f.route.reset();
        ++f.route_gen;
    }

    // -- discovery ------------------------------------------------------------

    void start_discovery(FlowRt& f) {
        if (cfg.algorithm != Algorithm::Rca) {
            auto route = cfg.algorithm == Algorithm::Static
                             ? static_route(*plan, topo, f.def.src, f.def.dst)
                             : single_radio_route(topo, f.def.src, f.def.dst);
            if (!route) {
                log("route_fail", arrow(f.def.src, f.def.dst), 0, f.def.id, "no_path");
                return;
            }
            route->flow_id = f.def.id;
            route->established_at = clock;
            f.route = std::move(route);
            log_route(f);
            flush_pending(f);
            return;
        }
        std::set<NodeId> excluded = std::move(f.retry_excluded);
        f.retry_excluded.clear();
        excluded.erase(f.def.src);
        excluded.erase(f.def.dst);
        f.discovery = std::make_unique<Discovery>(topo, f.def.id,
                                                  next_request_id[f.def.src]++, f.def.src,
                                                  f.def.dst, std::move(excluded), cfg.protocol);
        ++f.disc_gen;
        if (f.discovery->status() == DiscoveryStatus::NoPath) {
            log("route_fail", arrow(f.def.src, f.def.dst), 0, f.def.id, "no_path");
            f.discovery.reset();
            if (f.in_burst) schedule(clock + cfg.retry_holdoff, EvRetry{f.def.id});
            return;
        }
        schedule(clock, EvDiscoveryStep{f.def.id, f.disc_gen, std::nullopt});
    }

    void abort_discovery(FlowRt& f, bool timed_out) {
        if (!f.discovery) return;
        if (f.discovery->status() == DiscoveryStatus::WaitingLocal)
            local_waiters[f.discovery->frontier()].erase(f.def.id);
        if (timed_out) {
            const NodeId frontier = f.discovery->frontier();
            const NodeId holder = f.discovery->waiting_on().value_or(frontier);
            log("wtimeout", arrow(frontier, holder), 0, f.def.id, "removed");
        }
        const auto out = f.discovery->abort(states, clock);
        f.discovery.reset();
        ++f.disc_gen;
        announce_releases(out, f.def.id);
    }

    void handle(const EvDiscoveryStep& e) {
        FlowRt& f = flows[e.flow];
        if (!f.discovery || e.generation != f.disc_gen) return;
        const auto st = f.discovery->status();
        if (st != DiscoveryStatus::Probing && st != DiscoveryStatus::WaitingLocal) return;
        const auto res = f.discovery->advance(states, clock, flow_completion(f), e.preferred);
        process_advance(f, res);
    }

    void handle(const EvNotify& e) {
        for (auto& f : flows) {
            if (f.discovery && f.discovery->matches_notify(e.to, e.notify)) {
                ++f.disc_gen; // invalidate the pending wait timeout
                const auto res =
                    f.discovery->resume(states, e.to, e.notify, clock, flow_completion(f));
                process_advance(f, res);
                return;
            }
        }
        // stale notify: the waiting flow has moved on
    }

    void handle(const EvDiscoveryTimeout& e) {
        FlowRt& f = flows[e.flow];
        if (!f.discovery || e.generation != f.disc_gen) return;
        const auto st = f.discovery->status();
        if (st != DiscoveryStatus::WaitingRemote && st != DiscoveryStatus::WaitingLocal) return;
        // Route the next attempt around the node we gave up waiting for.
        if (st == DiscoveryStatus::WaitingRemote)
            f.retry_excluded.insert(*f.discovery->waiting_on());
        abort_discovery(f, true);
        log("route_fail", arrow(f.def.src, f.def.dst), 0, f.def.id, "no_channel");
        if (f.in_burst) schedule(clock + cfg.retry_holdoff, EvRetry{f.def.id});
    }

    void handle(const EvRetry& e) {
        FlowRt& f = flows[e.flow];
        if (!f.in_burst || f.route || f.discovery) return;
        start_discovery(f);
    }

    void process_advance(FlowRt& f, const AdvanceResult& res) {
        announce_releases(res.released, f.def.id);
        for (const auto& [ch, kind] : res.attempts) {
            log("rreq", arrow(res.from, res.to), ch, f.def.id, response_token(kind));
            if (cfg.control_overhead) {
                start_control(res.from, res.to);
                start_control(res.to, res.from);
            }
        }
        if (res.channel) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "until=%.6f", flow_completion(f));
            log("grant", arrow(res.from, res.to), *res.channel, f.def.id, buf);
        }
        deliver_broadcasts(res.broadcasts, f.def.id);

        switch (res.status) {
        case DiscoveryStatus::Probing: {
            const double latency =
                2.0 * control_latency() * std::max<std::size_t>(1, res.attempts.size());
            schedule(clock + latency, EvDiscoveryStep{f.def.id, f.disc_gen, std::nullopt});
            break;
        }
        case DiscoveryStatus::Established:
            finalize_route(f);
            break;
        case DiscoveryStatus::WaitingRemote:
            log("wait", arrow(f.discovery->frontier(), *f.discovery->waiting_on()), 0, f.def.id,
                "queued");
            schedule(clock + cfg.wait_timeout, EvDiscoveryTimeout{f.def.id, f.disc_gen});
            break;
        case DiscoveryStatus::WaitingLocal:
            log("wait", arrow(f.discovery->frontier(), f.discovery->frontier()), 0, f.def.id,
                "local");
            local_waiters[f.discovery->frontier()].insert(f.def.id);
            schedule(clock + cfg.wait_timeout, EvDiscoveryTimeout{f.def.id, f.disc_gen});
            break;
        case DiscoveryStatus::NoChannel:
            log("route_fail", arrow(f.def.src, f.def.dst), 0, f.def.id, "no_channel");
            f.discovery.reset();
            ++f.disc_gen;
            if (f.in_burst) schedule(clock + cfg.retry_holdoff, EvRetry{f.def.id});
            break;
        case DiscoveryStatus::NoPath:
            log("route_fail", arrow(f.def.src, f.def.dst), 0, f.def.id, "no_path");
            f.discovery.reset();
            ++f.disc_gen;
            break;
        }
    }

    void finalize_route(FlowRt& f) {
        f.route = f.discovery->route(clock);
        const auto rep = f.discovery->reply(flow_completion(f));
        f.discovery.reset();
        ++f.disc_gen;
        validate_route(*f.route);
        active_routes[f.def.id] = *f.route;
        for (std::size_t i = rep.channels.size(); i-- > 0;) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "t=%.6f", rep.expected_completion);
            log("rrep", arrow(rep.path[i + 1], rep.path[i]), rep.channels[i], f.def.id, buf);
        }
        log_route(f);
        flush_pending(f);
    }

    void log_route(FlowRt& f) {
        std::string desc = "path=";
        for (std::size_t i = 0; i < f.route->path.size(); ++i) {
            if (i) desc += '-';
            desc += std::to_string(f.route->path[i]);
        }
        desc += ";ch=";
        for (std::size_t i = 0; i < f.route->channels.size(); ++i) {
            if (i) desc += '-';
            desc += std::to_string(f.route->channels[i]);
        }
        log("route", arrow(f.def.src, f.def.dst), 0, f.def.id, desc);
    }

    void flush_pending(FlowRt& f) {
        while (!f.pending.empty()) {
            const long pkt = f.pending.front();
            f.pending.pop_front();
            enqueue_packet(f, pkt, 0);
        }
    }

    // The grant-time soundness check: a freshly established route may not
    // interfere with itself or with any other active reservation.
    void validate_route(const EstablishedRoute& r) {
        if (cfg.algorithm != Algorithm::Rca) return;
        const auto hops = [](const EstablishedRoute& rt) {
            std::vector<std::tuple<NodeId, NodeId, ChannelId>> out;
            for (std::size_t i = 0; i < rt.channels.size(); ++i)
                out.emplace_back(rt.path[i], rt.path[i + 1], rt.channels[i]);
            return out;
        };
        const auto mine = hops(r);
        for (std::size_t i = 0; i < mine.size(); ++i)
            for (std::size_t j = i + 1; j < mine.size(); ++j)
                if (topo.interferes(std::get<0>(mine[i]), std::get<1>(mine[i]), std::get<2>(mine[i]),
                                    std::get<0>(mine[j]), std::get<1>(mine[j]), std::get<2>(mine[j])))
                    throw SimInvariantViolation("established route interferes with itself");
        for (const auto& [id, other] : active_routes) {
            if (id == r.flow_id) continue;
            for (const auto& a : hops(other))
                for (const auto& b : mine)
                    if (topo.interferes(std::get<0>(a), std::get<1>(a), std::get<2>(a),
                                        std::get<0>(b), std::get<1>(b), std::get<2>(b)))
                        throw SimInvariantViolation("established route interferes with flow " +
                                                    std::to_string(id));
        }
        for (NodeId n : r.path)
            if (states[n].interfaces_in_use(clock) > topo.interfaces_per_node())
                throw SimInvariantViolation("radio budget exceeded at node " + std::to_string(n));
    }

    // -- channel bookkeeping ----------------------------------------------------

    void deliver_broadcasts(const std::vector<ChannelBroadcast>& msgs, int flow) {
        for (const auto& msg : msgs) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "until=%.6f", msg.busy_until);
            log("bcast", std::to_string(msg.sender), msg.channel, flow, buf);
            const double expire_at = std::max(msg.busy_until, clock);
            for (NodeId n : topo.neighbors(msg.sender)) {
                apply_broadcast(states[n], msg, clock);
                schedule(expire_at, EvChannelExpire{n});
            }
            schedule(expire_at, EvChannelExpire{msg.sender});
            if (cfg.control_overhead) start_control(msg.sender, msg.sender);
        }
    }

    void dispatch_freed(const std::vector<FreedChannel>& freed) {
        for (const auto& fc : freed) notify_waiters(fc.node, fc.channel);
    }

    // A released claim is announced to the neighborhood just like an occupancy,
    // clearing the blocks the grant broadcasts installed. Without this, a torn
    // down or aborted reservation would keep its neighborhood blocked until the
    // announced estimate runs out.
    void announce_releases(const ReleaseOutcome& out, int flow) {
        for (const auto& h : out.hops) {
            log("release", arrow(h.a, h.b), h.channel, flow, "ok");
            for (NodeId endpoint : {h.a, h.b}) {
                log("rbcast", std::to_string(endpoint), h.channel, flow, "ok");
                for (NodeId n : topo.neighbors(endpoint)) {
                    const auto res =
                        states[n].release(h.channel, OccupancyReason::NeighborBlock, endpoint);
                    if (res.removed && res.freed) notify_waiters(n, h.channel);
                }
                if (cfg.control_overhead) start_control(endpoint, endpoint);
            }
        }
        dispatch_freed(out.freed);
    }

    void notify_waiters(NodeId node, ChannelId ch) {
        const auto nd = channel_freed(states[node], node, ch, clock);
        if (nd) {
            log("notify", arrow(node, nd->to), ch, -1, "ok");
            schedule(clock + control_latency(), EvNotify{nd->to, nd->notify});
        }
        const auto it = local_waiters.find(node);
        if (it != local_waiters.end() && !it->second.empty()) {
            const std::set<int> parked = it->second;
            it->second.clear();
            for (int flow : parked) {
                FlowRt& f = flows[flow];
                if (!f.discovery) continue;
                ++f.disc_gen; // invalidate the pending timeout
                schedule(clock, EvDiscoveryStep{flow, f.disc_gen, ch});
            }
        }
    }

    void handle(const EvChannelExpire& e) {
        auto& st = states[e.node];
        std::vector<ChannelId> newly_free;
        for (ChannelId ch = 1; ch <= topo.channel_count(); ++ch) {
            bool was_busy = false, still_busy = false;
            for (const auto& entry : st.entries()) {
                if (entry.channel != ch) continue;
                if (entry.busy_until >= clock) was_busy = true;
                if (entry.busy_until > clock) still_busy = true;
            }
            if (was_busy && !still_busy) newly_free.push_back(ch);
        }
        st.prune(clock);
        if (st.interfaces_in_use(clock) == 0 && st.waiters().empty() &&
            st.entries().empty())
            st.reset_completion();
        for (ChannelId ch : newly_free) {
            log("expire", std::to_string(e.node), ch, -1, "freed");
            notify_waiters(e.node, ch);
        }
    }

    // -- packets ------------------------------------------------------------------

    void handle(const EvPacketGen& e) {
        FlowRt& f = flows[e.flow];
        if (!f.in_burst || clock >= f.burst_end - 1e-9) return;
        ++f.sent;
        f.next_pkt = e.pkt + 1;
        log("pkt", std::to_string(f.def.src), 0, f.def.id, "gen");
        if (f.route) {
            enqueue_packet(f, e.pkt, 0);
        } else if (f.discovery) {
            if (static_cast<int>(f.pending.size()) < cfg.iface_queue_cap) {
                f.pending.push_back(e.pkt);
            } else {
                ++f.dropped;
                log("drop", std::to_string(f.def.src), 0, f.def.id, "queue");
            }
        } else {
            ++f.dropped;
            log("drop", std::to_string(f.def.src), 0, f.def.id, "noroute");
            if (cfg.algorithm == Algorithm::Rca && clock >= f.next_retry) {
                f.next_retry = clock + cfg.retry_holdoff;
                schedule(clock, EvRetry{f.def.id});
            }
        }
        // Packet ids are global per flow; generation times restart at each burst.
        const double next =
            f.burst_start + static_cast<double>(e.pkt + 1 - f.burst_pkt0) / f.def.rate_pps;
        if (next < f.burst_end - 1e-9) schedule(next, EvPacketGen{e.flow, e.pkt + 1});
    }

    void enqueue_packet(FlowRt& f, long pkt, int hop) {
        auto& ifc = iface(f.route->path[hop], f.route->channels[hop]);
        if (static_cast<int>(ifc.queue.size()) >= cfg.iface_queue_cap) {
            ++f.dropped;
            log("drop", std::to_string(f.route->path[hop]), f.route->channels[hop], f.def.id,
                "queue");
            return;
        }
        ifc.queue.push_back({f.def.id, pkt, hop, f.route_gen});
        service_iface(f.route->path[hop], f.route->channels[hop]);
    }

    // Physical carrier sense: a node may not start transmitting on a channel
    // while another transmitter on that channel is inside its reception range.
    // Hidden transmitters (in range of the receiver only) are not sensed; those
    // overlaps are what the collision rule punishes.
    bool channel_clear_at(NodeId n, ChannelId ch) const {
        for (int id : active) {
            const Txn& t = txns[id];
            if (t.control || t.channel != ch || t.end <= clock) continue;
            if (topo.distance(n, t.tx) <= topo.reception_range()) return false;
        }
        return true;
    }

    void service_iface(NodeId node, ChannelId ch, bool won_contention = false) {
        auto& ifc = iface(node, ch);
        bool first = true;
        while (!ifc.busy && !ifc.queue.empty()) {
            if (!(won_contention && first) && !channel_clear_at(node, ch)) {
                if (!ifc.deferred) {
                    ifc.deferred = true;
                    deferred[ch].push_back(node);
                }
                return;
            }
            first = false;
            const QueuedPacket qp = ifc.queue.front();
            ifc.queue.pop_front();
            FlowRt& f = flows[qp.flow];
            if (!f.route || qp.route_gen != f.route_gen) {
                ++f.dropped;
                log("drop", std::to_string(node), ch, qp.flow, "teardown");
                continue;
            }
            const NodeId tx = f.route->path[qp.hop];
            const NodeId rx = f.route->path[qp.hop + 1];
            Txn t;
            t.tx = tx;
            t.rx = rx;
            t.channel = ch;
            t.start = clock;
            t.end = clock + airtime(f.def.packet_size);
            t.flow = qp.flow;
            t.pkt = qp.pkt;
            t.hop = qp.hop;
            t.route_gen = qp.route_gen;
            begin_transmission(std::move(t));
            ifc.busy = true;
        }
    }

    // When a transmission ends, the deferred interfaces that now sense an idle
    // channel contend for it with hash-picked backoff slots. The earliest slot
    // wins; interfaces that picked the same earliest slot all start at once and
    // pay for it through the collision rule. This keeps light contention nearly
    // lossless while crowded channel regions degrade, without consuming run
    // randomness.
    static constexpr int kContentionSlots = 16;

    void release_deferred(ChannelId ch) {
        auto it = deferred.find(ch);
        if (it == deferred.end() || it->second.empty()) return;
        auto& waitlist = it->second;
        std::vector<NodeId> idle;
        for (NodeId n : waitlist)
            if (channel_clear_at(n, ch)) idle.push_back(n);
        if (idle.empty()) return;
        ++contention_round;
        int best_slot = kContentionSlots;
        std::map<NodeId, int> slots;
        for (NodeId n : idle) {
            const int s = static_cast<int>(
                burst_jitter(static_cast<int>(n), contention_round) * kContentionSlots);
            slots[n] = s;
            best_slot = std::min(best_slot, s);
        }
        for (NodeId n : idle) {
            if (slots[n] != best_slot) continue; // keeps waiting for the next round
            std::erase(waitlist, n);
            iface(n, ch).deferred = false;
            service_iface(n, ch, true);
        }
    }

    void begin_transmission(Txn t) {
        const int id = static_cast<int>(txns.size());
        // Collision marking against everything still in the air.
        for (int other : active) {
            Txn& o = txns[other];
            if (o.end <= t.start) continue;
            if (!topo.interferes(o.tx, o.rx, o.channel, t.tx, t.rx, t.channel)) continue;
            if (o.control && t.control) continue;
            if (o.control) {
                t.collided = true;
            } else if (t.control) {
                o.collided = true;
            } else {
                o.collided = true;
                t.collided = true;
            }
        }
        if (!t.control)
            log("send", arrow(t.tx, t.rx), t.channel, t.flow,
                "p=" + std::to_string(t.pkt) + ";h=" + std::to_string(t.hop));
        txns.push_back(t);
        active.push_back(id);
        schedule(txns[id].end, EvPacketArrive{id});
    }

    void start_control(NodeId from, NodeId to) {
        Txn t;
        t.tx = from;
        t.rx = to;
        t.channel = 1;
        t.start = clock;
        t.end = clock + airtime(64);
        t.control = true;
        begin_transmission(std::move(t));
    }

    void handle(const EvPacketArrive& e) {
        const Txn t = txns[e.txn];
        std::erase(active, e.txn);
        if (t.control) return;
        iface(t.tx, t.channel).busy = false;
        release_deferred(t.channel);
        service_iface(t.tx, t.channel);
        FlowRt& f = flows[t.flow];
        if (!f.route || t.route_gen != f.route_gen) {
            ++f.dropped;
            log("arrive", arrow(t.tx, t.rx), t.channel, t.flow, "stale");
            return;
        }
        if (t.collided) {
            ++f.collided;
            ++total_collisions;
            log("arrive", arrow(t.tx, t.rx), t.channel, t.flow, "collided");
            return;
        }
        if (t.hop + 1 == static_cast<int>(f.route->channels.size())) {
            ++f.delivered;
            log("arrive", arrow(t.tx, t.rx), t.channel, t.flow, "delivered");
            return;
        }
        log("arrive", arrow(t.tx, t.rx), t.channel, t.flow, "forward");
        enqueue_packet(f, t.pkt, t.hop + 1);
    }
};

Simulation::Simulation(Topology topo, SimConfig cfg, std::vector<Flow> flows, TraceLog* trace)
    : impl_(std::make_unique<Impl>(std::move(topo), cfg, std::move(flows), trace)) {}

Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

Metrics Simulation::run() { return impl_->run(); }

const Topology& Simulation::topology() const { return impl_->topo; }

const ChannelInfo& Simulation::node_state(NodeId n) const { return impl_->states.at(n); }

long Simulation::collision_count() const { return impl_->total_collisions; }

const StaticAssignment* Simulation::static_plan() const {
    return impl_->plan ? &*impl_->plan : nullptr;
}

} // namespace rcasim
