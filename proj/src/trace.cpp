#include "rcasim/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <map>
#include <tuple>
#include <optional>
#include <sstream>

namespace rcasim {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void TraceLog::header(const Topology& topo, int waiter_queue_cap, const std::string& algorithm) {
    if (!enabled_) return;
    char buf[160];
    text_ += "# rcasim-trace v1\n";
    std::snprintf(buf, sizeof(buf), "# algorithm=%s channels=%d interfaces=%d range=%.3f queue_cap=%d model=%s\n",
                  algorithm.c_str(), topo.channel_count(), topo.interfaces_per_node(),
                  topo.reception_range(), waiter_queue_cap,
                  topo.interference_model() == InterferenceModel::Trca ? "trca" : "receiver");
    text_ += buf;
    text_ += "# positions=";
    for (NodeId n = 0; n < topo.node_count(); ++n) {
        const auto& p = topo.position(n);
        std::snprintf(buf, sizeof(buf), "%s%.3f:%.3f", n ? ";" : "", p.x, p.y);
        text_ += buf;
    }
    text_ += '\n';
}

void TraceLog::record(double time, const char* kind, const std::string& nodes, int channel,
                      int flow, const std::string& outcome) {
    if (!enabled_) {
        ++seq_;
        return;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f\t%llu\t", time, static_cast<unsigned long long>(seq_++));
    text_ += buf;
    text_ += kind;
    text_ += '\t';
    text_ += nodes;
    text_ += '\t';
    if (channel > 0)
        text_ += std::to_string(channel);
    else
        text_ += '-';
    text_ += '\t';
    if (flow >= 0)
        text_ += std::to_string(flow);
    else
        text_ += '-';
    text_ += '\t';
    text_ += outcome;
    text_ += '\n';
}

namespace {

struct Checker {
    std::vector<ReplayIssue> issues;
    std::optional<Topology> topo;
    int queue_cap = 10;
    int channels = 4;
    int interfaces = 4;
    // per node: active entries keyed by (channel, reason, source);
    // reason 0 = own grant (source -1), 1 = neighbor announcement
    std::vector<std::map<std::tuple<int, int, NodeId>, double>> busy;
    std::vector<std::deque<NodeId>> queues;
    std::map<int, long> sent, delivered;

    void fail(std::size_t line, std::string msg) { issues.push_back({line, std::move(msg)}); }

    bool node_ok(NodeId n) const { return topo && n >= 0 && n < topo->node_count(); }

    bool channel_busy(NodeId n, int ch, double t) const {
        for (const auto& [key, until] : busy[n])
            if (std::get<0>(key) == ch && until > t) return true;
        return false;
    }

    int radios_in_use(NodeId n, double t) const {
        int used = 0;
        for (const auto& [key, until] : busy[n])
            if (std::get<1>(key) == 0 && until > t) ++used;
        return used;
    }
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> to_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

std::map<std::string, std::string> parse_kv(const std::string& line) {
    std::map<std::string, std::string> out;
    std::istringstream in(line);
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq != std::string::npos) out[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return out;
}

} // namespace

std::vector<ReplayIssue> validate_trace(const std::string& text) {
    Checker ck;
    std::vector<Point> positions;
    double range = 250.0;
    InterferenceModel model = InterferenceModel::Trca;

    double last_time = -1.0;
    long long last_seq = -1;
    std::size_t lineno = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto kv = parse_kv(line.substr(1));
            if (kv.count("channels")) ck.channels = std::stoi(kv.at("channels"));
            if (kv.count("interfaces")) ck.interfaces = std::stoi(kv.at("interfaces"));
            if (kv.count("queue_cap")) ck.queue_cap = std::stoi(kv.at("queue_cap"));
            if (kv.count("range")) range = std::stod(kv.at("range"));
            if (kv.count("model") && kv.at("model") == "receiver") model = InterferenceModel::ReceiverOnly;
            if (kv.count("positions")) {
                for (const auto& tok : split(kv.at("positions"), ';')) {
                    const auto xy = split(tok, ':');
                    if (xy.size() == 2) {
                        const auto x = to_double(xy[0]);
                        const auto y = to_double(xy[1]);
                        if (x && y) positions.push_back({*x, *y});
                    }
                }
                if (!positions.empty()) {
                    ck.topo.emplace(positions, ck.interfaces, ck.channels, range, model);
                    ck.busy.resize(positions.size());
                    ck.queues.resize(positions.size());
                }
            }
            continue;
        }

        const auto fields = split(line, '\t');
        if (fields.size() != 7) {
            ck.fail(lineno, "malformed record: expected 7 tab-separated fields");
            continue;
        }
        const auto time = to_double(fields[0]);
        if (!time) {
            ck.fail(lineno, "bad timestamp '" + fields[0] + "'");
            continue;
        }
        if (*time + 1e-9 < last_time) ck.fail(lineno, "time went backwards");
        last_time = std::max(last_time, *time);
        const long long seq = std::stoll(fields[1]);
        if (seq <= last_seq) ck.fail(lineno, "sequence number not strictly increasing");
        last_seq = seq;

        const std::string& kind = fields[2];
        const auto endpoints = split(fields[3], '>');
        const NodeId a = endpoints.empty() ? -1 : std::atoi(endpoints[0].c_str());
        const NodeId b = endpoints.size() > 1 ? std::atoi(endpoints[1].c_str()) : -1;
        const int channel = fields[4] == "-" ? 0 : std::atoi(fields[4].c_str());
        const int flow = fields[5] == "-" ? -1 : std::atoi(fields[5].c_str());
        const std::string& outcome = fields[6];
        const double t = *time;

        if (!ck.topo) continue; // header missing: only ordering checks possible

        if (kind == "grant") {
            if (!ck.node_ok(a) || !ck.node_ok(b)) {
                ck.fail(lineno, "grant with unknown endpoint");
                continue;
            }
            const auto kv = parse_kv(outcome);
            const double until = kv.count("until") ? std::stod(kv.at("until")) : t;
            for (NodeId n : {a, b}) {
                if (ck.channel_busy(n, channel, t))
                    ck.fail(lineno, "grant of occupied channel " + std::to_string(channel) +
                                        " at node " + std::to_string(n));
                if (ck.radios_in_use(n, t) >= ck.interfaces)
                    ck.fail(lineno, "grant exceeds radio budget at node " + std::to_string(n));
            }
            for (NodeId n : {a, b}) {
                auto& e = ck.busy[n][{channel, 0, -1}];
                e = std::max(e, until);
            }
        } else if (kind == "release") {
            for (NodeId n : {a, b})
                if (ck.node_ok(n)) ck.busy[n].erase({channel, 0, -1});
        } else if (kind == "bcast") {
            if (!ck.node_ok(a)) {
                ck.fail(lineno, "broadcast from unknown node");
                continue;
            }
            const auto kv = parse_kv(outcome);
            const double until = kv.count("until") ? std::stod(kv.at("until")) : t;
            for (NodeId n : ck.topo->neighbors(a)) {
                auto& e = ck.busy[n][{channel, 1, a}];
                e = std::max(e, until);
            }
        } else if (kind == "rbcast") {
            if (ck.node_ok(a))
                for (NodeId n : ck.topo->neighbors(a)) ck.busy[n].erase({channel, 1, a});
        } else if (kind == "wait") {
            if (outcome == "queued" && ck.node_ok(b)) {
                auto& q = ck.queues[b];
                if (static_cast<int>(q.size()) >= ck.queue_cap)
                    ck.fail(lineno, "waiter queue above capacity at node " + std::to_string(b));
                else if (std::find(q.begin(), q.end(), a) != q.end())
                    ck.fail(lineno, "duplicate waiter " + std::to_string(a) + " at node " +
                                        std::to_string(b));
                else
                    q.push_back(a);
            }
        } else if (kind == "notify") {
            if (ck.node_ok(a)) {
                auto& q = ck.queues[a];
                if (q.empty())
                    ck.fail(lineno, "notify from node with empty waiter queue");
                else if (q.front() != b)
                    ck.fail(lineno, "notify bypassed the queue head");
                else
                    q.pop_front();
            }
        } else if (kind == "wtimeout") {
            if (ck.node_ok(b)) {
                auto& q = ck.queues[b];
                const auto it = std::find(q.begin(), q.end(), a);
                if (it != q.end()) q.erase(it);
            }
        } else if (kind == "pkt") {
            ++ck.sent[flow];
        } else if (kind == "arrive") {
            if (outcome == "delivered") ++ck.delivered[flow];
        }
    }

    for (const auto& [flow, got] : ck.delivered) {
        const auto it = ck.sent.find(flow);
        const long sent = it == ck.sent.end() ? 0 : it->second;
        if (got > sent)
            ck.fail(0, "flow " + std::to_string(flow) + " delivered " + std::to_string(got) +
                           " of " + std::to_string(sent) + " sent");
    }
    return ck.issues;
}

} // namespace rcasim
