#include "rcasim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "rcasim/rng.hpp"

namespace rcasim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& name, int line, const std::string& msg) {
    throw ConfigError(name + ":" + std::to_string(line) + ": " + msg);
}

struct KvFile {
    std::string name;
    std::map<std::string, std::pair<std::string, int>> pairs; // key -> (value, line)

    bool has(const std::string& k) const { return pairs.count(k) != 0; }
    int line_of(const std::string& k) const { return pairs.at(k).second; }

    double number(const std::string& k, double fallback) const {
        if (!has(k)) return fallback;
        const auto& [v, line] = pairs.at(k);
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (...) {
            fail(name, line, "expected a number for '" + k + "', got '" + v + "'");
        }
    }

    long integer(const std::string& k, long fallback) const {
        const double d = number(k, static_cast<double>(fallback));
        if (d != std::floor(d)) fail(name, line_of(k), "expected an integer for '" + k + "'");
        return static_cast<long>(d);
    }

    bool flag(const std::string& k, bool fallback) const {
        if (!has(k)) return fallback;
        const auto& [v, line] = pairs.at(k);
        if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "off" || v == "no") return false;
        fail(name, line, "expected a boolean for '" + k + "'");
    }

    std::string word(const std::string& k, const std::string& fallback) const {
        return has(k) ? pairs.at(k).first : fallback;
    }
};

KvFile parse_kv_file(const std::string& text, const std::string& name,
                     const std::set<std::string>& known) {
    KvFile kv;
    kv.name = name;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(name, lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) fail(name, lineno, "expected 'key = value'");
        if (!known.count(key)) fail(name, lineno, "unknown key '" + key + "'");
        if (kv.pairs.count(key)) fail(name, lineno, "duplicate key '" + key + "'");
        kv.pairs[key] = {value, lineno};
    }
    return kv;
}

const std::set<std::string> kScenarioKeys = {
    "nodes", "area_x", "area_y", "range", "channels", "interfaces", "placement",
    "topology_seed", "interference", "algorithm", "flows", "rate", "packet_size",
    "duration", "flow_endpoint_policy", "flow_list", "min_hop_distance", "max_hop_distance",
    "start_stagger",
    "queue_cap", "seed", "link_rate_mbps", "iface_queue_cap", "wait_timeout",
    "retry_holdoff", "burst_on", "burst_off", "control_overhead", "wait_double_incoming"};

const std::set<std::string> kMatrixOnlyKeys = {"sweep_key", "sweep_values", "algorithms", "seeds"};

Algorithm parse_algorithm(const std::string& v, const std::string& name, int line) {
    if (v == "rca") return Algorithm::Rca;
    if (v == "static") return Algorithm::Static;
    if (v == "single") return Algorithm::Single;
    fail(name, line, "algorithm must be rca, static or single (got '" + v + "')");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

Scenario scenario_from_kv(const KvFile& kv) {
    Scenario s;
    s.nodes = static_cast<int>(kv.integer("nodes", s.nodes));
    s.area_x = kv.number("area_x", s.area_x);
    s.area_y = kv.number("area_y", s.area_y);
    s.range = kv.number("range", s.range);
    s.channels = static_cast<int>(kv.integer("channels", s.channels));
    s.interfaces = static_cast<int>(kv.integer("interfaces", s.interfaces));
    s.flows = static_cast<int>(kv.integer("flows", s.flows));
    s.rate = kv.number("rate", s.rate);
    s.packet_size = static_cast<int>(kv.integer("packet_size", s.packet_size));
    s.duration = kv.number("duration", s.duration);
    s.queue_cap = static_cast<int>(kv.integer("queue_cap", s.queue_cap));
    s.seed = static_cast<std::uint64_t>(kv.integer("seed", static_cast<long>(s.seed)));
    s.min_hop_distance = static_cast<int>(kv.integer("min_hop_distance", s.min_hop_distance));
    s.max_hop_distance = static_cast<int>(kv.integer("max_hop_distance", s.max_hop_distance));
    s.start_stagger = kv.number("start_stagger", s.start_stagger);
    s.link_rate_mbps = kv.number("link_rate_mbps", s.link_rate_mbps);
    s.iface_queue_cap = static_cast<int>(kv.integer("iface_queue_cap", s.iface_queue_cap));
    s.wait_timeout = kv.number("wait_timeout", s.wait_timeout);
    s.retry_holdoff = kv.number("retry_holdoff", s.retry_holdoff);
    s.burst_on = kv.number("burst_on", s.burst_on);
    s.burst_off = kv.number("burst_off", s.burst_off);
    s.control_overhead = kv.flag("control_overhead", s.control_overhead);
    s.wait_double_incoming = kv.flag("wait_double_incoming", s.wait_double_incoming);
    if (kv.has("topology_seed"))
        s.topology_seed = static_cast<std::uint64_t>(kv.integer("topology_seed", 0));

    if (kv.has("placement")) {
        const auto v = kv.word("placement", "");
        if (v == "random")
            s.placement = Placement::Random;
        else if (v == "grid")
            s.placement = Placement::Grid;
        else
            fail(kv.name, kv.line_of("placement"), "placement must be random or grid");
    }
    if (kv.has("interference")) {
        const auto v = kv.word("interference", "");
        if (v == "trca")
            s.interference = InterferenceModel::Trca;
        else if (v == "receiver")
            s.interference = InterferenceModel::ReceiverOnly;
        else
            fail(kv.name, kv.line_of("interference"), "interference must be trca or receiver");
    }
    if (kv.has("algorithm"))
        s.algorithm = parse_algorithm(kv.word("algorithm", ""), kv.name, kv.line_of("algorithm"));
    if (kv.has("flow_endpoint_policy")) {
        const auto v = kv.word("flow_endpoint_policy", "");
        if (v == "random_pairs")
            s.flow_endpoint_policy = EndpointPolicy::RandomPairs;
        else if (v == "fixed_list")
            s.flow_endpoint_policy = EndpointPolicy::FixedList;
        else
            fail(kv.name, kv.line_of("flow_endpoint_policy"),
                 "flow_endpoint_policy must be random_pairs or fixed_list");
    }
    if (kv.has("flow_list")) {
        const int line = kv.line_of("flow_list");
        for (const auto& tok : split_list(kv.word("flow_list", ""))) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                fail(kv.name, line, "flow_list entries look like src:dst");
            try {
                s.flow_list.emplace_back(std::stoi(tok.substr(0, colon)),
                                         std::stoi(tok.substr(colon + 1)));
            } catch (...) {
                fail(kv.name, line, "bad flow_list entry '" + tok + "'");
            }
        }
    }

    // cross-field constraints
    const auto where = [&](const std::string& key) {
        return kv.has(key) ? kv.line_of(key) : 0;
    };
    if (s.nodes < 1) fail(kv.name, where("nodes"), "nodes must be >= 1");
    if (s.channels <= 1) fail(kv.name, where("channels"), "channels must be > 1");
    if (s.channels < s.interfaces)
        fail(kv.name, where("channels"),
             "channels must be >= interfaces (got channels=" + std::to_string(s.channels) +
                 ", interfaces=" + std::to_string(s.interfaces) + ")");
    if (s.interfaces < 1) fail(kv.name, where("interfaces"), "interfaces must be >= 1");
    if (s.range <= 0) fail(kv.name, where("range"), "range must be positive");
    if (s.area_x <= 0 || s.area_y <= 0) fail(kv.name, where("area_x"), "area must be positive");
    if (s.duration <= 0) fail(kv.name, where("duration"), "duration must be positive");
    if (s.flows < 0) fail(kv.name, where("flows"), "flows must be >= 0");
    if (s.rate <= 0) fail(kv.name, where("rate"), "rate must be positive");
    if (s.packet_size < 1) fail(kv.name, where("packet_size"), "packet_size must be >= 1");
    if (s.queue_cap < 1) fail(kv.name, where("queue_cap"), "queue_cap must be >= 1");
    if (s.iface_queue_cap < 1)
        fail(kv.name, where("iface_queue_cap"), "iface_queue_cap must be >= 1");
    if (s.link_rate_mbps <= 0)
        fail(kv.name, where("link_rate_mbps"), "link_rate_mbps must be positive");
    if (s.burst_on <= 0) fail(kv.name, where("burst_on"), "burst_on must be positive");
    if (s.burst_off < 0) fail(kv.name, where("burst_off"), "burst_off must be >= 0");
    if (s.wait_timeout <= 0) fail(kv.name, where("wait_timeout"), "wait_timeout must be positive");
    if (s.flow_endpoint_policy == EndpointPolicy::FixedList && s.flow_list.empty())
        fail(kv.name, where("flow_endpoint_policy"), "fixed_list needs a flow_list");
    return s;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& name) {
    return scenario_from_kv(parse_kv_file(text, name, kScenarioKeys));
}

Scenario parse_scenario(const std::string& path) {
    return parse_scenario_text(read_file(path), path);
}

Topology build_topology(const Scenario& s, std::uint64_t seed) {
    const std::uint64_t tseed = s.topology_seed.value_or(seed);
    if (s.placement == Placement::Grid)
        return make_grid_topology(s.nodes, s.area_x, s.area_y, s.range, s.interfaces, s.channels,
                                  s.interference);
    return make_random_topology(s.nodes, s.area_x, s.area_y, s.range, s.interfaces, s.channels,
                                tseed, s.interference);
}

namespace {

std::vector<int> hop_distances(const Topology& topo, NodeId src) {
    std::vector<int> dist(topo.node_count(), -1);
    std::queue<NodeId> q;
    dist[src] = 0;
    q.push(src);
    while (!q.empty()) {
        const NodeId cur = q.front();
        q.pop();
        for (NodeId n : topo.neighbors(cur))
            if (dist[n] < 0) {
                dist[n] = dist[cur] + 1;
                q.push(n);
            }
    }
    return dist;
}

} // namespace

std::vector<Flow> build_flows(const Scenario& s, const Topology& topo, std::uint64_t seed) {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Flow> flows;
    std::set<std::pair<NodeId, NodeId>> used;
    for (int i = 0; i < s.flows; ++i) {
        Flow f;
        f.id = i;
        f.rate_pps = s.rate;
        f.packet_size = s.packet_size;
        if (s.flow_endpoint_policy == EndpointPolicy::FixedList) {
            const auto& [src, dst] = s.flow_list[i % s.flow_list.size()];
            f.src = src;
            f.dst = dst;
        } else {
            bool found = false;
            for (int attempt = 0; attempt < 500 && !found; ++attempt) {
                const NodeId src = rng.uniform_int(0, topo.node_count() - 1);
                const NodeId dst = rng.uniform_int(0, topo.node_count() - 1);
                if (src == dst || used.count({src, dst})) continue;
                const auto dist = hop_distances(topo, src);
                if (dist[dst] < s.min_hop_distance) continue;
                if (s.max_hop_distance > 0 && dist[dst] > s.max_hop_distance) continue;
                f.src = src;
                f.dst = dst;
                found = true;
            }
            if (!found) {
                // fall back to any connected distinct pair
                for (NodeId src = 0; !found && src < topo.node_count(); ++src) {
                    const auto dist = hop_distances(topo, src);
                    for (NodeId dst = 0; !found && dst < topo.node_count(); ++dst)
                        if (src != dst && dist[dst] > 0 && !used.count({src, dst})) {
                            f.src = src;
                            f.dst = dst;
                            found = true;
                        }
                }
                if (!found) throw ConfigError("cannot pick flow endpoints in this topology");
            }
        }
        used.insert({f.src, f.dst});
        f.start = i * s.start_stagger + rng.uniform(0.0, s.start_stagger);
        f.stop = s.duration;
        if (f.start >= f.stop) f.start = 0.0;
        flows.push_back(f);
    }
    return flows;
}

SimConfig build_sim_config(const Scenario& s) {
    SimConfig cfg;
    cfg.algorithm = s.algorithm;
    cfg.link_rate_mbps = s.link_rate_mbps;
    cfg.iface_queue_cap = s.iface_queue_cap;
    cfg.waiter_queue_cap = s.queue_cap;
    cfg.wait_timeout = s.wait_timeout;
    cfg.retry_holdoff = s.retry_holdoff;
    cfg.burst_on = s.burst_on;
    cfg.burst_off = s.burst_off;
    cfg.control_overhead = s.control_overhead;
    cfg.protocol.double_incoming_wait_horizon = s.wait_double_incoming;
    cfg.static_seed = s.seed;
    return cfg;
}

RunResult run(const Scenario& scenario, std::uint64_t seed, bool with_trace) {
    Topology topo = build_topology(scenario, seed);
    const auto flows = build_flows(scenario, topo, seed);
    SimConfig cfg = build_sim_config(scenario);
    cfg.static_seed = seed;
    TraceLog trace(with_trace);
    Simulation sim(std::move(topo), cfg, flows, &trace);
    RunResult result;
    result.metrics = sim.run();
    result.collisions = sim.collision_count();
    result.trace = trace.text();
    result.hash = metrics_hash(result.metrics);
    return result;
}

// ---- matrix -------------------------------------------------------------------

ExperimentMatrix parse_matrix_text(const std::string& text, const std::string& name) {
    std::set<std::string> known = kScenarioKeys;
    known.insert(kMatrixOnlyKeys.begin(), kMatrixOnlyKeys.end());
    const KvFile kv = parse_kv_file(text, name, known);

    // strip matrix-only keys before scenario validation
    KvFile base = kv;
    for (const auto& k : kMatrixOnlyKeys) base.pairs.erase(k);
    ExperimentMatrix m;
    m.base = scenario_from_kv(base);

    const std::string sweep = kv.word("sweep_key", "rate");
    if (sweep == "rate")
        m.sweep_key = SweepKey::Rate;
    else if (sweep == "flows")
        m.sweep_key = SweepKey::Flows;
    else
        fail(name, kv.line_of("sweep_key"), "sweep_key must be rate or flows");

    if (!kv.has("sweep_values")) fail(name, 0, "missing sweep_values");
    for (const auto& tok : split_list(kv.word("sweep_values", ""))) {
        try {
            m.sweep_values.push_back(std::stod(tok));
        } catch (...) {
            fail(name, kv.line_of("sweep_values"), "bad sweep value '" + tok + "'");
        }
    }

    const std::string algs = kv.word("algorithms", "rca,static,single");
    const int algs_line = kv.has("algorithms") ? kv.line_of("algorithms") : 0;
    for (const auto& tok : split_list(algs))
        m.algorithms.push_back(parse_algorithm(tok, name, algs_line));

    const std::string seeds = kv.word("seeds", "1..10");
    const int seeds_line = kv.has("seeds") ? kv.line_of("seeds") : 0;
    for (const auto& tok : split_list(seeds)) {
        const auto dots = tok.find("..");
        try {
            if (dots != std::string::npos) {
                const long lo = std::stol(tok.substr(0, dots));
                const long hi = std::stol(tok.substr(dots + 2));
                if (lo > hi) throw std::invalid_argument(tok);
                for (long v = lo; v <= hi; ++v) m.seeds.push_back(static_cast<std::uint64_t>(v));
            } else {
                m.seeds.push_back(static_cast<std::uint64_t>(std::stol(tok)));
            }
        } catch (...) {
            fail(name, seeds_line, "bad seed entry '" + tok + "'");
        }
    }
    if (m.sweep_values.empty() || m.algorithms.empty() || m.seeds.empty())
        fail(name, 0, "sweep_values, algorithms and seeds must be non-empty");
    return m;
}

ExperimentMatrix parse_matrix(const std::string& path) {
    return parse_matrix_text(read_file(path), path);
}

namespace {

const char* sweep_name(SweepKey k) { return k == SweepKey::Rate ? "rate" : "flows"; }

Scenario cell_scenario(const ExperimentMatrix& m, Algorithm alg, double value) {
    Scenario s = m.base;
    s.algorithm = alg;
    if (m.sweep_key == SweepKey::Rate)
        s.rate = value;
    else
        s.flows = static_cast<int>(value);
    return s;
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

std::vector<MatrixRow> run_matrix_collect(const ExperimentMatrix& matrix) {
    std::vector<Algorithm> algs = matrix.algorithms;
    std::sort(algs.begin(), algs.end(), [](Algorithm a, Algorithm b) {
        return std::string(algorithm_name(a)) < algorithm_name(b);
    });
    std::vector<double> values = matrix.sweep_values;
    std::sort(values.begin(), values.end());
    std::vector<std::uint64_t> seeds = matrix.seeds;
    std::sort(seeds.begin(), seeds.end());

    std::vector<MatrixRow> rows;
    for (Algorithm alg : algs) {
        for (double value : values) {
            for (std::uint64_t seed : seeds) {
                const Scenario s = cell_scenario(matrix, alg, value);
                MatrixRow row;
                row.algorithm = alg;
                row.sweep_key = matrix.sweep_key;
                row.sweep_value = value;
                row.seed = seed;
                try {
                    row.metrics = run(s, seed).metrics;
                } catch (const std::exception& e) {
                    throw ConfigError(std::string("matrix cell failed (algorithm=") +
                                      algorithm_name(alg) + ", " + sweep_name(matrix.sweep_key) +
                                      "=" + format_value(value) + ", seed=" + std::to_string(seed) +
                                      "): " + e.what());
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::string matrix_csv(const std::vector<MatrixRow>& rows) {
    std::string out =
        "algorithm,sweep_key,sweep_value,seed,delivery_rate,throughput_kbps,sent,delivered,collided\n";
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%llu,%.6f,%.3f,%ld,%ld,%ld\n",
                      algorithm_name(r.algorithm), sweep_name(r.sweep_key),
                      format_value(r.sweep_value).c_str(),
                      static_cast<unsigned long long>(r.seed), r.metrics.mean_delivery_rate,
                      r.metrics.mean_throughput_kbps, r.metrics.sent, r.metrics.delivered,
                      r.metrics.collided);
        out += buf;
    }
    return out;
}

std::string matrix_summary_csv(const std::vector<MatrixRow>& rows) {
    std::string out = "algorithm,sweep_key,sweep_value,seeds,mean_delivery_rate,mean_throughput_kbps\n";
    // rows arrive sorted by (algorithm, value, seed); aggregate consecutive cells
    char buf[200];
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        double rate_sum = 0, tput_sum = 0;
        while (j < rows.size() && rows[j].algorithm == rows[i].algorithm &&
               rows[j].sweep_value == rows[i].sweep_value) {
            rate_sum += rows[j].metrics.mean_delivery_rate;
            tput_sum += rows[j].metrics.mean_throughput_kbps;
            ++j;
        }
        const double n = static_cast<double>(j - i);
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%zu,%.6f,%.3f\n",
                      algorithm_name(rows[i].algorithm), sweep_name(rows[i].sweep_key),
                      format_value(rows[i].sweep_value).c_str(), j - i, rate_sum / n, tput_sum / n);
        out += buf;
        i = j;
    }
    return out;
}

std::string summary_path_for(const std::string& out_path) {
    if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".csv")
        return out_path.substr(0, out_path.size() - 4) + ".summary.csv";
    return out_path + ".summary.csv";
}

void run_matrix(const ExperimentMatrix& matrix, const std::string& out_path) {
    const auto rows = run_matrix_collect(matrix);
    std::ofstream out(out_path);
    if (!out) throw ConfigError(out_path + ": cannot open for writing");
    out << matrix_csv(rows);
    const std::string spath = summary_path_for(out_path);
    std::ofstream sum(spath);
    if (!sum) throw ConfigError(spath + ": cannot open for writing");
    sum << matrix_summary_csv(rows);
}

} // namespace rcasim
