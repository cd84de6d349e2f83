#ifndef RCASIM_TRACE_HPP
#define RCASIM_TRACE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rcasim/topology.hpp"

namespace rcasim {

std::uint64_t fnv1a64(const std::string& s);

// Line-oriented event log. One record per line, tab-separated:
//   time  sequence  kind  node(s)  channel  flow  outcome
// node(s) is either "n" or "a>b"; absent channel/flow print as "-".
// A short header of '#'-prefixed lines makes the trace self-describing so the
// replay validator can rebuild the topology.
class TraceLog {
public:
    explicit TraceLog(bool enabled = true) : enabled_(enabled) {}

    void header(const Topology& topo, int waiter_queue_cap, const std::string& algorithm);

    void record(double time, const char* kind, const std::string& nodes, int channel, int flow,
                const std::string& outcome);

    bool enabled() const { return enabled_; }
    const std::string& text() const { return text_; }
    std::uint64_t sequence() const { return seq_; }

private:
    std::string text_;
    std::uint64_t seq_ = 0;
    bool enabled_ = true;
};

struct ReplayIssue {
    std::size_t line = 0;
    std::string message;
};

// Re-checks invariants over a recorded trace: monotone time, strictly
// increasing sequence numbers, per-flow delivered <= sent, waiter queues within
// capacity, grant soundness against the reconstructed channel tables, and the
// per-node radio budget.
std::vector<ReplayIssue> validate_trace(const std::string& text);

} // namespace rcasim

#endif
