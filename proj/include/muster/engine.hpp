#pragma once

#include "muster/bigint.hpp"
#include "muster/fragment.hpp"
#include "muster/graph.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace muster {

struct AgentSpec {
    std::uint64_t label = 0;
    std::uint32_t start_node = 0;
    std::optional<BigInt> wake_round;  // empty: dormant until visited
};

struct Scenario {
    PortLabeledGraph graph;
    std::vector<AgentSpec> agents;
};

ValidationReport validate_scenario(const Scenario& s);

enum class TraceLevel : std::uint8_t {
    Full,     // every move, wait span, declaration and annotation
    Summary,  // declarations, annotations and terminals only
};

enum class Outcome : std::uint8_t {
    GatheredDeclared,
    LimitExceeded,
    ProtocolError,
    FinishedWithoutGathering,
    StoppedColocated,  // stop_when_colocated fired
};

std::string to_string(Outcome o);

struct TraceEvent {
    enum class Kind : std::uint8_t { Move, WaitSpan, Declare, Annotate };
    Kind kind = Kind::Move;
    BigInt round_from;
    BigInt round_to;  // == round_from except for wait spans
    std::uint64_t label = 0;
    std::uint32_t node_before = 0;
    std::uint32_t node_after = 0;
    std::uint32_t port = 0;
    std::uint32_t cur_card = 0;  // snapshot the agent acted on (span start for spans)
    std::string key;             // annotations
    std::string value;
    std::uint64_t seq = 0;  // per-agent sequence number, for deterministic ordering
};

struct AgentTerminal {
    std::uint64_t label = 0;
    std::optional<BigInt> declared_round;
    std::optional<std::uint32_t> declared_node;
    std::optional<std::uint64_t> leader;
    std::optional<std::uint64_t> size;
    std::vector<std::pair<BitString, std::uint64_t>> inventory;
    BigInt moves_executed;  // per-agent instruction statistics survive Summary level
    BigInt waits_executed;
};

struct Trace {
    std::vector<TraceEvent> events;
    std::vector<AgentTerminal> terminals;  // sorted by label
    BigInt final_round;
    const AgentTerminal* terminal(std::uint64_t label) const;
};

struct RunOptions {
    BigInt round_limit = 1000000;
    bool fast_forward = true;
    TraceLevel trace_level = TraceLevel::Full;
    bool stop_when_colocated = false;  // for rendezvous oracles
};

struct RunResult {
    Outcome outcome = Outcome::LimitExceeded;
    Trace trace;
    std::string error;
};

using ProgramFactory = std::function<Program(AgentCtx&, std::uint64_t label)>;

// Lock-step synchronous execution with adversarial wake-ups, waking by first
// visitor, simultaneous moves and event-jump fast-forwarding. A single run is
// strictly sequential; callers may run many scenarios in parallel.
RunResult run(const Scenario& scenario, const ProgramFactory& factory, const RunOptions& options);

struct GatheringReport {
    bool all_declared = false;
    bool same_round = false;
    bool same_node = false;
    bool leaders_valid = false;  // all leader outputs equal one actual agent label
    bool sizes_valid = false;    // all size outputs equal the true graph size
    bool ok = false;
    std::vector<std::string> issues;
};

// Post-hoc contract check over a completed trace. Leader/size checks apply
// only where the protocol produced those outputs.
GatheringReport verify_gathering(const Trace& trace, const Scenario& scenario);

}  // namespace muster
