#pragma once

#include "muster/bigint.hpp"
#include "muster/bitstring.hpp"
#include "muster/engine.hpp"
#include "muster/fragment.hpp"
#include "muster/graph.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace muster {

// ---------------------------------------------------------------------------
// Universal exploration sequences.
// ---------------------------------------------------------------------------

struct UxsEntry {
    std::uint64_t N = 0;
    std::vector<std::uint32_t> offsets;  // x_1..x_M
    BigInt texplo;                       // total fragment duration; even, >= 2*M

    BigInt half() const { return texplo / 2; }
};

struct UxsWalkResult {
    std::vector<std::uint32_t> node_sequence;  // positions after 0..M steps
    std::vector<bool> visited;
    bool all_visited = false;
    std::uint32_t end_node = 0;
};

// Offset-walk semantics: after entering by port p at a degree-d node, exit by
// (p + x_i) mod d; the first step from the start node uses entry port 0.
// Degree-0 nodes never move.
UxsWalkResult simulate_uxs_walk(const PortLabeledGraph& g, std::uint32_t start,
                                const std::vector<std::uint32_t>& offsets);

// The family a desk universal sequence for bound N is built and verified
// against: every canonical connected port-labeled simple graph of size
// <= min(N,4), generated rings/lines/completes up to N, and seeded random
// connected samples up to N.
std::vector<PortLabeledGraph> uxs_family(std::uint64_t N);

// Greedy construction, verified over uxs_family(N) from every start node.
std::vector<std::uint32_t> build_uxs(std::uint64_t N);

// ---------------------------------------------------------------------------
// Exploration fragment: effective part (walk + padding) in the first half,
// waiting + reverse traversal in the second; exactly `texplo` rounds, ending
// where it began. Time-symmetric: position at local time t equals position
// at local time texplo - t.
// ---------------------------------------------------------------------------

Frag<void> explo(AgentCtx& ctx, std::shared_ptr<const UxsEntry> uxs);

// ---------------------------------------------------------------------------
// Label-coded rendezvous walk. The repeated code word of the label is danced
// in blocks of 3*texplo rounds: a 1-bit explores in the middle third, a 0-bit
// stays put. Runs forever; callers truncate it with a BudgetScope.
// ---------------------------------------------------------------------------

Frag<void> tz_walk(AgentCtx& ctx, std::uint64_t label, std::shared_ptr<const UxsEntry> uxs);

// ---------------------------------------------------------------------------
// Graph-size learning against a stationary token (candidate elimination over
// marked graphs, with verification walks certifying the surviving map).
// ---------------------------------------------------------------------------

struct EstObservation {
    std::uint32_t degree = 0;
    std::optional<std::uint32_t> entry_port;
    bool token = false;

    friend bool operator==(const EstObservation&, const EstObservation&) = default;
};

class EstMachine {
  public:
    explicit EstMachine(std::size_t size_cap);
    ~EstMachine();
    EstMachine(const EstMachine&) = delete;
    EstMachine& operator=(const EstMachine&) = delete;

    void observe_initial(const EstObservation& o);
    // Next port to take; empty when the machine has stopped (verified or gave up).
    std::optional<std::uint32_t> next_port();
    void observe_step(std::uint32_t port, const EstObservation& o);

    bool verified() const;
    bool gave_up() const;  // size bound exhausted without a surviving candidate
    std::uint64_t learned_size() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct EstRun {
    bool completed = false;  // the machine verified a map
    std::uint64_t size = 0;
    std::uint64_t moves = 0;
    std::vector<std::uint32_t> entries;    // ports of entry, in order
    std::uint32_t max_distance = 0;        // from the token node
    std::uint32_t end_node = 0;
};

// Direct walker for oracles: the token is a fixed marked node of the graph.
// move_budget 0 means unbounded.
EstRun est_direct(const PortLabeledGraph& g, std::uint32_t token_node, std::uint64_t move_budget,
                  std::size_t size_cap);

struct EstPart1 {
    bool completed = false;
    std::uint64_t size = 0;
    BigInt moves;
    std::vector<std::uint32_t> entries;
};

// Engine-side size learning where the token is simulated by co-located
// agents: token present exactly when cur_card > 1. Aborts once `budget`
// rounds have been spent.
Frag<EstPart1> est_probe(AgentCtx& ctx, BigInt budget, std::size_t size_cap);

// Probe then backtrack all probe traversals in reverse; true iff the probe
// completed within budget and learned exactly `expected_size`.
Frag<bool> est_plus(AgentCtx& ctx, std::uint64_t expected_size, BigInt budget,
                    std::size_t size_cap);

// ---------------------------------------------------------------------------
// Cache store for the constructed primitives and their measured constants.
// ---------------------------------------------------------------------------

struct TzEntry {
    std::uint64_t N = 0;
    std::uint64_t safety_factor = 0;  // c in P(N,l) = 3*(2l+4)*texplo*c
    std::uint64_t worst_meeting = 0;  // measured, for the record
};

struct EstEntry {
    std::uint64_t n_max = 0;
    std::vector<std::uint64_t> t_est;        // [n]: measured worst-case rounds
    std::vector<std::uint32_t> reach;        // [n]: max distance from token
};

class PrimitivesStore {
  public:
    static PrimitivesStore& instance();

    std::shared_ptr<const UxsEntry> uxs(std::uint64_t N);
    std::shared_ptr<const TzEntry> tz(std::uint64_t N);
    std::shared_ptr<const EstEntry> est(std::uint64_t n_max);

    std::string cache_dir() const;

  private:
    PrimitivesStore();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Measures the rendezvous safety factor for bound N over the desk family:
// all canonical graphs n <= min(N,3) when quick, n <= 4 otherwise, all label
// pairs with values <= label_cap, all start pairs and offsets 0..texplo/2.
TzEntry measure_tz(std::uint64_t N, std::uint64_t label_cap, bool quick);

EstEntry measure_est(std::uint64_t n_max);

}  // namespace muster
