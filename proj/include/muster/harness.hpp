#pragma once

#include "muster/engine.hpp"
#include "muster/enumerate.hpp"
#include "muster/gossip.hpp"
#include "muster/protocol_known.hpp"
#include "muster/protocol_unknown.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace muster {

// ---------------------------------------------------------------------------
// Run manifests and trace files
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string protocol;  // known | unknown | gossip-known | gossip-unknown | custom
    std::string profile = "desk";
    std::uint64_t bound = 0;  // known upper bound N, when applicable
    std::string graph_text;
    std::vector<AgentSpec> agents;
    std::map<std::uint64_t, BitString> payloads;  // gossip payloads by label
    std::string outcome;
    std::string trace_level = "full";

    Scenario scenario() const;
};

void write_trace(std::ostream& out, const RunManifest& manifest, const Trace& trace);

struct LoadedTrace {
    RunManifest manifest;
    Trace trace;
};

std::optional<LoadedTrace> read_trace(std::istream& in, std::string* error = nullptr);

// ---------------------------------------------------------------------------
// Trace reconstruction
// ---------------------------------------------------------------------------

// Rebuilds positions and occupancies from move events; the backbone of every
// trace-level property check. Requires a full-level trace.
class TraceReplayer {
  public:
    TraceReplayer(const Trace& trace, const Scenario& scenario);

    std::uint32_t position(std::uint64_t label, const BigInt& round) const;
    std::uint32_t occupancy(const BigInt& round, std::uint32_t node) const;
    std::optional<BigInt> wake_round(std::uint64_t label) const;

  private:
    struct AgentTimeline {
        std::uint64_t label;
        std::uint32_t start;
        std::vector<std::pair<BigInt, std::uint32_t>> arrivals;  // (round, node), round = arrival
        std::optional<BigInt> wake;
    };
    std::vector<AgentTimeline> timelines_;
};

// ---------------------------------------------------------------------------
// Property checks
// ---------------------------------------------------------------------------

struct PropertyResult {
    std::string id;
    std::string instance;
    bool pass = true;
    std::string detail;
};

struct Annotation {
    BigInt round;
    std::uint64_t label;
    std::uint32_t node;
    std::string key;
    std::string value;
};

std::vector<Annotation> annotations(const Trace& trace, const std::string& key);

// Engine-level invariants: snapshot consistency, wake causality, swap
// invisibility. Full traces only.
std::vector<PropertyResult> check_engine_properties(const Trace& trace, const Scenario& scenario);

// Known-bound protocol: phase synchrony (P1), co-located alignment (P2), the
// per-phase trichotomy (halving / simultaneous declaration / lock-step), the
// communicate duration law, leader validity and the declaration-round bound.
std::vector<PropertyResult> check_known_run(const Trace& trace, const Scenario& scenario,
                                            const KnownSchedule& sched);

// Unknown-bound protocol: exact failed-hypothesis durations, hypothesis
// start rounds, return-to-origin, safety and liveness at the first index of
// the true configuration.
std::vector<PropertyResult> check_unknown_run(const Trace& trace, const Scenario& scenario,
                                              UnknownSchedule& sched);

// Gossip: inventories equal the ground-truth multiset for every agent,
// every broadcast starts and ends with the whole team co-located, and the
// round account matches the harvest-length formula exactly.
std::vector<PropertyResult> check_gossip_run(const Trace& trace, const Scenario& scenario,
                                             const KnownSchedule& sched,
                                             const std::map<std::uint64_t, BitString>& payloads);

// Dispatch on manifest.protocol; used by the verify subcommand.
std::vector<PropertyResult> verify_trace(const LoadedTrace& loaded);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepInstance {
    std::string id;
    Scenario scenario;
    std::uint64_t bound = 0;                      // known-bound runs
    std::map<std::uint64_t, BitString> payloads;  // gossip runs
};

struct KnownSweepConfig {
    std::size_t n_max = 4;            // exhaustive graphs 2..n_max
    bool include_ring_line_5 = true;  // plus generated ring/line of size 5
    std::vector<std::uint64_t> label_pool = {1, 2, 3, 5, 9};
    std::vector<std::size_t> team_sizes = {2, 3};
    // Wake offsets: every agent draws from {0, 1, texplo/2, D(1)}; the grid
    // enumerates non-decreasing offset tuples with the earliest at 0.
    bool bound_slack = false;  // run a deterministic 1-in-8 subsample with N = n + 2
    std::uint64_t max_instances = 0;  // 0 = unbounded; otherwise deterministic subsample
};

std::vector<SweepInstance> known_sweep_instances(const KnownSweepConfig& config);

// Attaches seeded payloads (length <= max_bits) to every agent.
void attach_gossip_payloads(std::vector<SweepInstance>& instances, std::size_t max_bits);

struct UnknownSweepConfig {
    std::size_t n_max = 3;
    std::vector<std::uint64_t> label_pool = {1, 2, 3};
    std::size_t team_size = 2;
    std::vector<std::uint64_t> wake_offsets = {0, 1};
};

std::vector<SweepInstance> unknown_sweep_instances(const UnknownSweepConfig& config);

struct SweepReport {
    std::uint64_t instances = 0;
    std::uint64_t checks = 0;
    std::vector<PropertyResult> failures;
    bool ok() const { return failures.empty(); }
};

// Runs one known-bound instance end to end and applies every registered
// check. `level` should stay Full so trace properties can reconstruct.
std::vector<PropertyResult> run_known_instance(const SweepInstance& inst, bool fast_forward);
std::vector<PropertyResult> run_gossip_instance(const SweepInstance& inst, bool fast_forward);
std::vector<PropertyResult> run_unknown_instance(const SweepInstance& inst, ProfileId profile);

// Deterministic parallel sweep; failures are reported sorted by instance id
// and optionally persisted (trace next to a manifest) under failure_dir.
SweepReport run_sweep(const std::vector<SweepInstance>& instances,
                      const std::string& protocol,  // known | gossip | unknown
                      std::size_t threads, const std::string& failure_dir);

// ---------------------------------------------------------------------------
// Small utilities shared by tests and the CLI
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

// Ground-truth message multiset (code images) for a payload assignment.
MessageInventory expected_inventory(const std::map<std::uint64_t, BitString>& payloads);

}  // namespace muster
