#pragma once

#include "muster/constants.hpp"
#include "muster/engine.hpp"

#include <optional>
#include <utility>

namespace muster {

// Movement-coded broadcast among a co-located group. Each of the i steps
// lasts exactly 5*texplo rounds: senders of a 0-bit explore early and idle
// late, everybody else idles early and explores late, and the minimum
// cardinality seen mid-walk reveals the transmitted bit and the sender
// count. Returns (l, k): l is the lexicographically smallest participating
// code padded with 1s, k the number of agents that sent exactly l; (1^i, 1)
// when nobody participates.
Frag<std::pair<BitString, std::uint64_t>> communicate(AgentCtx& ctx, std::uint64_t i, BitString s,
                                                      bool flag, KnownSchedule sched);

// The decoded label carried by a communicate() result: the prefix closed by
// a 01 pair at an odd position, when present.
std::optional<std::uint64_t> extract_label(const BitString& l);

struct KnownResult {
    std::uint64_t leader = 0;
};

// Gathering + leader election under a known upper bound on the graph size.
// Declares when done; the elected label is also exposed via the agent's
// leader output.
Frag<KnownResult> gather_known_core(AgentCtx& ctx, KnownSchedule sched, std::uint64_t label);

Program gather_known_program(AgentCtx& ctx, KnownSchedule sched, std::uint64_t label);

}  // namespace muster
