#pragma once

#include "muster/protocol_known.hpp"
#include "muster/protocol_unknown.hpp"

#include <utility>
#include <vector>

namespace muster {

using MessageInventory = std::vector<std::pair<BitString, std::uint64_t>>;

// All-to-all message exchange among co-located, round-synchronized agents
// that share a size bound. `message` must be a code image; raw payloads are
// encoded at the program entry points below. The final inventory (message ->
// sender count) is published through the agent's inventory output.
Frag<MessageInventory> gossip_core(AgentCtx& ctx, KnownSchedule sched, BitString message);

// Gather under a known bound, then gossip. The payload is an arbitrary bit
// string; it is transported as code(payload).
Program gossip_known_program(AgentCtx& ctx, KnownSchedule sched, std::uint64_t label,
                             BitString payload);

// Gather with no a-priori knowledge, then gossip using the learned exact
// graph size as the bound.
Program gossip_unknown_program(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t label,
                               BitString payload);

// Inventory sorted by (length, lexicographic) with payloads decoded.
MessageInventory decode_inventory(const MessageInventory& raw);

}  // namespace muster
