#include "muster/gossip.hpp"

#include <algorithm>

namespace muster {

namespace {

bool shorter_then_lex(const BitString& a, const BitString& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

}  // namespace

Frag<MessageInventory> gossip_core(AgentCtx& ctx, KnownSchedule sched, BitString message) {
    ctx.annotate("gossip_start", "");
    const std::uint32_t team = ctx.obs().cur_card;
    std::uint64_t accounted = 0;
    std::uint64_t probe = 2;
    bool sending = true;
    MessageInventory inventory;
    while (accounted != team) {
        const auto [m, k] = co_await communicate(ctx, probe, message, sending, sched);
        const bool harvested =
            m.size() >= 2 && m[m.size() - 2] == '0' && m[m.size() - 1] == '1';
        if (harvested) {
            inventory.push_back({m, k});
            accounted += k;
            probe = 2;
            for (const auto& [msg, count] : inventory) {
                if (msg == message) sending = false;
            }
        } else {
            probe += 2;
        }
    }
    std::sort(inventory.begin(), inventory.end(), [](const auto& a, const auto& b) {
        return shorter_then_lex(a.first, b.first);
    });
    ctx.set_inventory(inventory);
    ctx.annotate("gossip_end", "");
    co_return inventory;
}

Program gossip_known_program(AgentCtx& ctx, KnownSchedule sched, std::uint64_t label,
                             BitString payload) {
    (void)co_await gather_known_core(ctx, sched, label);
    (void)co_await gossip_core(ctx, sched, code(payload));
}

Program gossip_unknown_program(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t label,
                               BitString payload) {
    const UnknownResult gathered = co_await gather_unknown_core(ctx, sched, label);
    const KnownSchedule known = make_known_schedule(gathered.size);
    (void)co_await gossip_core(ctx, known, code(payload));
}

MessageInventory decode_inventory(const MessageInventory& raw) {
    MessageInventory out;
    for (const auto& [msg, count] : raw) {
        out.push_back({decode(msg).value, count});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return shorter_then_lex(a.first, b.first) ||
               (a.first == b.first && a.second < b.second);
    });
    return out;
}

}  // namespace muster
