#include "muster/fragment.hpp"

namespace muster {

Frag<void> wait_poll(AgentCtx& ctx, BigInt rounds) {
    BigInt left = std::move(rounds);
    while (left > 0) {
        const BigInt consumed = co_await ctx.wait_frozen(left);
        left -= consumed;
    }
}

Frag<void> wait_until_stable(AgentCtx& ctx, BigInt window) {
    std::uint32_t last = ctx.obs().cur_card;
    BigInt streak = 0;  // waited rounds without variation, current window
    while (true) {
        if (ctx.obs().cur_card != last) {
            last = ctx.obs().cur_card;
            streak = 0;
        }
        if (streak >= window) co_return;
        const BigInt consumed = co_await ctx.wait_frozen(window - streak);
        streak += consumed;
    }
}

}  // namespace muster
