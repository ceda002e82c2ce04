#include "muster/protocol_known.hpp"

#include "muster/primitives.hpp"

namespace muster {

Frag<std::pair<BitString, std::uint64_t>> communicate(AgentCtx& ctx, std::uint64_t i, BitString s,
                                                      bool flag, KnownSchedule sched) {
    ctx.annotate("com_start", std::to_string(i));
    const BigInt t = sched.texplo();
    const std::uint32_t c = ctx.obs().cur_card;
    std::uint64_t k = 1;
    BitString l;
    bool participate = flag && s.size() <= i;
    for (std::uint64_t j = 1; j <= i; ++j) {
        if (participate && j <= s.size() && s[j - 1] == '0') {
            co_await ctx.wait(t);
            std::uint32_t lowest;
            {
                MinCardScope tracker(ctx);
                co_await explo(ctx, sched.uxs);
                lowest = tracker.take();
            }
            co_await ctx.wait(3 * t);
            l.push_back('0');
            if (c > 1) k = lowest;
        } else {
            co_await ctx.wait(3 * t);
            std::uint32_t lowest;
            {
                MinCardScope tracker(ctx);
                co_await explo(ctx, sched.uxs);
                lowest = tracker.take();
            }
            co_await ctx.wait(t);
            if (c == 1 || lowest == c) {
                l.push_back('1');
            } else {
                l.push_back('0');
                participate = false;
                k = c - lowest;
            }
        }
    }
    ctx.annotate("com_end", l + ":" + std::to_string(k));
    co_return std::pair<BitString, std::uint64_t>{l, k};
}

std::optional<std::uint64_t> extract_label(const BitString& l) {
    for (std::size_t z = 1; z + 1 <= l.size(); z += 2) {  // odd positions, 1-based
        if (l[z - 1] == '0' && l[z] == '1') {
            const auto dec = decode(l.substr(0, z + 1));
            if (!dec.ok) return std::nullopt;
            return from_binary(dec.value);
        }
    }
    return std::nullopt;
}

Frag<KnownResult> gather_known_core(AgentCtx& ctx, KnownSchedule sched, std::uint64_t label) {
    ctx.annotate("phase_start", "0");
    co_await explo(ctx, sched.uxs);
    co_await wait_poll(ctx, sched.texplo());

    std::uint64_t i = 1;
    while (true) {
        ctx.annotate("phase_start", std::to_string(i));
        const std::uint32_t c = ctx.obs().cur_card;
        std::uint64_t lambda = 0;

        {
            GuardScope guard(ctx, [c](const Observation& o) { return o.cur_card > c; });
            try {
                co_await wait_poll(ctx, sched.D(i));
                co_await explo(ctx, sched.uxs);
                co_await wait_poll(ctx, sched.texplo());
                co_await explo(ctx, sched.uxs);
            } catch (const InterruptSignal& s) {
                if (!guard.fired(s)) throw;
            }
        }
        if (ctx.obs().cur_card > c) {
            co_await wait_until_stable(ctx, sched.D(i + 1));
        } else {
            const auto [l, k] = co_await communicate(ctx, i, code(to_binary(label)), true, sched);
            (void)k;
            if (const auto learned = extract_label(l)) lambda = *learned;
            {
                GuardScope guard(ctx, [c](const Observation& o) { return o.cur_card > c; });
                try {
                    co_await wait_poll(ctx, sched.texplo());
                    {
                        BudgetScope budget(ctx, sched.D(i));
                        try {
                            co_await tz_walk(ctx, lambda, sched.uxs);
                        } catch (const InterruptSignal& s) {
                            if (!budget.fired(s)) throw;
                        }
                    }
                    co_await wait_poll(ctx, sched.texplo());
                    co_await explo(ctx, sched.uxs);
                } catch (const InterruptSignal& s) {
                    if (!guard.fired(s)) throw;
                }
            }
            if (ctx.obs().cur_card > c) {
                co_await wait_until_stable(ctx, sched.D(i + 1));
            }
        }
        co_await ctx.wait(sched.D(i + 1));
        if (ctx.obs().cur_card == c && lambda != 0) {
            ctx.set_leader(lambda);
            co_await ctx.declare();
            co_return KnownResult{lambda};
        }
        i += 1;
    }
}

Program gather_known_program(AgentCtx& ctx, KnownSchedule sched, std::uint64_t label) {
    (void)co_await gather_known_core(ctx, sched, label);
}

}  // namespace muster
