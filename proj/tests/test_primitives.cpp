#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "muster/enumerate.hpp"
#include "muster/harness.hpp"
#include "muster/primitives.hpp"

using namespace muster;

namespace {

Program explo_probe(AgentCtx& ctx, std::shared_ptr<const UxsEntry> uxs) {
    ctx.annotate("explo_begin", ctx.now().str());
    co_await explo(ctx, uxs);
    ctx.annotate("explo_done", ctx.now().str());
    while (true) co_await ctx.wait(1 << 16);
}

Program tz_probe(AgentCtx& ctx, std::uint64_t label, std::shared_ptr<const UxsEntry> uxs,
                 BigInt budget) {
    {
        BudgetScope scope(ctx, budget);
        try {
            co_await tz_walk(ctx, label, uxs);
        } catch (const InterruptSignal& s) {
            if (!scope.fired(s)) throw;
        }
    }
    co_await ctx.declare();
}

Program tz_fixed_label(AgentCtx& ctx, std::shared_ptr<const UxsEntry> uxs, BigInt budget) {
    co_await tz_probe(ctx, 7, uxs, budget);
}

Program park_forever(AgentCtx& ctx) {
    while (true) co_await ctx.wait(1 << 16);
}

}  // namespace

TEST_CASE("universal sequence for the two-node world has one step") {
    auto uxs = PrimitivesStore::instance().uxs(2);
    CHECK(uxs->offsets.size() == 1);
    CHECK(uxs->texplo == 2);
}

TEST_CASE("universal sequences cover every graph of their size class from every start") {
    for (std::uint64_t N = 2; N <= 4; ++N) {
        auto uxs = PrimitivesStore::instance().uxs(N);
        CHECK(uxs->texplo % 2 == 0);
        for (std::size_t n = 1; n <= N; ++n) {
            auto graphs = enumerate_graphs_exact(n);
            for (const auto& g : *graphs) {
                for (std::uint32_t s = 0; s < g.node_count(); ++s) {
                    CAPTURE(N);
                    CAPTURE(n);
                    CHECK(simulate_uxs_walk(g, s, uxs->offsets).all_visited);
                }
            }
        }
    }
}

TEST_CASE("the exploration fragment lasts exactly its budget and returns home") {
    auto uxs = PrimitivesStore::instance().uxs(4);
    auto graphs = enumerate_graphs_exact(4);
    std::size_t tested = 0;
    for (std::size_t gi = 0; gi < graphs->size(); gi += 17) {
        const auto& g = (*graphs)[gi];
        Scenario sc;
        sc.graph = g;
        sc.agents = {{1, 0, BigInt(0)}, {2, 1, std::nullopt}};
        RunOptions opt;
        opt.round_limit = 4096;
        const auto result = run(
            sc,
            [&](AgentCtx& ctx, std::uint64_t label) {
                return label == 1 ? explo_probe(ctx, uxs) : park_forever(ctx);
            },
            opt);
        const auto begin = annotations(result.trace, "explo_begin");
        const auto done = annotations(result.trace, "explo_done");
        REQUIRE(begin.size() == 1);
        REQUIRE(done.size() == 1);
        CHECK(done[0].round - begin[0].round == uxs->texplo);
        CHECK(done[0].node == begin[0].node);
        ++tested;
    }
    CHECK(tested >= 5);
}

TEST_CASE("a lone dancer returns to its start at every block boundary") {
    auto uxs = PrimitivesStore::instance().uxs(3);
    const BigInt block = 3 * uxs->texplo;
    Scenario sc;
    sc.graph = generate(GraphKind::Line, 5, 0);
    sc.agents = {{5, 0, BigInt(0)}, {9, 4, std::nullopt}};
    RunOptions opt;
    opt.round_limit = 100000;
    const auto result = run(
        sc,
        [&](AgentCtx& ctx, std::uint64_t label) {
            return label == 5 ? tz_probe(ctx, label, uxs, BigInt(12) * block) : park_forever(ctx);
        },
        opt);
    const TraceReplayer replay(result.trace, sc);
    for (int b = 0; b <= 12; ++b) {
        CHECK(replay.position(5, BigInt(b) * block) == 0);
    }
}

TEST_CASE("rendezvous walks with distinct labels meet within the bound") {
    // Spot checks here; the exhaustive oracle runs in the acceptance suite.
    const std::uint64_t N = 3;
    auto uxs = PrimitivesStore::instance().uxs(N);
    auto tz = PrimitivesStore::instance().tz(N);
    const std::uint64_t texplo = uxs->texplo.convert_to<std::uint64_t>();
    auto graphs = enumerate_graphs_exact(3);
    for (const auto& g : *graphs) {
        for (const auto& [l1, l2] : std::vector<std::pair<std::uint64_t, std::uint64_t>>{
                 {1, 2}, {2, 3}, {3, 7}, {5, 6}}) {
            for (std::uint64_t offset : {std::uint64_t{0}, texplo / 2}) {
                Scenario sc;
                sc.graph = g;
                sc.agents = {{l1, 0, BigInt(0)}, {l2, 1, BigInt(offset)}};
                const std::uint64_t l = bit_length(std::min(l1, l2));
                const BigInt bound = BigInt(3 * (2 * l + 4)) * texplo * tz->safety_factor;
                RunOptions opt;
                opt.round_limit = bound + offset + 1;
                opt.stop_when_colocated = true;
                opt.trace_level = TraceLevel::Summary;
                const auto result = run(
                    sc,
                    [&](AgentCtx& ctx, std::uint64_t label) {
                        return tz_probe(ctx, label, uxs, bound + offset + 1);
                    },
                    opt);
                CAPTURE(l1);
                CAPTURE(l2);
                CAPTURE(offset);
                REQUIRE(result.outcome == Outcome::StoppedColocated);
                CHECK(result.trace.final_round - offset <= bound);
            }
        }
    }
}

TEST_CASE("equal parameters carry no meeting guarantee") {
    // Two walks dancing the same word on a rotation-symmetric ring (port 0
    // clockwise, port 1 counter-clockwise at every node) stay antipodal
    // forever: the contract is vacuous for equal inputs.
    auto uxs = PrimitivesStore::instance().uxs(4);
    PortLabeledGraph ring;
    ring.adj = {{{1, 1}, {3, 0}}, {{2, 1}, {0, 0}}, {{3, 1}, {1, 0}}, {{0, 1}, {2, 0}}};
    REQUIRE(validate(ring).ok);
    Scenario sc;
    sc.graph = ring;
    sc.agents = {{7, 0, BigInt(0)}, {8, 2, BigInt(0)}};
    RunOptions opt;
    opt.round_limit = 20000;
    opt.stop_when_colocated = true;
    opt.trace_level = TraceLevel::Summary;
    const auto result = run(
        sc,
        [&](AgentCtx& ctx, std::uint64_t) { return tz_fixed_label(ctx, uxs, BigInt(20000)); },
        opt);
    CHECK(result.outcome != Outcome::StoppedColocated);
}

TEST_CASE("size learning with a marked token node") {
    auto est = PrimitivesStore::instance().est(4);
    SUBCASE("exhaustive over the desk family") {
        for (std::size_t n = 1; n <= 3; ++n) {
            auto graphs = enumerate_graphs_exact(n);
            for (const auto& g : *graphs) {
                for (std::uint32_t token = 0; token < g.node_count(); ++token) {
                    const EstRun r = est_direct(g, token, 0, 4);
                    CAPTURE(n);
                    CAPTURE(token);
                    REQUIRE(r.completed);
                    CHECK(r.size == n);
                    CHECK(r.end_node == token);
                    CHECK(r.moves <= est->t_est[n]);
                }
            }
        }
    }
    SUBCASE("measured worst cases sit under the fifth-power cap") {
        for (std::size_t n = 2; n <= 4; ++n) {
            CHECK(BigInt(est->t_est[n]) <= bigpow(n, 5));
        }
    }
    SUBCASE("a one-move budget aborts learning on larger graphs") {
        const auto g = generate(GraphKind::Ring, 3, 0);
        const EstRun r = est_direct(g, 0, 1, 4);
        CHECK_FALSE(r.completed);
        CHECK(r.moves <= 1);
    }
    SUBCASE("the two-node world is learned in two moves") {
        const auto g = generate(GraphKind::Line, 2, 0);
        const EstRun r = est_direct(g, 1, 0, 4);
        REQUIRE(r.completed);
        CHECK(r.size == 2);
        CHECK(r.end_node == 1);
        CHECK(r.moves == 2);
    }
}

TEST_CASE("caches are stable across lookups") {
    auto a = PrimitivesStore::instance().uxs(3);
    auto b = PrimitivesStore::instance().uxs(3);
    CHECK(a.get() == b.get());
    auto e1 = PrimitivesStore::instance().est(4);
    auto e2 = PrimitivesStore::instance().est(4);
    CHECK(e1.get() == e2.get());
}
