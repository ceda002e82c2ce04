#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "muster/engine.hpp"
#include "muster/harness.hpp"

#include <sstream>

using namespace muster;

namespace {

PortLabeledGraph edge_graph() {
    PortLabeledGraph g;
    g.adj = {{{1, 0}}, {{0, 0}}};
    return g;
}

Program wait_forever(AgentCtx& ctx) {
    while (true) co_await ctx.wait(1 << 20);
}

Program cross_once_then_wait(AgentCtx& ctx) {
    co_await ctx.take_port(0);
    while (true) co_await ctx.wait(1 << 20);
}

Program take_illegal_port(AgentCtx& ctx) { co_await ctx.take_port(7); }

Program wait_then_declare(AgentCtx& ctx, BigInt rounds) {
    if (rounds > 0) co_await ctx.wait(rounds);
    co_await ctx.declare();
}

Program cross_then_declare(AgentCtx& ctx) {
    co_await ctx.take_port(0);
    co_await ctx.declare();
}

Program declare_with_leader(AgentCtx& ctx, std::uint64_t leader, bool move_first) {
    if (move_first) co_await ctx.take_port(0);
    else co_await ctx.wait(1);
    ctx.set_leader(leader);
    co_await ctx.declare();
}

Program huge_wait_then_declare(AgentCtx& ctx, BigInt rounds) {
    co_await ctx.wait(rounds);
    co_await ctx.declare();
}

Program immediate_declare(AgentCtx& ctx) { co_await ctx.declare(); }

Program mixed_workload(AgentCtx& ctx, std::uint64_t seed, std::uint64_t label) {
    std::uint64_t state = seed * 31 + label;
    for (int step = 0; step < 12; ++step) {
        state = splitmix64(state);
        if (state % 3 == 0) {
            const std::uint32_t d = ctx.obs().degree;
            if (d > 0) co_await ctx.take_port(static_cast<std::uint32_t>(state % d));
        } else if (state % 3 == 1) {
            co_await ctx.wait(1 + state % 300);
        } else {
            co_await wait_poll(ctx, 1 + state % 50);
        }
    }
    co_await ctx.declare();
}

Program guarded_wait_probe(AgentCtx& ctx) {
    const std::uint32_t c = ctx.obs().cur_card;
    bool interrupted = false;
    {
        GuardScope guard(ctx, [c](const Observation& o) { return o.cur_card > c; });
        try {
            co_await wait_poll(ctx, 500);
        } catch (const InterruptSignal& s) {
            if (!guard.fired(s)) throw;
            interrupted = true;
        }
    }
    ctx.annotate("interrupted", interrupted ? ctx.now().str() : "no");
    co_await ctx.declare();
}

Program wait_cross_loop(AgentCtx& ctx) {
    co_await ctx.wait(5);
    co_await ctx.take_port(0);
    while (true) co_await ctx.wait(100);
}

Program budget_probe(AgentCtx& ctx) {
    const BigInt start = ctx.now();
    {
        BudgetScope budget(ctx, 37);
        try {
            while (true) {
                co_await ctx.wait(10);
                co_await ctx.take_port(0);
            }
        } catch (const InterruptSignal& s) {
            if (!budget.fired(s)) throw;
        }
    }
    ctx.annotate("elapsed", BigInt(ctx.now() - start).str());
    co_await ctx.declare();
}

Program annotate_and_finish(AgentCtx& ctx, std::uint64_t label) {
    ctx.annotate("hello", std::to_string(label));
    co_await ctx.take_port(0);
    co_await ctx.wait(7);
    co_await ctx.declare();
}

std::string trace_text(const RunResult& result, const Scenario& scenario) {
    RunManifest m;
    m.protocol = "custom";
    m.graph_text = to_text(scenario.graph);
    m.agents = scenario.agents;
    m.outcome = to_string(result.outcome);
    std::ostringstream out;
    write_trace(out, m, result.trace);
    return out.str();
}

}  // namespace

TEST_CASE("waiting forever exhausts the round limit without position changes") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}}};
    RunOptions opt;
    opt.round_limit = 1000;
    const auto result =
        run(sc, [](AgentCtx& ctx, std::uint64_t) { return wait_forever(ctx); }, opt);
    CHECK(result.outcome == Outcome::LimitExceeded);
    for (const auto& e : result.trace.events) {
        CHECK(e.kind != TraceEvent::Kind::Move);
    }
    CHECK(result.trace.final_round == 1000);
}

TEST_CASE("a dormant agent is woken by its first visitor") {
    // The woken agent crosses to the dormant one's node at round 0; the
    // sleeper executes its first instruction at round 1, when the visitor
    // already observes two agents.
    Scenario sc;
    sc.graph = edge_graph();
    sc.agents = {{1, 0, BigInt(0)}, {2, 1, std::nullopt}};
    RunOptions opt;
    opt.round_limit = 50;
    opt.fast_forward = false;
    const auto result = run(
        sc,
        [](AgentCtx& ctx, std::uint64_t label) {
            return label == 1 ? cross_once_then_wait(ctx) : wait_forever(ctx);
        },
        opt);
    const auto wakes = annotations(result.trace, "wake");
    REQUIRE(wakes.size() == 2);
    CHECK(wakes[0].label == 1);
    CHECK(wakes[0].round == 0);
    CHECK(wakes[1].label == 2);
    CHECK(wakes[1].round == 1);
    for (const auto& e : result.trace.events) {
        if (e.kind == TraceEvent::Kind::WaitSpan && e.label == 1) {
            CHECK(e.round_from == 1);
            CHECK(e.cur_card == 2);
            break;
        }
    }
}

TEST_CASE("agents crossing the same edge in opposite directions do not notice") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}}};
    RunOptions opt;
    opt.round_limit = 10;
    const auto result =
        run(sc, [](AgentCtx& ctx, std::uint64_t) { return cross_once_then_wait(ctx); }, opt);
    int moves = 0;
    for (const auto& e : result.trace.events) {
        if (e.kind == TraceEvent::Kind::Move) {
            ++moves;
            CHECK(e.round_from == 0);
            CHECK(e.cur_card == 1);
        }
        if (e.kind == TraceEvent::Kind::WaitSpan) {
            CHECK(e.round_from == 1);
            CHECK(e.cur_card == 1);
        }
    }
    CHECK(moves == 2);
    for (const auto& r : check_engine_properties(result.trace, sc)) {
        CHECK_MESSAGE(r.pass, r.id, ": ", r.detail);
    }
}

TEST_CASE("an illegal port is a protocol error") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}}};
    RunOptions opt;
    opt.round_limit = 10;
    const auto result = run(
        sc,
        [](AgentCtx& ctx, std::uint64_t label) {
            return label == 1 ? take_illegal_port(ctx) : wait_then_declare(ctx, 5);
        },
        opt);
    CHECK(result.outcome == Outcome::ProtocolError);
    CHECK(result.error.find("port") != std::string::npos);
}

TEST_CASE("declarations are checked for simultaneity and co-location") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}}};
    RunOptions opt;
    opt.round_limit = 100;

    SUBCASE("co-located simultaneous declaration gathers") {
        const auto result = run(
            sc,
            [](AgentCtx& ctx, std::uint64_t label) {
                return label == 1 ? cross_then_declare(ctx) : wait_then_declare(ctx, 1);
            },
            opt);
        CHECK(result.outcome == Outcome::GatheredDeclared);
        CHECK(verify_gathering(result.trace, sc).ok);
    }
    SUBCASE("split declarations do not gather") {
        const auto result =
            run(sc, [](AgentCtx& ctx, std::uint64_t) { return immediate_declare(ctx); }, opt);
        CHECK(result.outcome == Outcome::FinishedWithoutGathering);
        const auto report = verify_gathering(result.trace, sc);
        CHECK_FALSE(report.ok);
        CHECK_FALSE(report.same_node);
    }
    SUBCASE("declarations in different rounds do not gather") {
        const auto result = run(
            sc,
            [](AgentCtx& ctx, std::uint64_t label) {
                return label == 1 ? cross_then_declare(ctx) : wait_then_declare(ctx, 4);
            },
            opt);
        CHECK(result.outcome == Outcome::FinishedWithoutGathering);
        CHECK_FALSE(verify_gathering(result.trace, sc).same_round);
    }
    SUBCASE("a leader output must name a real agent") {
        const auto result = run(
            sc,
            [](AgentCtx& ctx, std::uint64_t label) {
                return declare_with_leader(ctx, 99, label == 1);
            },
            opt);
        CHECK(result.outcome == Outcome::GatheredDeclared);
        CHECK_FALSE(verify_gathering(result.trace, sc).leaders_valid);
    }
}

TEST_CASE("event jumps land exactly on adversary wakes") {
    Scenario sc;
    sc.graph = edge_graph();
    sc.agents = {{1, 0, BigInt(0)}, {2, 1, BigInt(1000000)}};
    RunOptions opt;
    opt.round_limit = BigInt("1000000000000000000000000000000");
    const auto result = run(
        sc,
        [](AgentCtx& ctx, std::uint64_t label) {
            return label == 1
                       ? huge_wait_then_declare(ctx, BigInt("500000000000000000000000000000"))
                       : immediate_declare(ctx);
        },
        opt);
    CHECK(result.outcome == Outcome::FinishedWithoutGathering);
    const auto wakes = annotations(result.trace, "wake");
    REQUIRE(wakes.size() == 2);
    CHECK(wakes[1].round == 1000000);
}

TEST_CASE("fast-forward on and off produce identical traces") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::uint64_t n = 2 + splitmix64(seed) % 4;
        const auto graph = n == 2 ? edge_graph() : generate(GraphKind::RandomConnected, n, seed);
        Scenario sc;
        sc.graph = graph;
        const auto start_b = static_cast<std::uint32_t>(1 + splitmix64(seed + 1) % (n - 1));
        sc.agents = {{1, 0, BigInt(0)}, {2, start_b, BigInt(splitmix64(seed + 2) % 20)}};
        const auto factory = [seed](AgentCtx& ctx, std::uint64_t label) {
            return mixed_workload(ctx, seed, label);
        };
        RunOptions opt;
        opt.round_limit = 100000;
        opt.fast_forward = true;
        const auto fast = run(sc, factory, opt);
        opt.fast_forward = false;
        const auto slow = run(sc, factory, opt);
        CHECK(fast.outcome == slow.outcome);
        CHECK(trace_text(fast, sc) == trace_text(slow, sc));
    }
}

TEST_CASE("identical scenarios and programs give byte-identical traces across runs") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(7)}}};
    RunOptions opt;
    opt.round_limit = 50000;
    const auto factory = [](AgentCtx& ctx, std::uint64_t label) {
        return mixed_workload(ctx, 12345, label);
    };
    const auto first = run(sc, factory, opt);
    const auto second = run(sc, factory, opt);
    CHECK(trace_text(first, sc) == trace_text(second, sc));
}

TEST_CASE("interrupt guards abandon a block the round the condition holds") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}}};
    RunOptions opt;
    opt.round_limit = 1000;
    const auto result = run(
        sc,
        [](AgentCtx& ctx, std::uint64_t label) {
            return label == 1 ? guarded_wait_probe(ctx) : wait_cross_loop(ctx);
        },
        opt);
    const auto notes = annotations(result.trace, "interrupted");
    REQUIRE(notes.size() == 1);
    // The intruder moves at round 5, so it is present at round 6's snapshot
    // and the guard must fire exactly then.
    CHECK(notes[0].value == "6");
}

TEST_CASE("budget scopes stop a fragment after exactly its instruction budget") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}}};
    RunOptions opt;
    opt.round_limit = 1000;
    const auto result =
        run(sc, [](AgentCtx& ctx, std::uint64_t) { return budget_probe(ctx); }, opt);
    const auto notes = annotations(result.trace, "elapsed");
    REQUIRE(notes.size() == 2);
    for (const auto& note : notes) CHECK(note.value == "37");
}

TEST_CASE("trace files round-trip") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(3)}}};
    RunOptions opt;
    opt.round_limit = 64;
    const auto result = run(
        sc, [](AgentCtx& ctx, std::uint64_t label) { return annotate_and_finish(ctx, label); },
        opt);
    RunManifest m;
    m.protocol = "custom";
    m.graph_text = to_text(sc.graph);
    m.agents = sc.agents;
    m.outcome = to_string(result.outcome);
    std::ostringstream out;
    write_trace(out, m, result.trace);
    std::istringstream in(out.str());
    std::string error;
    const auto loaded = read_trace(in, &error);
    REQUIRE_MESSAGE(loaded.has_value(), error);
    std::ostringstream again;
    write_trace(again, loaded->manifest, loaded->trace);
    CHECK(again.str() == out.str());
}

TEST_CASE("scenario validation") {
    Scenario sc{edge_graph(), {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}}};
    CHECK(validate_scenario(sc).ok);
    Scenario dup = sc;
    dup.agents[1].label = 1;
    CHECK_FALSE(validate_scenario(dup).ok);
    Scenario same_start = sc;
    same_start.agents[1].start_node = 0;
    CHECK_FALSE(validate_scenario(same_start).ok);
    Scenario all_dormant = sc;
    all_dormant.agents[0].wake_round.reset();
    all_dormant.agents[1].wake_round.reset();
    CHECK_FALSE(validate_scenario(all_dormant).ok);
    Scenario lone = sc;
    lone.agents.pop_back();
    CHECK_FALSE(validate_scenario(lone).ok);
}
