#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "muster/harness.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace muster;

namespace {

// Independent slow enumerator for the cross-check: enumerates every edge
// mask and port assignment like the production code, but classifies graphs
// by explicit pairwise isomorphism search instead of canonical encodings.
bool isomorphic(const PortLabeledGraph& a, const PortLabeledGraph& b) {
    if (a.node_count() != b.node_count()) return false;
    std::vector<std::uint32_t> perm(a.node_count());
    std::iota(perm.begin(), perm.end(), 0u);
    do {
        if (relabel(a, perm) == b) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

std::size_t slow_count_n3() {
    // All connected simple graphs on 3 nodes: path (3 labelings of the
    // middle) and triangle; times all port assignments.
    std::vector<PortLabeledGraph> classes;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs{{0, 1}, {0, 2}, {1, 2}};
    for (std::uint32_t mask = 1; mask < 8; ++mask) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (std::uint32_t e = 0; e < 3; ++e) {
            if (mask & (1u << e)) edges.push_back(pairs[e]);
        }
        // Connectivity on 3 nodes: need >= 2 edges.
        if (edges.size() < 2) continue;
        // Enumerate port assignments as permutations of incidence order per
        // node, by brute force over all orderings of each node's edges.
        std::vector<std::vector<std::uint32_t>> incident(3);
        for (std::uint32_t e = 0; e < edges.size(); ++e) {
            incident[edges[e].first].push_back(e);
            incident[edges[e].second].push_back(e);
        }
        std::vector<std::vector<std::uint32_t>> orders(3);
        for (int v = 0; v < 3; ++v) {
            orders[v].resize(incident[v].size());
            std::iota(orders[v].begin(), orders[v].end(), 0u);
        }
        while (true) {
            PortLabeledGraph g;
            g.adj.assign(3, {});
            std::vector<std::pair<std::uint32_t, std::uint32_t>> port_of(edges.size());
            for (std::uint32_t v = 0; v < 3; ++v) {
                g.adj[v].resize(incident[v].size());
                for (std::uint32_t slot = 0; slot < incident[v].size(); ++slot) {
                    const std::uint32_t e = incident[v][orders[v][slot]];
                    if (edges[e].first == v) port_of[e].first = slot;
                    else port_of[e].second = slot;
                }
            }
            for (std::uint32_t e = 0; e < edges.size(); ++e) {
                const auto [x, y] = edges[e];
                const auto [px, py] = port_of[e];
                g.adj[x][px] = {y, py};
                g.adj[y][py] = {x, px};
            }
            bool fresh = true;
            for (const auto& c : classes) {
                if (isomorphic(c, g)) {
                    fresh = false;
                    break;
                }
            }
            if (fresh) classes.push_back(g);
            int v = 0;
            for (; v < 3; ++v) {
                if (std::next_permutation(orders[v].begin(), orders[v].end())) break;
            }
            if (v == 3) break;
        }
    }
    return classes.size();
}

}  // namespace

TEST_CASE("graph family enumeration") {
    CHECK(enumerate_graphs_exact(1)->size() == 1);
    // Both port labelings of the single edge collapse to one canonical form.
    CHECK(enumerate_graphs_exact(2)->size() == 1);
    // Cross-check against an independently written enumerator.
    CHECK(enumerate_graphs_exact(3)->size() == slow_count_n3());
    CHECK_THROWS(enumerate_graphs_exact(7));
    CHECK_THROWS(enumerate_graphs_exact(0));
    for (const auto& g : *enumerate_graphs_exact(4)) {
        CHECK(validate(g).ok);
    }
}

TEST_CASE("marked enumeration separates token positions up to symmetry") {
    // The single edge has one marked form (the two ends are symmetric). The
    // path on three nodes has three: the mark at the center, or at the leaf
    // behind the center's port 0, or behind its port 1 (a walker can tell
    // those apart by the entry port).
    CHECK(enumerate_marked_graphs(2)->size() == 1);
    auto marked3 = enumerate_marked_graphs(3);
    std::size_t path_forms = 0;
    for (const auto& mg : *marked3) {
        if (mg.graph.edge_count() == 2) ++path_forms;
    }
    CHECK(path_forms == 3);
}

TEST_CASE("sweeps are deterministic") {
    KnownSweepConfig cfg;
    cfg.n_max = 3;
    cfg.max_instances = 24;
    const auto a = known_sweep_instances(cfg);
    const auto b = known_sweep_instances(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(to_text(a[i].scenario.graph) == to_text(b[i].scenario.graph));
    }
    const auto r1 = run_sweep(a, "known", 2, "");
    const auto r2 = run_sweep(b, "known", 2, "");
    CHECK(r1.instances == r2.instances);
    CHECK(r1.checks == r2.checks);
    CHECK(r1.failures.size() == r2.failures.size());
    CHECK(r1.failures.empty());
}

TEST_CASE("a small unknown sweep passes every registered property") {
    UnknownSweepConfig cfg;
    cfg.n_max = 2;
    const auto instances = unknown_sweep_instances(cfg);
    const auto report = run_sweep(instances, "unknown", 2, "");
    CHECK(report.failures.empty());
    CHECK(report.instances == instances.size());
}

TEST_CASE("planted trace corruption is detected") {
    // A correct run, then a copy with its declaration round edited.
    SweepInstance inst;
    inst.scenario.graph = generate(GraphKind::Line, 2, 0);
    inst.scenario.agents = {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}};
    inst.bound = 2;
    const auto sched = make_known_schedule(2);
    RunOptions opt;
    opt.round_limit = known_declaration_bound(sched, 1) + 16;
    auto result = run(
        inst.scenario,
        [&](AgentCtx& ctx, std::uint64_t label) { return gather_known_program(ctx, sched, label); },
        opt);
    REQUIRE(result.outcome == Outcome::GatheredDeclared);
    REQUIRE(verify_gathering(result.trace, inst.scenario).ok);

    Trace corrupted = result.trace;
    for (auto& t : corrupted.terminals) {
        if (t.label == 2) *t.declared_round += 1;
    }
    const auto report = verify_gathering(corrupted, inst.scenario);
    CHECK_FALSE(report.ok);
    CHECK_FALSE(report.same_round);
}

TEST_CASE("verify_trace recomputes failures from a loaded file") {
    SweepInstance inst;
    inst.scenario.graph = generate(GraphKind::Line, 2, 0);
    inst.scenario.agents = {{1, 0, BigInt(0)}, {2, 1, BigInt(0)}};
    inst.bound = 2;
    const auto sched = make_known_schedule(2);
    RunOptions opt;
    opt.round_limit = known_declaration_bound(sched, 1) + 16;
    const auto result = run(
        inst.scenario,
        [&](AgentCtx& ctx, std::uint64_t label) { return gather_known_program(ctx, sched, label); },
        opt);
    RunManifest m;
    m.protocol = "known";
    m.bound = 2;
    m.graph_text = to_text(inst.scenario.graph);
    m.agents = inst.scenario.agents;
    m.outcome = to_string(result.outcome);

    std::ostringstream out;
    write_trace(out, m, result.trace);

    SUBCASE("the intact file passes everything") {
        std::istringstream in(out.str());
        const auto loaded = read_trace(in);
        REQUIRE(loaded.has_value());
        for (const auto& r : verify_trace(*loaded)) {
            CHECK_MESSAGE(r.pass, r.id, ": ", r.detail);
        }
    }
    SUBCASE("editing a declaration round breaks the gathering property") {
        std::string text = out.str();
        // Bump the declared-round field of agent 2's terminal record.
        const auto pos = text.find("\nT 2 ");
        REQUIRE(pos != std::string::npos);
        const auto digit = pos + 6;
        text[digit] = text[digit] == '9' ? '8' : text[digit] + 1;
        std::istringstream in(text);
        const auto loaded = read_trace(in);
        REQUIRE(loaded.has_value());
        bool any_failed = false;
        for (const auto& r : verify_trace(*loaded)) any_failed = any_failed || !r.pass;
        CHECK(any_failed);
    }
}

TEST_CASE("failure directories capture counterexample traces") {
    namespace fs = std::filesystem;
    const std::string dir = "muster-test-failures";
    fs::remove_all(dir);
    // An instance doomed to fail: with a bound of 2 every excursion has
    // radius one, so agents four apart on a line can never meet.
    SweepInstance inst;
    inst.scenario.graph = generate(GraphKind::Line, 5, 0);
    inst.scenario.agents = {{1, 0, BigInt(0)}, {2, 4, BigInt(0)}};
    inst.bound = 2;  // N < n violates the protocol's precondition
    inst.id = "doomed";
    const auto report = run_sweep({inst}, "known", 1, dir);
    CHECK(!report.failures.empty());
    std::string trace_path;
    if (fs::exists(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().string().find("trace") != std::string::npos) {
                trace_path = entry.path().string();
            }
        }
    }
    REQUIRE(!trace_path.empty());
    // Replaying the persisted counterexample reproduces a failure.
    std::ifstream in(trace_path);
    const auto loaded = read_trace(in);
    REQUIRE(loaded.has_value());
    bool reproduced = false;
    for (const auto& r : verify_trace(*loaded)) reproduced = reproduced || !r.pass;
    CHECK(reproduced);
    fs::remove_all(dir);
}

TEST_CASE("expected inventories form the ground-truth multiset") {
    const std::map<std::uint64_t, BitString> payloads{{1, "0"}, {2, "0"}, {3, ""}};
    const auto inv = expected_inventory(payloads);
    REQUIRE(inv.size() == 2);
    CHECK(inv[0] == std::pair<BitString, std::uint64_t>{"01", 1});
    CHECK(inv[1] == std::pair<BitString, std::uint64_t>{"0001", 2});
}
