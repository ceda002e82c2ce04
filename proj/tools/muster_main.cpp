// Command-line front end: graph generation, protocol runs, sweeps, trace
// verification and primitive-cache builds.

#include "muster/harness.hpp"
#include "muster/primitives.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace muster;

PortLabeledGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("graph", "cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto parsed = from_text(buffer.str());
    if (!parsed.ok) throw CLI::ValidationError("graph", parsed.error);
    return parsed.graph;
}

// "label@node[:wake]" separated by commas; wake omitted means dormant.
std::vector<AgentSpec> parse_agents(const std::string& spec) {
    std::vector<AgentSpec> agents;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        AgentSpec a;
        const auto at = item.find('@');
        if (at == std::string::npos) throw CLI::ValidationError("agents", "missing @ in " + item);
        a.label = std::stoull(item.substr(0, at));
        std::string rest = item.substr(at + 1);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) {
            a.start_node = static_cast<std::uint32_t>(std::stoul(rest));
        } else {
            a.start_node = static_cast<std::uint32_t>(std::stoul(rest.substr(0, colon)));
            a.wake_round = BigInt(rest.substr(colon + 1));
        }
        agents.push_back(a);
    }
    return agents;
}

// "label=bits" pairs separated by commas; bits may be empty.
std::map<std::uint64_t, BitString> parse_messages(const std::string& spec) {
    std::map<std::uint64_t, BitString> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("messages", "missing = in " + item);
        out[std::stoull(item.substr(0, eq))] = item.substr(eq + 1);
    }
    return out;
}

void emit_trace(const std::string& path, const RunManifest& manifest, const Trace& trace) {
    if (path.empty()) return;
    std::ofstream out(path);
    write_trace(out, manifest, trace);
}

int report_results(const std::vector<PropertyResult>& results) {
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.id;
        if (!r.instance.empty()) std::cout << " [" << r.instance << "]";
        if (!r.pass && !r.detail.empty()) std::cout << " -- " << r.detail;
        std::cout << "\n";
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Round-synchronous mobile-agent gathering simulator"};
    app.require_subcommand(1);

    // gen-graph
    auto* gen = app.add_subcommand("gen-graph", "Generate a port-labeled graph");
    std::string gen_kind = "ring";
    std::size_t gen_n = 4;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--kind", gen_kind, "ring|line|complete|random")->capture_default_str();
    gen->add_option("--n", gen_n, "node count")->capture_default_str();
    gen->add_option("--seed", gen_seed, "seed for random graphs")->capture_default_str();
    gen->add_option("--out", gen_out, "output file (stdout if omitted)");
    gen->callback([&] {
        GraphKind kind = GraphKind::Ring;
        if (gen_kind == "line") kind = GraphKind::Line;
        else if (gen_kind == "complete") kind = GraphKind::Complete;
        else if (gen_kind == "random") kind = GraphKind::RandomConnected;
        else if (gen_kind != "ring") throw CLI::ValidationError("kind", "unknown kind " + gen_kind);
        const auto g = generate(kind, gen_n, gen_seed);
        if (gen_out.empty()) {
            std::cout << to_text(g);
        } else {
            std::ofstream out(gen_out);
            out << to_text(g);
        }
    });

    // run-known
    auto* known = app.add_subcommand("run-known", "Run the known-bound gathering protocol");
    std::string known_graph, known_agents, known_trace, known_profile = "desk";
    std::uint64_t known_bound = 0;
    std::string known_limit = "0";
    known->add_option("--graph", known_graph, "graph file")->required();
    known->add_option("--agents", known_agents, "label@node[:wake],... ")->required();
    known->add_option("--bound", known_bound, "known upper bound N")->required();
    known->add_option("--profile", known_profile, "paper|desk")->capture_default_str();
    known->add_option("--limit", known_limit, "round limit (0 = derived from the bound)");
    known->add_option("--trace", known_trace, "trace output file");
    known->callback([&] {
        Scenario sc{load_graph(known_graph), parse_agents(known_agents)};
        const KnownSchedule sched = make_known_schedule(known_bound);
        std::uint64_t smallest = UINT64_MAX;
        for (const auto& a : sc.agents) smallest = std::min(smallest, a.label);
        RunOptions opt;
        opt.round_limit = BigInt(known_limit);
        if (opt.round_limit == 0)
            opt.round_limit = known_declaration_bound(sched, smallest) * 2 + 1024;
        const auto result = run(
            sc,
            [&](AgentCtx& ctx, std::uint64_t label) {
                return gather_known_program(ctx, sched, label);
            },
            opt);
        RunManifest m;
        m.protocol = "known";
        m.profile = known_profile;
        m.bound = known_bound;
        m.graph_text = to_text(sc.graph);
        m.agents = sc.agents;
        m.outcome = to_string(result.outcome);
        emit_trace(known_trace, m, result.trace);
        std::cout << "outcome: " << to_string(result.outcome) << "\n";
        for (const auto& t : result.trace.terminals) {
            std::cout << "agent " << t.label << ": declared=" << (t.declared_round ? t.declared_round->str() : "-")
                      << " node=" << (t.declared_node ? std::to_string(*t.declared_node) : "-")
                      << " leader=" << (t.leader ? std::to_string(*t.leader) : "-") << "\n";
        }
        if (result.outcome != Outcome::GatheredDeclared) throw CLI::RuntimeError(1);
    });

    // run-unknown
    auto* unknown = app.add_subcommand("run-unknown", "Run the no-knowledge gathering protocol");
    std::string unk_graph, unk_agents, unk_trace, unk_profile = "desk";
    std::uint64_t unk_omega_limit = 0;
    unknown->add_option("--graph", unk_graph, "graph file")->required();
    unknown->add_option("--agents", unk_agents, "label@node[:wake],...")->required();
    unknown->add_option("--profile", unk_profile, "paper|desk")->capture_default_str();
    unknown->add_option("--omega-limit", unk_omega_limit,
                        "run budget: hypotheses up to this index (0 = derived)");
    unknown->add_option("--trace", unk_trace, "trace output file");
    unknown->callback([&] {
        Scenario sc{load_graph(unk_graph), parse_agents(unk_agents)};
        auto sched = make_unknown_schedule(profile_from_string(unk_profile));
        std::uint64_t h_star = unk_omega_limit;
        if (h_star == 0) h_star = sched->omega()->index_of(scenario_configuration(sc));
        RunOptions opt;
        opt.round_limit = sched->run_limit_through(h_star);
        opt.trace_level = TraceLevel::Summary;
        const auto result = run(
            sc,
            [&](AgentCtx& ctx, std::uint64_t label) {
                return gather_unknown_program(ctx, sched, label);
            },
            opt);
        RunManifest m;
        m.protocol = "unknown";
        m.profile = unk_profile;
        m.trace_level = "summary";
        m.graph_text = to_text(sc.graph);
        m.agents = sc.agents;
        m.outcome = to_string(result.outcome);
        emit_trace(unk_trace, m, result.trace);
        std::cout << "outcome: " << to_string(result.outcome) << "\n";
        for (const auto& t : result.trace.terminals) {
            std::cout << "agent " << t.label
                      << ": leader=" << (t.leader ? std::to_string(*t.leader) : "-")
                      << " size=" << (t.size ? std::to_string(*t.size) : "-") << "\n";
        }
        if (result.outcome != Outcome::GatheredDeclared) throw CLI::RuntimeError(1);
    });

    // gossip
    auto* gossip_cmd = app.add_subcommand("gossip", "Gather, then exchange all messages");
    std::string go_graph, go_agents, go_messages, go_trace, go_bound = "auto";
    gossip_cmd->add_option("--graph", go_graph, "graph file")->required();
    gossip_cmd->add_option("--agents", go_agents, "label@node[:wake],...")->required();
    gossip_cmd->add_option("--messages", go_messages, "label=bits,...")->required();
    gossip_cmd->add_option("--bound", go_bound, "known upper bound N, or 'auto'")
        ->capture_default_str();
    gossip_cmd->add_option("--trace", go_trace, "trace output file");
    gossip_cmd->callback([&] {
        Scenario sc{load_graph(go_graph), parse_agents(go_agents)};
        const auto payloads = parse_messages(go_messages);
        RunOptions opt;
        RunResult result;
        RunManifest m;
        m.graph_text = to_text(sc.graph);
        m.agents = sc.agents;
        m.payloads = payloads;
        if (go_bound == "auto") {
            auto sched = make_unknown_schedule(ProfileId::Desk);
            const std::uint64_t h_star = sched->omega()->index_of(scenario_configuration(sc));
            opt.round_limit = sched->run_limit_through(h_star) * 2;
            opt.trace_level = TraceLevel::Summary;
            result = run(
                sc,
                [&](AgentCtx& ctx, std::uint64_t label) {
                    return gossip_unknown_program(ctx, sched, label, payloads.at(label));
                },
                opt);
            m.protocol = "gossip-unknown";
        } else {
            const std::uint64_t bound = std::stoull(go_bound);
            const KnownSchedule sched = make_known_schedule(bound);
            std::uint64_t smallest = UINT64_MAX;
            for (const auto& a : sc.agents) smallest = std::min(smallest, a.label);
            opt.round_limit = known_declaration_bound(sched, smallest) * 4 + 65536;
            result = run(
                sc,
                [&](AgentCtx& ctx, std::uint64_t label) {
                    return gossip_known_program(ctx, sched, label, payloads.at(label));
                },
                opt);
            m.protocol = "gossip-known";
            m.bound = bound;
        }
        m.outcome = to_string(result.outcome);
        emit_trace(go_trace, m, result.trace);
        std::cout << "outcome: " << to_string(result.outcome) << "\n";
        bool all_equal = true;
        for (const auto& t : result.trace.terminals) {
            std::cout << "agent " << t.label << ":";
            for (const auto& [msg, count] : decode_inventory(t.inventory)) {
                std::cout << " (" << (msg.empty() ? "(empty)" : msg) << " x" << count << ")";
            }
            std::cout << "\n";
            if (t.inventory != result.trace.terminals.front().inventory) all_equal = false;
        }
        std::cout << "inventories " << (all_equal ? "agree" : "DISAGREE") << "\n";
        if (result.outcome != Outcome::GatheredDeclared || !all_equal)
            throw CLI::RuntimeError(1);
    });

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Exhaustive small-instance protocol sweeps");
    std::string sweep_protocol = "known", sweep_out, sweep_fail_dir;
    std::size_t sweep_nmax = 3, sweep_threads = 0, sweep_max = 0;
    sweep->add_option("--protocol", sweep_protocol, "known|gossip|unknown")->capture_default_str();
    sweep->add_option("--n-max", sweep_nmax, "largest exhaustive graph size")->capture_default_str();
    sweep->add_option("--threads", sweep_threads, "worker threads (0 = hardware)");
    sweep->add_option("--max-instances", sweep_max, "deterministic subsample size (0 = all)");
    sweep->add_option("--out", sweep_out, "report file");
    sweep->add_option("--failures", sweep_fail_dir, "directory for counterexample traces");
    sweep->callback([&] {
        std::vector<SweepInstance> instances;
        if (sweep_protocol == "unknown") {
            UnknownSweepConfig cfg;
            cfg.n_max = sweep_nmax;
            instances = unknown_sweep_instances(cfg);
        } else {
            KnownSweepConfig cfg;
            cfg.n_max = sweep_nmax;
            cfg.include_ring_line_5 = sweep_nmax >= 4;
            cfg.max_instances = sweep_max;
            instances = known_sweep_instances(cfg);
            if (sweep_protocol == "gossip") attach_gossip_payloads(instances, 8);
        }
        const auto report = run_sweep(instances, sweep_protocol, sweep_threads, sweep_fail_dir);
        std::ostringstream summary;
        summary << "instances=" << report.instances << " checks=" << report.checks
                << " failures=" << report.failures.size() << "\n";
        for (const auto& f : report.failures) {
            summary << "FAIL " << f.id << " [" << f.instance << "] " << f.detail << "\n";
        }
        std::cout << summary.str();
        if (!sweep_out.empty()) {
            std::ofstream out(sweep_out);
            out << summary.str();
        }
        if (!report.ok()) throw CLI::RuntimeError(1);
    });

    // run-scenario: everything named in one structured file
    auto* scen = app.add_subcommand("run-scenario", "Run a scenario file (manifest format)");
    std::string scen_path, scen_trace;
    scen->add_option("scenario", scen_path, "scenario file: MANIFEST json or bare json")
        ->required();
    scen->add_option("--trace", scen_trace, "trace output file");
    scen->callback([&] {
        std::ifstream in(scen_path);
        if (!in) throw CLI::ValidationError("scenario", "cannot open " + scen_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        std::string text = buffer.str();
        if (text.rfind("MANIFEST ", 0) == 0) text = text.substr(9);
        std::istringstream wrapped("MANIFEST " + text);
        std::string error;
        auto loaded = read_trace(wrapped, &error);
        if (!loaded) throw CLI::ValidationError("scenario", error);
        RunManifest m = loaded->manifest;
        Scenario sc = m.scenario();
        RunOptions opt;
        RunResult result;
        if (m.protocol == "known") {
            const KnownSchedule sched = make_known_schedule(m.bound);
            std::uint64_t smallest = UINT64_MAX;
            for (const auto& a : sc.agents) smallest = std::min(smallest, a.label);
            opt.round_limit = known_declaration_bound(sched, smallest) * 2 + 1024;
            result = run(
                sc,
                [&](AgentCtx& ctx, std::uint64_t label) {
                    return gather_known_program(ctx, sched, label);
                },
                opt);
        } else if (m.protocol == "unknown") {
            auto sched = make_unknown_schedule(profile_from_string(m.profile));
            const std::uint64_t h_star = sched->omega()->index_of(scenario_configuration(sc));
            opt.round_limit = sched->run_limit_through(h_star);
            opt.trace_level = TraceLevel::Summary;
            m.trace_level = "summary";
            result = run(
                sc,
                [&](AgentCtx& ctx, std::uint64_t label) {
                    return gather_unknown_program(ctx, sched, label);
                },
                opt);
        } else {
            throw CLI::ValidationError("scenario", "protocol must be known or unknown");
        }
        m.outcome = to_string(result.outcome);
        emit_trace(scen_trace, m, result.trace);
        std::cout << "outcome: " << to_string(result.outcome) << "\n";
        if (result.outcome != Outcome::GatheredDeclared) throw CLI::RuntimeError(1);
    });

    // verify
    auto* verify = app.add_subcommand("verify", "Re-check a recorded trace");
    std::string verify_path;
    verify->add_option("trace", verify_path, "trace file")->required();
    verify->callback([&] {
        std::ifstream in(verify_path);
        if (!in) throw CLI::ValidationError("trace", "cannot open " + verify_path);
        std::string error;
        auto loaded = read_trace(in, &error);
        if (!loaded) throw CLI::ValidationError("trace", error);
        if (report_results(verify_trace(*loaded)) != 0) throw CLI::RuntimeError(1);
    });

    // build-primitives
    auto* build = app.add_subcommand("build-primitives", "Construct and cache the primitives");
    std::uint64_t build_nmax = 5;
    build->add_option("--n-max", build_nmax, "largest bound to prepare")->capture_default_str();
    build->callback([&] {
        auto& store = PrimitivesStore::instance();
        std::cout << "cache directory: " << store.cache_dir() << "\n";
        for (std::uint64_t n = 2; n <= build_nmax; ++n) {
            const auto uxs = store.uxs(n);
            std::cout << "uxs N=" << n << ": length " << uxs->offsets.size() << ", texplo "
                      << uxs->texplo << "\n";
        }
        const auto est = store.est(std::min<std::uint64_t>(build_nmax, 4));
        for (std::uint64_t n = 1; n < est->t_est.size(); ++n) {
            std::cout << "est n=" << n << ": worst " << est->t_est[n] << " moves, reach "
                      << est->reach[n] << "\n";
        }
        for (std::uint64_t n = 2; n <= std::min<std::uint64_t>(build_nmax, 5); ++n) {
            const auto tz = store.tz(n);
            std::cout << "tz N=" << n << ": factor " << tz->safety_factor << " (worst "
                      << tz->worst_meeting << " rounds)\n";
        }
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
