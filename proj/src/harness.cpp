#include "muster/harness.hpp"

#include "muster/primitives.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace muster {

namespace {
using nlohmann::json;
namespace fs = std::filesystem;

std::string opt_str(const std::optional<BigInt>& v) { return v ? v->str() : "-"; }

template <typename T>
std::string opt_num(const std::optional<T>& v) {
    return v ? std::to_string(*v) : "-";
}
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Manifests and trace files
// ---------------------------------------------------------------------------

Scenario RunManifest::scenario() const {
    Scenario s;
    auto parsed = from_text(graph_text);
    if (!parsed.ok) throw std::runtime_error("manifest graph invalid: " + parsed.error);
    s.graph = std::move(parsed.graph);
    s.agents = agents;
    return s;
}

namespace {

json manifest_to_json(const RunManifest& m) {
    json j;
    j["protocol"] = m.protocol;
    j["profile"] = m.profile;
    j["bound"] = m.bound;
    j["graph"] = m.graph_text;
    // Canonical-form hash of the world, for quick reproducibility checks.
    if (auto parsed = from_text(m.graph_text); parsed.ok && parsed.graph.node_count() <= 8) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : canonical_encode(parsed.graph)) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        j["graph_hash"] = h;
    }
    j["outcome"] = m.outcome;
    j["trace_level"] = m.trace_level;
    json agents = json::array();
    for (const auto& a : m.agents) {
        agents.push_back({{"label", a.label},
                          {"start", a.start_node},
                          {"wake", a.wake_round ? json(a.wake_round->str()) : json(nullptr)}});
    }
    j["agents"] = agents;
    json payloads = json::object();
    for (const auto& [label, bits] : m.payloads) payloads[std::to_string(label)] = bits;
    j["payloads"] = payloads;
    return j;
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.protocol = j.value("protocol", "custom");
    m.profile = j.value("profile", "desk");
    m.bound = j.value("bound", std::uint64_t{0});
    m.graph_text = j.value("graph", "");
    m.outcome = j.value("outcome", "");
    m.trace_level = j.value("trace_level", "full");
    for (const auto& a : j.value("agents", json::array())) {
        AgentSpec spec;
        spec.label = a.at("label").get<std::uint64_t>();
        spec.start_node = a.at("start").get<std::uint32_t>();
        if (!a.at("wake").is_null()) spec.wake_round = BigInt(a.at("wake").get<std::string>());
        m.agents.push_back(spec);
    }
    for (const auto& [key, value] : j.value("payloads", json::object()).items()) {
        m.payloads[std::stoull(key)] = value.get<std::string>();
    }
    return m;
}

std::string field_or_dash(const std::string& s) { return s.empty() ? "-" : s; }

}  // namespace

void write_trace(std::ostream& out, const RunManifest& manifest, const Trace& trace) {
    out << "MANIFEST " << manifest_to_json(manifest).dump() << "\n";
    for (const auto& e : trace.events) {
        switch (e.kind) {
            case TraceEvent::Kind::Move:
                out << "M " << e.round_from << " " << e.label << " " << e.node_before << " "
                    << e.port << " " << e.node_after << " " << e.cur_card << "\n";
                break;
            case TraceEvent::Kind::WaitSpan:
                out << "W " << e.round_from << " " << e.round_to << " " << e.label << " "
                    << e.node_before << " " << e.cur_card << "\n";
                break;
            case TraceEvent::Kind::Declare:
                out << "D " << e.round_from << " " << e.label << " " << e.node_before << " "
                    << e.cur_card << "\n";
                break;
            case TraceEvent::Kind::Annotate:
                out << "A " << e.round_from << " " << e.label << " " << e.node_before << " "
                    << e.key << " " << field_or_dash(e.value) << "\n";
                break;
        }
    }
    for (const auto& t : trace.terminals) {
        out << "T " << t.label << " " << opt_str(t.declared_round) << " "
            << opt_num(t.declared_node) << " " << opt_num(t.leader) << " " << opt_num(t.size)
            << " " << t.moves_executed << " " << t.waits_executed << " " << t.inventory.size();
        for (const auto& [msg, count] : t.inventory) {
            out << " " << (msg.empty() ? "." : msg) << " " << count;
        }
        out << "\n";
    }
    out << "F " << trace.final_round << " " << field_or_dash(manifest.outcome) << "\n";
}

std::optional<LoadedTrace> read_trace(std::istream& in, std::string* error) {
    auto fail = [&](const std::string& msg) {
        if (error) *error = msg;
        return std::nullopt;
    };
    LoadedTrace out;
    std::string line;
    if (!std::getline(in, line) || line.rfind("MANIFEST ", 0) != 0)
        return fail("missing MANIFEST line");
    try {
        out.manifest = manifest_from_json(json::parse(line.substr(9)));
    } catch (const std::exception& e) {
        return fail(std::string("bad manifest: ") + e.what());
    }
    std::uint64_t seq = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        TraceEvent e;
        e.seq = seq++;
        std::string round;
        if (tag == "M") {
            std::string r;
            ls >> r >> e.label >> e.node_before >> e.port >> e.node_after >> e.cur_card;
            e.kind = TraceEvent::Kind::Move;
            e.round_from = BigInt(r);
            e.round_to = e.round_from;
            out.trace.events.push_back(e);
        } else if (tag == "W") {
            std::string from, to;
            ls >> from >> to >> e.label >> e.node_before >> e.cur_card;
            e.kind = TraceEvent::Kind::WaitSpan;
            e.round_from = BigInt(from);
            e.round_to = BigInt(to);
            e.node_after = e.node_before;
            out.trace.events.push_back(e);
        } else if (tag == "D") {
            std::string r;
            ls >> r >> e.label >> e.node_before >> e.cur_card;
            e.kind = TraceEvent::Kind::Declare;
            e.round_from = BigInt(r);
            e.round_to = e.round_from;
            e.node_after = e.node_before;
            out.trace.events.push_back(e);
        } else if (tag == "A") {
            std::string r, value;
            ls >> r >> e.label >> e.node_before >> e.key >> value;
            e.kind = TraceEvent::Kind::Annotate;
            e.round_from = BigInt(r);
            e.round_to = e.round_from;
            e.value = value == "-" ? "" : value;
            out.trace.events.push_back(e);
        } else if (tag == "T") {
            AgentTerminal t;
            std::string declared_round, declared_node, leader, size, moves, waits;
            std::size_t inv = 0;
            ls >> t.label >> declared_round >> declared_node >> leader >> size >> moves >>
                waits >> inv;
            if (declared_round != "-") t.declared_round = BigInt(declared_round);
            if (declared_node != "-") t.declared_node = std::stoul(declared_node);
            if (leader != "-") t.leader = std::stoull(leader);
            if (size != "-") t.size = std::stoull(size);
            t.moves_executed = BigInt(moves);
            t.waits_executed = BigInt(waits);
            for (std::size_t i = 0; i < inv; ++i) {
                std::string msg;
                std::uint64_t count = 0;
                ls >> msg >> count;
                t.inventory.push_back({msg == "." ? "" : msg, count});
            }
            out.trace.terminals.push_back(std::move(t));
        } else if (tag == "F") {
            std::string r, outcome;
            ls >> r >> outcome;
            out.trace.final_round = BigInt(r);
            out.manifest.outcome = outcome == "-" ? "" : outcome;
        } else {
            return fail("unknown record tag: " + tag);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// TraceReplayer
// ---------------------------------------------------------------------------

TraceReplayer::TraceReplayer(const Trace& trace, const Scenario& scenario) {
    for (const auto& a : scenario.agents) {
        AgentTimeline t;
        t.label = a.label;
        t.start = a.start_node;
        timelines_.push_back(std::move(t));
    }
    auto timeline_of = [&](std::uint64_t label) -> AgentTimeline& {
        for (auto& t : timelines_) {
            if (t.label == label) return t;
        }
        throw std::out_of_range("label not in scenario");
    };
    for (const auto& e : trace.events) {
        if (e.kind == TraceEvent::Kind::Move) {
            timeline_of(e.label).arrivals.push_back({e.round_from + 1, e.node_after});
        } else if (e.kind == TraceEvent::Kind::Annotate && e.key == "wake") {
            auto& t = timeline_of(e.label);
            if (!t.wake) t.wake = e.round_from;
        }
    }
}

std::uint32_t TraceReplayer::position(std::uint64_t label, const BigInt& round) const {
    for (const auto& t : timelines_) {
        if (t.label != label) continue;
        // Last arrival at or before the round, if any.
        auto it = std::upper_bound(
            t.arrivals.begin(), t.arrivals.end(), round,
            [](const BigInt& r, const std::pair<BigInt, std::uint32_t>& a) { return r < a.first; });
        return it == t.arrivals.begin() ? t.start : std::prev(it)->second;
    }
    throw std::out_of_range("label not in scenario");
}

std::uint32_t TraceReplayer::occupancy(const BigInt& round, std::uint32_t node) const {
    std::uint32_t count = 0;
    for (const auto& t : timelines_) {
        if (position(t.label, round) == node) ++count;
    }
    return count;
}

std::optional<BigInt> TraceReplayer::wake_round(std::uint64_t label) const {
    for (const auto& t : timelines_) {
        if (t.label == label) return t.wake;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Property checks
// ---------------------------------------------------------------------------

std::vector<Annotation> annotations(const Trace& trace, const std::string& key) {
    std::vector<Annotation> out;
    for (const auto& e : trace.events) {
        if (e.kind == TraceEvent::Kind::Annotate && e.key == key) {
            out.push_back({e.round_from, e.label, e.node_before, e.key, e.value});
        }
    }
    return out;
}

namespace {

struct Checker {
    std::vector<PropertyResult> results;
    void check(const std::string& id, bool pass, const std::string& detail = "") {
        results.push_back({id, "", pass, pass ? "" : detail});
    }
};

}  // namespace

std::vector<PropertyResult> check_engine_properties(const Trace& trace, const Scenario& scenario) {
    Checker c;
    TraceReplayer replay(trace, scenario);

    // Single pass in round order: events are sorted by round, and a move
    // recorded at round r changes positions at r+1, so verifying an event
    // against the occupancy accumulated from all strictly earlier moves is
    // exact.
    bool snapshot_ok = true;
    std::string snapshot_detail;
    {
        std::map<std::uint64_t, std::uint32_t> pos;
        std::vector<std::uint32_t> occ(scenario.graph.node_count(), 0);
        for (const auto& a : scenario.agents) {
            pos[a.label] = a.start_node;
            occ[a.start_node] += 1;
        }
        std::size_t i = 0;
        while (i < trace.events.size() && snapshot_ok) {
            const BigInt round = trace.events[i].round_from;
            std::size_t j = i;
            while (j < trace.events.size() && trace.events[j].round_from == round) ++j;
            for (std::size_t t = i; t < j; ++t) {
                const auto& e = trace.events[t];
                if (e.kind == TraceEvent::Kind::Annotate) continue;
                if (e.cur_card != occ[e.node_before]) {
                    snapshot_ok = false;
                    snapshot_detail = "round " + e.round_from.str() + " label " +
                                      std::to_string(e.label) + ": recorded " +
                                      std::to_string(e.cur_card) + ", reconstructed " +
                                      std::to_string(occ[e.node_before]);
                    break;
                }
            }
            for (std::size_t t = i; t < j; ++t) {
                const auto& e = trace.events[t];
                if (e.kind == TraceEvent::Kind::Move) {
                    occ[pos[e.label]] -= 1;
                    pos[e.label] = e.node_after;
                    occ[e.node_after] += 1;
                }
            }
            i = j;
        }
    }
    c.check("engine.snapshot_consistency", snapshot_ok, snapshot_detail);

    bool wake_ok = true;
    std::string wake_detail;
    for (const auto& a : scenario.agents) {
        const auto wake = replay.wake_round(a.label);
        // Earliest arrival of another agent at this agent's start node.
        std::optional<BigInt> first_visit;
        for (const auto& e : trace.events) {
            if (e.kind == TraceEvent::Kind::Move && e.label != a.label &&
                e.node_after == a.start_node) {
                if (!first_visit || e.round_from + 1 < *first_visit)
                    first_visit = e.round_from + 1;
            }
        }
        std::optional<BigInt> expected;
        if (a.wake_round) expected = a.wake_round;
        if (first_visit && (!expected || *first_visit < *expected)) expected = first_visit;
        if (expected != wake) {
            wake_ok = false;
            wake_detail = "agent " + std::to_string(a.label) + ": woke at " +
                          (wake ? wake->str() : "never") + ", expected " +
                          (expected ? expected->str() : "never");
            break;
        }
        // No instruction can precede the wake round.
        if (wake) {
            for (const auto& e : trace.events) {
                if (e.label == a.label && e.kind != TraceEvent::Kind::Annotate &&
                    e.round_from < *wake) {
                    wake_ok = false;
                    wake_detail = "agent " + std::to_string(a.label) + " acted before waking";
                    break;
                }
            }
        }
    }
    c.check("engine.wake_causality", wake_ok, wake_detail);

    bool swap_ok = true;
    std::string swap_detail;
    std::vector<const TraceEvent*> moves;
    for (const auto& e : trace.events) {
        if (e.kind == TraceEvent::Kind::Move) moves.push_back(&e);
    }
    for (std::size_t i = 0; i < moves.size(); ++i) {
        for (std::size_t j = i + 1; j < moves.size(); ++j) {
            if (moves[j]->round_from != moves[i]->round_from) break;
            const auto *a = moves[i], *b = moves[j];
            if (a->node_before == b->node_after && a->node_after == b->node_before &&
                a->node_before != b->node_before) {
                // A swap: neither may count the other at r or r+1.
                const BigInt r = a->round_from;
                if (replay.position(a->label, r) == replay.position(b->label, r) ||
                    replay.position(a->label, r + 1) == replay.position(b->label, r + 1)) {
                    swap_ok = false;
                    swap_detail = "agents " + std::to_string(a->label) + "/" +
                                  std::to_string(b->label) + " co-located across a swap at " +
                                  r.str();
                }
            }
        }
    }
    c.check("engine.swap_invisibility", swap_ok, swap_detail);

    return c.results;
}

namespace {

struct PhaseTable {
    // per label: (phase index -> (round, node))
    std::map<std::uint64_t, std::map<std::uint64_t, std::pair<BigInt, std::uint32_t>>> starts;
    std::uint64_t max_phase = 0;

    explicit PhaseTable(const Trace& trace) {
        for (const auto& a : annotations(trace, "phase_start")) {
            const std::uint64_t i = std::stoull(a.value);
            starts[a.label][i] = {a.round, a.node};
            max_phase = std::max(max_phase, i);
        }
    }
};

}  // namespace

std::vector<PropertyResult> check_known_run(const Trace& trace, const Scenario& scenario,
                                            const KnownSchedule& sched) {
    Checker c;
    const BigInt t_explo = sched.texplo();
    PhaseTable phases(trace);
    TraceReplayer replay(trace, scenario);

    std::uint64_t smallest_label = UINT64_MAX;
    for (const auto& a : scenario.agents) smallest_label = std::min(smallest_label, a.label);
    const std::uint64_t ell = bit_length(smallest_label);

    // P1: phase starts of any two agents differ by at most D(i).
    bool p1 = true;
    std::string p1_detail;
    for (std::uint64_t i = 0; i <= phases.max_phase && p1; ++i) {
        std::vector<BigInt> rounds;
        for (const auto& [label, table] : phases.starts) {
            if (auto it = table.find(i); it != table.end()) rounds.push_back(it->second.first);
        }
        for (std::size_t a = 0; a < rounds.size() && p1; ++a) {
            for (std::size_t b = a + 1; b < rounds.size(); ++b) {
                const BigInt diff =
                    rounds[a] > rounds[b] ? rounds[a] - rounds[b] : rounds[b] - rounds[a];
                if (diff > sched.D(i)) {
                    p1 = false;
                    p1_detail = "phase " + std::to_string(i) + ": spread " + diff.str() +
                                " exceeds " + sched.D(i).str();
                    break;
                }
            }
        }
    }
    c.check("known.p1_phase_spread", p1, p1_detail);

    // P2: co-located phase starts are simultaneous.
    bool p2 = true;
    std::string p2_detail;
    for (const auto& [la, ta] : phases.starts) {
        for (const auto& [i, at] : ta) {
            if (i == 0) continue;
            for (const auto& [lb, tb] : phases.starts) {
                if (lb == la) continue;
                auto it = tb.find(i);
                if (it == tb.end()) continue;
                if (replay.position(lb, at.first) == at.second && it->second.first != at.first) {
                    p2 = false;
                    p2_detail = "phase " + std::to_string(i) + ": agents " + std::to_string(la) +
                                "/" + std::to_string(lb) + " share a node but not a start round";
                }
            }
        }
    }
    c.check("known.p2_colocated_alignment", p2, p2_detail);

    // Per-phase trichotomy.
    bool tri = true;
    std::string tri_detail;
    const bool declared = !trace.terminals.empty() && trace.terminals.front().declared_round &&
                          std::all_of(trace.terminals.begin(), trace.terminals.end(),
                                      [](const AgentTerminal& t) {
                                          return t.declared_round.has_value();
                                      });
    for (std::uint64_t i = 0; i <= phases.max_phase && tri; ++i) {
        // Collect this phase's starts and the next phase's.
        std::vector<std::pair<BigInt, std::uint32_t>> cur, next;
        bool complete = true;
        for (const auto& [label, table] : phases.starts) {
            auto it = table.find(i);
            if (it == table.end()) {
                complete = false;
                continue;
            }
            cur.push_back(it->second);
            auto jt = table.find(i + 1);
            if (jt != table.end()) next.push_back(jt->second);
        }
        if (!complete || cur.empty()) continue;
        BigInt t_f = cur.front().first;
        for (const auto& [r, node] : cur) t_f = std::min(t_f, r);

        if (next.empty()) {
            // Final phase: P4 must hold.
            if (!declared) {
                tri = false;
                tri_detail = "final phase " + std::to_string(i) + " without declaration";
                break;
            }
            const BigInt expect =
                t_f + sched.D(i + 1) + 2 * sched.D(i) + BigInt(5 * i + 6) * t_explo;
            for (const auto& t : trace.terminals) {
                if (*t.declared_round != expect) {
                    tri = false;
                    tri_detail = "declaration at " + t.declared_round->str() + ", formula gives " +
                                 expect.str();
                }
            }
            continue;
        }
        if (next.size() != cur.size()) {
            tri = false;
            tri_detail = "phase " + std::to_string(i + 1) + " reached by only some agents";
            break;
        }
        // P5: lock-step durations.
        bool p5 = i < 2 * ell + 2;
        const BigInt expected_duration =
            i == 0 ? 2 * t_explo
                   : sched.D(i + 1) + 2 * sched.D(i) + BigInt(5 * i + 6) * t_explo;
        for (const auto& [label, table] : phases.starts) {
            const BigInt dur = table.at(i + 1).first - table.at(i).first;
            if (dur != expected_duration) p5 = false;
        }
        if (p5) continue;
        // P3: halving plus the start-window alternative.
        std::set<std::pair<std::string, std::uint32_t>> phi_cur, phi_next;
        for (const auto& [r, node] : cur) phi_cur.insert({r.str(), node});
        for (const auto& [r, node] : next) phi_next.insert({r.str(), node});
        const bool halved = phi_next.size() <= phi_cur.size() / 2;
        auto within = [&](const BigInt& lo, const BigInt& hi) {
            for (const auto& [r, node] : next) {
                if (r < lo || r > hi) return false;
            }
            return true;
        };
        const bool window1 = within(t_f + sched.D(i) + 2 * sched.D(i + 1),
                                    t_f + 2 * sched.D(i) + 2 * sched.D(i + 1) + 3 * t_explo);
        const bool window2 =
            within(t_f + 2 * sched.D(i + 1) + sched.D(i) + BigInt(5 * i + 4) * t_explo,
                   t_f + 2 * sched.D(i + 1) + 2 * sched.D(i) + BigInt(5 * i + 6) * t_explo);
        if (!(halved && (window1 || window2))) {
            tri = false;
            tri_detail = "phase " + std::to_string(i) + ": neither lock-step nor halving (" +
                         std::to_string(phi_cur.size()) + " -> " +
                         std::to_string(phi_next.size()) + ")";
        }
    }
    c.check("known.p3p4p5_trichotomy", tri, tri_detail);

    // Communicate duration and placement.
    bool com = true;
    std::string com_detail;
    const auto com_starts = annotations(trace, "com_start");
    const auto com_ends = annotations(trace, "com_end");
    std::map<std::uint64_t, std::vector<const Annotation*>> starts_by_label, ends_by_label;
    for (const auto& a : com_starts) starts_by_label[a.label].push_back(&a);
    for (const auto& a : com_ends) ends_by_label[a.label].push_back(&a);
    for (const auto& [label, starts] : starts_by_label) {
        const auto& ends = ends_by_label[label];
        if (ends.size() != starts.size()) {
            com = false;
            com_detail = "unmatched broadcast annotations";
            break;
        }
        for (std::size_t idx = 0; idx < starts.size(); ++idx) {
            const std::uint64_t i = std::stoull(starts[idx]->value);
            const BigInt expect = BigInt(5) * i * t_explo;
            if (ends[idx]->round - starts[idx]->round != expect ||
                ends[idx]->node != starts[idx]->node) {
                com = false;
                com_detail = "broadcast with i=" + std::to_string(i) + " lasted " +
                             BigInt(ends[idx]->round - starts[idx]->round).str() +
                             ", expected " + expect.str();
            }
        }
    }
    c.check("known.communicate_duration", com, com_detail);

    // Gathering, leader election, declaration bound.
    const auto report = verify_gathering(trace, scenario);
    c.check("known.gathering", report.ok,
            report.issues.empty() ? "" : report.issues.front());
    bool leader_present = true;
    for (const auto& t : trace.terminals) {
        if (!t.leader) leader_present = false;
    }
    c.check("known.leader_elected", leader_present, "missing leader output");

    std::optional<BigInt> earliest_wake;
    for (const auto& a : scenario.agents) {
        if (a.wake_round && (!earliest_wake || *a.wake_round < *earliest_wake))
            earliest_wake = a.wake_round;
    }
    bool bound_ok = true;
    std::string bound_detail;
    if (declared && earliest_wake) {
        const BigInt bound = *earliest_wake + known_declaration_bound(sched, smallest_label);
        for (const auto& t : trace.terminals) {
            if (*t.declared_round > bound) {
                bound_ok = false;
                bound_detail = "declared at " + t.declared_round->str() + " after the bound " +
                               bound.str();
            }
        }
    }
    c.check("known.declaration_bound", bound_ok, bound_detail);

    return c.results;
}

std::vector<PropertyResult> check_unknown_run(const Trace& trace, const Scenario& scenario,
                                              UnknownSchedule& sched) {
    Checker c;
    const auto starts = annotations(trace, "hyp_start");
    const auto ends = annotations(trace, "hyp_end");
    const auto wakes = annotations(trace, "wake");

    std::map<std::uint64_t, BigInt> wake_of;
    for (const auto& w : wakes) {
        if (!wake_of.count(w.label)) wake_of.emplace(w.label, w.round);
    }
    std::map<std::uint64_t, std::uint32_t> start_node_of;
    for (const auto& a : scenario.agents) start_node_of[a.label] = a.start_node;

    bool timing = true, origin = true, duration = true;
    std::string timing_detail, origin_detail, duration_detail;
    std::map<std::uint64_t, std::uint64_t> declared_h;

    std::map<std::uint64_t, std::map<std::uint64_t, BigInt>> start_rounds;  // label -> h -> round
    for (const auto& a : starts) {
        const std::uint64_t h = std::stoull(a.value);
        start_rounds[a.label][h] = a.round;
        // Start round is the wake plus the budgets of all earlier hypotheses.
        BigInt expect = wake_of.at(a.label);
        for (std::uint64_t i = 1; i < h; ++i) expect += sched.row(i).t_hyp;
        if (a.round != expect) {
            timing = false;
            timing_detail = "agent " + std::to_string(a.label) + " started h=" +
                            std::to_string(h) + " at " + a.round.str() + ", expected " +
                            expect.str();
        }
        if (a.node != start_node_of[a.label]) {
            origin = false;
            origin_detail = "agent " + std::to_string(a.label) + " started h=" +
                            std::to_string(h) + " away from its initial node";
        }
    }
    for (const auto& a : ends) {
        const auto colon = a.value.find(':');
        const std::uint64_t h = std::stoull(a.value.substr(0, colon));
        const bool result = a.value.substr(colon + 1) == "true";
        if (result) {
            declared_h[a.label] = h;
            continue;
        }
        const BigInt dur = BigInt(a.round - start_rounds[a.label][h]);
        if (dur != sched.row(h).t_hyp) {
            duration = false;
            duration_detail = "failed hypothesis " + std::to_string(h) + " lasted " + dur.str() +
                              ", budget " + sched.row(h).t_hyp.str();
        }
    }
    c.check("unknown.start_rounds", timing, timing_detail);
    c.check("unknown.return_to_origin", origin, origin_detail);
    c.check("unknown.exact_duration", duration, duration_detail);

    // Safety: simultaneous co-located declaration with the right leader/size.
    const auto report = verify_gathering(trace, scenario);
    c.check("unknown.safety", report.ok, report.issues.empty() ? "" : report.issues.front());

    const Configuration truth = scenario_configuration(scenario);
    std::uint64_t smallest = truth.smallest_label();
    bool outputs = true;
    std::string outputs_detail;
    for (const auto& t : trace.terminals) {
        if (!t.leader || *t.leader != smallest || !t.size ||
            *t.size != scenario.graph.node_count()) {
            outputs = false;
            outputs_detail = "agent " + std::to_string(t.label) + " leader/size outputs wrong";
        }
    }
    c.check("unknown.leader_and_size", outputs, outputs_detail);

    // Liveness at the first index of the true configuration.
    // Liveness bound: the true configuration's first index is the last
    // hypothesis the run can reach; an earlier configuration with the same
    // size and label set may legitimately pass the size-only verification,
    // so acceptance may happen sooner, and it must be unanimous.
    const std::uint64_t h_star = sched.omega()->index_of(truth);
    bool liveness = !declared_h.empty();
    std::string liveness_detail = "no agent accepted a hypothesis";
    std::optional<std::uint64_t> accepted;
    for (const auto& [label, h] : declared_h) {
        if (h > h_star) {
            liveness = false;
            liveness_detail = "agent " + std::to_string(label) + " accepted h=" +
                              std::to_string(h) + " after the true configuration's index " +
                              std::to_string(h_star);
        }
        if (accepted && *accepted != h) {
            liveness = false;
            liveness_detail = "agents accepted different hypotheses";
        }
        accepted = h;
    }
    if (declared_h.size() != scenario.agents.size()) {
        liveness = false;
        liveness_detail = "not every agent accepted a hypothesis";
    }
    c.check("unknown.liveness_within_true_index", liveness, liveness ? "" : liveness_detail);

    return c.results;
}

std::vector<PropertyResult> check_gossip_run(const Trace& trace, const Scenario& scenario,
                                             const KnownSchedule& sched,
                                             const std::map<std::uint64_t, BitString>& payloads) {
    Checker c;
    const MessageInventory expected = expected_inventory(payloads);

    bool inventories = true;
    std::string inv_detail;
    for (const auto& t : trace.terminals) {
        if (t.inventory != expected) {
            inventories = false;
            inv_detail = "agent " + std::to_string(t.label) + " inventory mismatch";
        }
    }
    c.check("gossip.inventory_exact", inventories, inv_detail);

    // Every broadcast inside gossip starts and ends with the team together.
    const auto gossip_starts = annotations(trace, "gossip_start");
    const auto gossip_ends = annotations(trace, "gossip_end");
    bool colocated = gossip_starts.size() == scenario.agents.size() &&
                     gossip_ends.size() == scenario.agents.size();
    std::string colo_detail = "missing gossip annotations";
    if (colocated) {
        const BigInt g0 = gossip_starts.front().round;
        std::map<std::uint64_t, std::vector<const Annotation*>> per_label_start, per_label_end;
        const auto com_starts = annotations(trace, "com_start");
        const auto com_ends = annotations(trace, "com_end");
        for (const auto& a : com_starts) {
            if (a.round >= g0) per_label_start[a.label].push_back(&a);
        }
        for (const auto& a : com_ends) {
            if (a.round >= g0) per_label_end[a.label].push_back(&a);
        }
        if (per_label_start.empty() || per_label_end.empty()) {
            colocated = false;
            colo_detail = "no broadcasts recorded after the gossip start";
        }
        std::size_t probes = colocated ? per_label_start.begin()->second.size() : 0;
        for (const auto& [label, list] : per_label_start) {
            if (list.size() != probes) colocated = false;
        }
        for (std::size_t p = 0; colocated && p < probes; ++p) {
            const Annotation* first = per_label_start.begin()->second[p];
            for (const auto& [label, list] : per_label_start) {
                if (list[p]->round != first->round || list[p]->node != first->node) {
                    colocated = false;
                    colo_detail = "probe " + std::to_string(p) + " not started together";
                }
            }
            const Annotation* fe = per_label_end.begin()->second[p];
            for (const auto& [label, list] : per_label_end) {
                if (list[p]->round != fe->round || list[p]->node != fe->node) {
                    colocated = false;
                    colo_detail = "probe " + std::to_string(p) + " not completed together";
                }
            }
        }
    }
    c.check("gossip.colocated_broadcasts", colocated, colo_detail);

    // Exact round accounting: each harvest of a message of length L costs
    // the probes j = 2,4,..,L, i.e. sum_{s<=L/2} 10*s*texplo rounds.
    bool account = true;
    std::string account_detail;
    if (gossip_starts.size() == scenario.agents.size() &&
        gossip_ends.size() == scenario.agents.size() && !trace.terminals.empty()) {
        BigInt expect = 0;
        for (const auto& [msg, count] : trace.terminals.front().inventory) {
            const BigInt half = BigInt(msg.size()) / 2;
            expect += BigInt(10) * sched.texplo() * (half * (half + 1) / 2);
        }
        for (std::size_t i = 0; i < gossip_starts.size(); ++i) {
            const BigInt actual = gossip_ends[i].round - gossip_starts[i].round;
            if (actual != expect) {
                account = false;
                account_detail =
                    "gossip lasted " + actual.str() + " rounds, accounting gives " + expect.str();
            }
        }
    } else {
        account = false;
        account_detail = "missing gossip annotations";
    }
    c.check("gossip.round_accounting", account, account_detail);

    return c.results;
}

std::vector<PropertyResult> verify_trace(const LoadedTrace& loaded) {
    const Scenario scenario = loaded.manifest.scenario();
    std::vector<PropertyResult> results;
    auto append = [&](std::vector<PropertyResult> more) {
        for (auto& r : more) results.push_back(std::move(r));
    };
    const bool full_trace = loaded.manifest.trace_level != "summary";
    if (full_trace) append(check_engine_properties(loaded.trace, scenario));
    if (loaded.manifest.protocol == "known") {
        append(check_known_run(loaded.trace, scenario, make_known_schedule(loaded.manifest.bound)));
    } else if (loaded.manifest.protocol == "gossip-known") {
        const auto sched = make_known_schedule(loaded.manifest.bound);
        append(check_known_run(loaded.trace, scenario, sched));
        append(check_gossip_run(loaded.trace, scenario, sched, loaded.manifest.payloads));
    } else if (loaded.manifest.protocol == "unknown") {
        auto sched = make_unknown_schedule(profile_from_string(loaded.manifest.profile));
        append(check_unknown_run(loaded.trace, scenario, *sched));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

std::string short_hash(const std::string& payload) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char ch : payload) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << (h & 0xffffffffffffULL);
    return out.str();
}

template <typename T>
std::vector<std::vector<T>> subsets_of_size(const std::vector<T>& pool, std::size_t k) {
    std::vector<std::vector<T>> out;
    std::vector<std::size_t> idx(k);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t depth, std::size_t from) {
        if (depth == k) {
            std::vector<T> pick;
            for (std::size_t i : idx) pick.push_back(pool[i]);
            out.push_back(std::move(pick));
            return;
        }
        for (std::size_t i = from; i < pool.size(); ++i) {
            idx[depth] = i;
            rec(depth + 1, i + 1);
        }
    };
    rec(0, 0);
    return out;
}

}  // namespace

std::vector<SweepInstance> known_sweep_instances(const KnownSweepConfig& config) {
    std::vector<SweepInstance> out;
    std::vector<std::pair<PortLabeledGraph, std::string>> graphs;
    for (std::size_t n = 2; n <= config.n_max; ++n) {
        auto part = enumerate_graphs_exact(n);
        std::size_t idx = 0;
        for (const auto& g : *part) {
            graphs.push_back({g, "n" + std::to_string(n) + "g" + std::to_string(idx++)});
        }
    }
    if (config.include_ring_line_5) {
        graphs.push_back({generate(GraphKind::Ring, 5, 0), "ring5"});
        graphs.push_back({generate(GraphKind::Line, 5, 0), "line5"});
    }

    for (const auto& [graph, gid] : graphs) {
        const std::uint32_t n = static_cast<std::uint32_t>(graph.node_count());
        for (std::size_t team : config.team_sizes) {
            if (team > n) continue;
            const auto label_sets = subsets_of_size(config.label_pool, team);
            for (const auto& labels : label_sets) {
                // All injective placements, deduplicated up to isomorphism of
                // the labeled configuration.
                std::set<std::string> seen;
                std::vector<std::uint32_t> pick(team);
                std::vector<bool> used(n, false);
                std::vector<std::vector<std::uint32_t>> placements;
                std::function<void(std::size_t)> place = [&](std::size_t depth) {
                    if (depth == team) {
                        Configuration cfg;
                        cfg.graph = graph;
                        for (std::size_t i = 0; i < team; ++i)
                            cfg.labeled_nodes.push_back({labels[i], pick[i]});
                        std::sort(cfg.labeled_nodes.begin(), cfg.labeled_nodes.end());
                        if (seen.insert(cfg.canonical_encoding()).second)
                            placements.push_back(pick);
                        return;
                    }
                    for (std::uint32_t v = 0; v < n; ++v) {
                        if (used[v]) continue;
                        used[v] = true;
                        pick[depth] = v;
                        place(depth + 1);
                        used[v] = false;
                    }
                };
                place(0);

                std::vector<std::uint64_t> bounds = {n};
                for (std::size_t pi = 0; pi < placements.size(); ++pi) {
                    const auto& placement = placements[pi];
                    for (std::uint64_t bound : bounds) {
                        const KnownSchedule sched = make_known_schedule(bound);
                        std::vector<BigInt> offset_pool = {BigInt(0), BigInt(1),
                                                           sched.texplo() / 2, sched.D(1)};
                        // Non-decreasing offset tuples with the earliest at 0.
                        std::vector<std::vector<BigInt>> offset_tuples;
                        if (team == 2) {
                            for (const auto& d : offset_pool) offset_tuples.push_back({BigInt(0), d});
                        } else {
                            for (std::size_t a = 0; a < offset_pool.size(); ++a)
                                for (std::size_t b = a; b < offset_pool.size(); ++b)
                                    offset_tuples.push_back(
                                        {BigInt(0), offset_pool[a], offset_pool[b]});
                        }
                        std::size_t oi = 0;
                        for (const auto& offsets : offset_tuples) {
                            SweepInstance inst;
                            inst.scenario.graph = graph;
                            for (std::size_t i = 0; i < team; ++i) {
                                AgentSpec spec;
                                spec.label = labels[i];
                                spec.start_node = placement[i];
                                spec.wake_round = offsets[i];
                                inst.scenario.agents.push_back(spec);
                            }
                            inst.bound = bound;
                            std::ostringstream id;
                            id << gid << "-k" << team << "-L";
                            for (auto l : labels) id << l << ".";
                            id << "-p" << pi << "-N" << bound << "-o" << oi++;
                            inst.id = id.str();
                            out.push_back(std::move(inst));
                        }
                    }
                }
            }
        }
    }

    if (config.bound_slack) {
        // A deterministic 1-in-8 slice rerun with slack in the bound.
        std::vector<SweepInstance> extra;
        for (const auto& inst : out) {
            if (splitmix64(std::hash<std::string>{}(inst.id)) % 8 == 0) {
                SweepInstance copy = inst;
                copy.bound = inst.scenario.graph.node_count() + 2;
                copy.id += "-N+2";
                extra.push_back(std::move(copy));
            }
        }
        out.insert(out.end(), extra.begin(), extra.end());
    }
    if (config.max_instances > 0 && out.size() > config.max_instances) {
        std::vector<SweepInstance> sampled;
        const std::size_t stride = (out.size() + config.max_instances - 1) / config.max_instances;
        for (std::size_t i = 0; i < out.size(); i += stride) sampled.push_back(std::move(out[i]));
        out = std::move(sampled);
    }
    return out;
}

void attach_gossip_payloads(std::vector<SweepInstance>& instances, std::size_t max_bits) {
    for (auto& inst : instances) {
        std::uint64_t seed = std::hash<std::string>{}(inst.id);
        for (const auto& a : inst.scenario.agents) {
            seed = splitmix64(seed ^ a.label);
            const std::size_t len = seed % (max_bits + 1);
            BitString payload;
            std::uint64_t bits = splitmix64(seed);
            for (std::size_t i = 0; i < len; ++i) {
                payload.push_back((bits >> i) & 1 ? '1' : '0');
            }
            inst.payloads[a.label] = payload;
        }
    }
}

std::vector<SweepInstance> unknown_sweep_instances(const UnknownSweepConfig& config) {
    std::vector<SweepInstance> out;
    std::vector<std::pair<PortLabeledGraph, std::string>> graphs;
    for (std::size_t n = 2; n <= config.n_max; ++n) {
        auto part = enumerate_graphs_exact(n);
        std::size_t idx = 0;
        for (const auto& g : *part) {
            graphs.push_back({g, "n" + std::to_string(n) + "g" + std::to_string(idx++)});
        }
    }
    for (const auto& [graph, gid] : graphs) {
        const std::uint32_t n = static_cast<std::uint32_t>(graph.node_count());
        if (config.team_size > n) continue;
        const auto label_sets = subsets_of_size(config.label_pool, config.team_size);
        for (const auto& labels : label_sets) {
            std::set<std::string> seen;
            std::vector<std::uint32_t> pick(config.team_size);
            std::vector<bool> used(n, false);
            std::vector<std::vector<std::uint32_t>> placements;
            std::function<void(std::size_t)> place = [&](std::size_t depth) {
                if (depth == config.team_size) {
                    Configuration cfg;
                    cfg.graph = graph;
                    for (std::size_t i = 0; i < config.team_size; ++i)
                        cfg.labeled_nodes.push_back({labels[i], pick[i]});
                    std::sort(cfg.labeled_nodes.begin(), cfg.labeled_nodes.end());
                    if (seen.insert(cfg.canonical_encoding()).second) placements.push_back(pick);
                    return;
                }
                for (std::uint32_t v = 0; v < n; ++v) {
                    if (used[v]) continue;
                    used[v] = true;
                    pick[depth] = v;
                    place(depth + 1);
                    used[v] = false;
                }
            };
            place(0);
            for (std::size_t pi = 0; pi < placements.size(); ++pi) {
                std::size_t oi = 0;
                for (std::uint64_t offset : config.wake_offsets) {
                    SweepInstance inst;
                    inst.scenario.graph = graph;
                    for (std::size_t i = 0; i < config.team_size; ++i) {
                        AgentSpec spec;
                        spec.label = labels[i];
                        spec.start_node = placements[pi][i];
                        spec.wake_round = BigInt(i == 0 ? 0 : offset);
                        inst.scenario.agents.push_back(spec);
                    }
                    std::ostringstream id;
                    id << "unk-" << gid << "-L";
                    for (auto l : labels) id << l << ".";
                    id << "-p" << pi << "-o" << oi++;
                    inst.id = id.str();
                    out.push_back(std::move(inst));
                }
            }
        }
    }
    return out;
}

namespace {

RunManifest make_manifest(const SweepInstance& inst, const std::string& protocol,
                          const std::string& profile) {
    RunManifest m;
    m.protocol = protocol;
    m.profile = profile;
    m.bound = inst.bound;
    m.graph_text = to_text(inst.scenario.graph);
    m.agents = inst.scenario.agents;
    m.payloads = inst.payloads;
    return m;
}

std::vector<PropertyResult> tag_instance(std::vector<PropertyResult> results,
                                         const std::string& id) {
    for (auto& r : results) r.instance = id;
    return results;
}

}  // namespace

std::vector<PropertyResult> run_known_instance(const SweepInstance& inst, bool fast_forward) {
    const KnownSchedule sched = make_known_schedule(inst.bound);
    std::uint64_t smallest = UINT64_MAX;
    BigInt latest_wake = 0;
    for (const auto& a : inst.scenario.agents) {
        smallest = std::min(smallest, a.label);
        if (a.wake_round && *a.wake_round > latest_wake) latest_wake = *a.wake_round;
    }
    RunOptions opt;
    opt.round_limit = latest_wake + known_declaration_bound(sched, smallest) + 16;
    opt.fast_forward = fast_forward;
    opt.trace_level = TraceLevel::Full;
    const auto result = run(
        inst.scenario,
        [&](AgentCtx& ctx, std::uint64_t label) { return gather_known_program(ctx, sched, label); },
        opt);
    std::vector<PropertyResult> out;
    out.push_back({"known.outcome", inst.id, result.outcome == Outcome::GatheredDeclared,
                   to_string(result.outcome) + " " + result.error});
    if (result.outcome == Outcome::GatheredDeclared) {
        auto more = check_engine_properties(result.trace, inst.scenario);
        auto known = check_known_run(result.trace, inst.scenario, sched);
        more.insert(more.end(), known.begin(), known.end());
        for (auto& r : tag_instance(std::move(more), inst.id)) out.push_back(std::move(r));
    }
    return out;
}

std::vector<PropertyResult> run_gossip_instance(const SweepInstance& inst, bool fast_forward) {
    const KnownSchedule sched = make_known_schedule(inst.bound);
    std::uint64_t smallest = UINT64_MAX;
    BigInt latest_wake = 0;
    for (const auto& a : inst.scenario.agents) {
        smallest = std::min(smallest, a.label);
        if (a.wake_round && *a.wake_round > latest_wake) latest_wake = *a.wake_round;
    }
    BigInt gossip_budget = 0;
    for (const auto& [label, payload] : inst.payloads) {
        const BigInt half = BigInt(code(payload).size()) / 2;
        gossip_budget += BigInt(10) * sched.texplo() * (half * (half + 1) / 2);
    }
    RunOptions opt;
    opt.round_limit =
        latest_wake + known_declaration_bound(sched, smallest) + gossip_budget + 16;
    opt.fast_forward = fast_forward;
    opt.trace_level = TraceLevel::Full;
    const auto payloads = inst.payloads;
    const auto result = run(
        inst.scenario,
        [&](AgentCtx& ctx, std::uint64_t label) {
            return gossip_known_program(ctx, sched, label, payloads.at(label));
        },
        opt);
    std::vector<PropertyResult> out;
    out.push_back({"gossip.outcome", inst.id, result.outcome == Outcome::GatheredDeclared,
                   to_string(result.outcome) + " " + result.error});
    if (result.outcome == Outcome::GatheredDeclared) {
        auto more = check_gossip_run(result.trace, inst.scenario, sched, inst.payloads);
        for (auto& r : tag_instance(std::move(more), inst.id)) out.push_back(std::move(r));
    }
    return out;
}

std::vector<PropertyResult> run_unknown_instance(const SweepInstance& inst, ProfileId profile) {
    auto sched = make_unknown_schedule(profile);
    const Configuration truth = scenario_configuration(inst.scenario);
    const std::uint64_t h_star = sched->omega()->index_of(truth);
    BigInt latest_wake = 0;
    for (const auto& a : inst.scenario.agents) {
        if (a.wake_round && *a.wake_round > latest_wake) latest_wake = *a.wake_round;
    }
    RunOptions opt;
    opt.round_limit = sched->run_limit_through(h_star) + latest_wake;
    opt.fast_forward = true;
    opt.trace_level = TraceLevel::Summary;
    const auto result = run(
        inst.scenario,
        [&](AgentCtx& ctx, std::uint64_t label) {
            return gather_unknown_program(ctx, sched, label);
        },
        opt);
    std::vector<PropertyResult> out;
    out.push_back({"unknown.outcome", inst.id, result.outcome == Outcome::GatheredDeclared,
                   to_string(result.outcome) + " " + result.error});
    if (result.outcome == Outcome::GatheredDeclared) {
        auto more = check_unknown_run(result.trace, inst.scenario, *sched);
        for (auto& r : tag_instance(std::move(more), inst.id)) out.push_back(std::move(r));
    }
    return out;
}

SweepReport run_sweep(const std::vector<SweepInstance>& instances, const std::string& protocol,
                      std::size_t threads, const std::string& failure_dir) {
    SweepReport report;
    report.instances = instances.size();
    if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    std::vector<std::vector<PropertyResult>> results(instances.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= instances.size()) return;
            if (protocol == "known") {
                results[i] = run_known_instance(instances[i], true);
            } else if (protocol == "gossip") {
                results[i] = run_gossip_instance(instances[i], true);
            } else if (protocol == "unknown") {
                results[i] = run_unknown_instance(instances[i], ProfileId::Desk);
            } else {
                results[i] = {{protocol + ".unknown-protocol", instances[i].id, false, ""}};
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t + 1 < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < instances.size(); ++i) {
        for (auto& r : results[i]) {
            ++report.checks;
            if (!r.pass) report.failures.push_back(r);
        }
    }
    if (!failure_dir.empty() && !report.failures.empty()) {
        fs::create_directories(failure_dir);
        std::set<std::string> dumped;
        for (const auto& f : report.failures) {
            if (!dumped.insert(f.instance).second) continue;
            for (const auto& inst : instances) {
                if (inst.id != f.instance) continue;
                const std::string proto_name =
                    protocol == "gossip" ? "gossip-known" : protocol;
                RunManifest m = make_manifest(inst, proto_name, "desk");
                // Re-run deterministically to capture the trace.
                RunOptions opt;
                opt.trace_level = TraceLevel::Full;
                if (protocol == "known" || protocol == "gossip") {
                    const KnownSchedule sched = make_known_schedule(inst.bound);
                    std::uint64_t smallest = UINT64_MAX;
                    for (const auto& a : inst.scenario.agents)
                        smallest = std::min(smallest, a.label);
                    opt.round_limit = known_declaration_bound(sched, smallest) * 4 + 1024;
                    const auto payloads = inst.payloads;
                    auto rerun = run(
                        inst.scenario,
                        [&](AgentCtx& ctx, std::uint64_t label) -> Program {
                            if (protocol == "gossip")
                                return gossip_known_program(ctx, sched, label,
                                                            payloads.at(label));
                            return gather_known_program(ctx, sched, label);
                        },
                        opt);
                    m.outcome = to_string(rerun.outcome);
                    std::ofstream out(fs::path(failure_dir) /
                                      (short_hash(inst.id) + "-" + "trace.txt"));
                    write_trace(out, m, rerun.trace);
                } else if (protocol == "unknown") {
                    auto sched = make_unknown_schedule(ProfileId::Desk);
                    const auto truth = scenario_configuration(inst.scenario);
                    opt.trace_level = TraceLevel::Summary;
                    m.trace_level = "summary";
                    opt.round_limit =
                        sched->run_limit_through(sched->omega()->index_of(truth)) * 2;
                    auto rerun = run(
                        inst.scenario,
                        [&](AgentCtx& ctx, std::uint64_t label) {
                            return gather_unknown_program(ctx, sched, label);
                        },
                        opt);
                    m.outcome = to_string(rerun.outcome);
                    std::ofstream out(fs::path(failure_dir) /
                                      (short_hash(inst.id) + "-" + "trace.txt"));
                    write_trace(out, m, rerun.trace);
                }
                break;
            }
        }
    }
    std::sort(report.failures.begin(), report.failures.end(),
              [](const PropertyResult& a, const PropertyResult& b) {
                  return std::tie(a.instance, a.id) < std::tie(b.instance, b.id);
              });
    return report;
}

MessageInventory expected_inventory(const std::map<std::uint64_t, BitString>& payloads) {
    std::map<BitString, std::uint64_t> counts;
    for (const auto& [label, payload] : payloads) counts[code(payload)] += 1;
    MessageInventory out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
        return a.first < b.first;
    });
    return out;
}

}  // namespace muster
