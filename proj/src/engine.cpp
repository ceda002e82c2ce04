#include "muster/engine.hpp"

#include <algorithm>
#include <memory>
#include <set>
#include <sstream>

namespace muster {

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::GatheredDeclared: return "gathered-and-declared";
        case Outcome::LimitExceeded: return "limit-exceeded";
        case Outcome::ProtocolError: return "protocol-error";
        case Outcome::FinishedWithoutGathering: return "finished-without-gathering";
        case Outcome::StoppedColocated: return "stopped-colocated";
    }
    return "?";
}

ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport r = validate(s.graph);
    auto fail = [&](std::string msg) {
        r.ok = false;
        r.issues.push_back(std::move(msg));
    };
    if (s.agents.size() < 2) fail("at least two agents required");
    std::set<std::uint64_t> labels;
    std::set<std::uint32_t> starts;
    bool any_wake = false;
    for (const auto& a : s.agents) {
        if (a.label == 0) fail("labels are positive integers");
        if (!labels.insert(a.label).second) fail("duplicate label " + std::to_string(a.label));
        if (a.start_node >= s.graph.node_count()) fail("start node out of range");
        else if (!starts.insert(a.start_node).second)
            fail("duplicate start node " + std::to_string(a.start_node));
        if (a.wake_round) {
            any_wake = true;
            if (*a.wake_round < 0) fail("wake round must be non-negative");
        }
    }
    if (!s.agents.empty() && !any_wake) fail("at least one agent needs an adversary wake round");
    return r;
}

const AgentTerminal* Trace::terminal(std::uint64_t label) const {
    for (const auto& t : terminals) {
        if (t.label == label) return &t;
    }
    return nullptr;
}

namespace {

// Per-agent trace assembly with online coalescing of consecutive waits.
class TraceBuilder {
  public:
    TraceBuilder(Trace& out, TraceLevel level, std::size_t agents)
        : out_(out), level_(level), spans_(agents), seq_(agents, 0) {}

    void move(std::size_t idx, const BigInt& r, std::uint64_t label, std::uint32_t from,
              std::uint32_t port, std::uint32_t to, std::uint32_t card) {
        flush(idx);
        if (level_ != TraceLevel::Full) return;
        TraceEvent e;
        e.kind = TraceEvent::Kind::Move;
        e.round_from = r;
        e.round_to = r;
        e.label = label;
        e.node_before = from;
        e.node_after = to;
        e.port = port;
        e.cur_card = card;
        e.seq = seq_[idx]++;
        out_.events.push_back(std::move(e));
    }

    void wait(std::size_t idx, const BigInt& r, const BigInt& count, std::uint64_t label,
              std::uint32_t node, std::uint32_t card) {
        auto& s = spans_[idx];
        if (s.open && s.node == node && s.to + 1 == r) {
            s.to = r + count - 1;
            return;
        }
        flush(idx);
        s.open = true;
        s.from = r;
        s.to = r + count - 1;
        s.node = node;
        s.card = card;
        s.label = label;
    }

    void declare(std::size_t idx, const BigInt& r, std::uint64_t label, std::uint32_t node,
                 std::uint32_t card) {
        flush(idx);
        TraceEvent e;
        e.kind = TraceEvent::Kind::Declare;
        e.round_from = r;
        e.round_to = r;
        e.label = label;
        e.node_before = node;
        e.node_after = node;
        e.cur_card = card;
        e.seq = seq_[idx]++;
        out_.events.push_back(std::move(e));
    }

    void annotate(std::size_t idx, const BigInt& r, std::uint64_t label, const std::string& key,
                  const std::string& value, std::uint32_t node) {
        TraceEvent e;
        e.kind = TraceEvent::Kind::Annotate;
        e.round_from = r;
        e.round_to = r;
        e.label = label;
        e.key = key;
        e.value = value;
        e.node_before = node;
        e.node_after = node;
        e.seq = seq_[idx]++;
        out_.events.push_back(std::move(e));
    }

    void finalize() {
        for (std::size_t i = 0; i < spans_.size(); ++i) flush(i);
        std::stable_sort(out_.events.begin(), out_.events.end(),
                         [](const TraceEvent& a, const TraceEvent& b) {
                             if (a.round_from != b.round_from) return a.round_from < b.round_from;
                             if (a.label != b.label) return a.label < b.label;
                             return a.seq < b.seq;
                         });
    }

  private:
    struct Span {
        bool open = false;
        BigInt from, to;
        std::uint32_t node = 0;
        std::uint32_t card = 0;
        std::uint64_t label = 0;
    };

    void flush(std::size_t idx) {
        auto& s = spans_[idx];
        if (!s.open) return;
        s.open = false;
        if (level_ != TraceLevel::Full) return;
        TraceEvent e;
        e.kind = TraceEvent::Kind::WaitSpan;
        e.round_from = s.from;
        e.round_to = s.to;
        e.label = s.label;
        e.node_before = s.node;
        e.node_after = s.node;
        e.cur_card = s.card;
        e.seq = seq_[idx]++;
        out_.events.push_back(std::move(e));
    }

    Trace& out_;
    TraceLevel level_;
    std::vector<Span> spans_;
    std::vector<std::uint64_t> seq_;
};

struct AgentState {
    AgentSpec spec;
    std::unique_ptr<AgentRt> rt;
    std::uint32_t pos = 0;
    std::optional<std::uint32_t> entry_port;
    bool awake = false;
    std::optional<BigInt> declared_round;
    std::optional<std::uint32_t> declared_node;
    BigInt moves_executed = 0;
    BigInt waits_executed = 0;
};

}  // namespace

RunResult run(const Scenario& scenario, const ProgramFactory& factory, const RunOptions& options) {
    RunResult result;
    const auto valid = validate_scenario(scenario);
    if (!valid.ok) {
        result.outcome = Outcome::ProtocolError;
        result.error = "invalid scenario: " + valid.issues.front();
        return result;
    }

    const std::size_t m = scenario.agents.size();
    std::vector<AgentState> agents(m);
    std::vector<std::uint32_t> occupancy(scenario.graph.node_count(), 0);
    TraceBuilder trace(result.trace, options.trace_level, m);

    // Agents act in label order; the snapshot semantics make the order
    // unobservable, but trace output must be deterministic.
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scenario.agents[a].label < scenario.agents[b].label;
    });

    BigInt round = 0;
    for (std::size_t i = 0; i < m; ++i) {
        auto& st = agents[i];
        st.spec = scenario.agents[i];
        st.pos = st.spec.start_node;
        st.rt = std::make_unique<AgentRt>();
        st.rt->set_label(st.spec.label);
        occupancy[st.pos] += 1;
    }
    for (std::size_t i = 0; i < m; ++i) {
        auto& st = agents[i];
        auto* state_ptr = &st;
        st.rt->set_annotation_sink([&trace, i, state_ptr](const BigInt& r, std::uint64_t label,
                                                          const std::string& key,
                                                          const std::string& value) {
            trace.annotate(i, r, label, key, value, state_ptr->pos);
        });
        st.rt->install(factory(st.rt->ctx(), st.spec.label));
    }

    auto make_obs = [&](const AgentState& st) {
        Observation o;
        o.degree = scenario.graph.degree(st.pos);
        o.entry_port = st.entry_port;
        o.cur_card = occupancy[st.pos];
        o.own_label = st.spec.label;
        return o;
    };

    auto finish = [&](Outcome outcome, std::string error) {
        trace.finalize();
        for (std::size_t i : order) {
            const auto& st = agents[i];
            AgentTerminal t;
            t.label = st.spec.label;
            t.declared_round = st.declared_round;
            t.declared_node = st.declared_node;
            t.leader = st.rt->outputs().leader;
            t.size = st.rt->outputs().size;
            t.inventory = st.rt->outputs().inventory;
            t.moves_executed = st.moves_executed;
            t.waits_executed = st.waits_executed;
            result.trace.terminals.push_back(std::move(t));
        }
        result.trace.final_round = round;
        result.outcome = outcome;
        result.error = std::move(error);
        return result;
    };

    bool moved_last_round = false;

    while (true) {
        if (round >= options.round_limit) return finish(Outcome::LimitExceeded, "");

        // Frozen-wait commitments are void once any agent has moved.
        if (moved_last_round) {
            for (auto& st : agents) {
                if (st.awake) st.rt->invalidate_frozen();
            }
            moved_last_round = false;
        }

        // Wake-ups: by the adversary, or by a visitor present at this
        // round's snapshot. Starting nodes are distinct, so occupancy >= 2
        // at a dormant agent's node means somebody came to it.
        for (auto& st : agents) {
            if (st.awake) continue;
            if ((st.spec.wake_round && *st.spec.wake_round == round) || occupancy[st.pos] >= 2) {
                st.awake = true;
                trace.annotate(static_cast<std::size_t>(&st - agents.data()), round, st.spec.label,
                               "wake", "", st.pos);
            }
        }

        if (options.stop_when_colocated) {
            bool all_same = true;
            for (std::size_t i = 1; i < m; ++i) {
                if (agents[i].pos != agents[0].pos) {
                    all_same = false;
                    break;
                }
            }
            if (all_same) return finish(Outcome::StoppedColocated, "");
        }

        bool all_done = true;
        bool any_awake_active = false;
        for (const auto& st : agents) {
            if (!st.rt->done()) all_done = false;
            if (st.awake && !st.rt->done()) any_awake_active = true;
        }
        if (all_done) break;

        // Next pending adversary wake, for jumps over fully dormant stretches.
        std::optional<BigInt> next_wake;
        for (const auto& st : agents) {
            if (!st.awake && st.spec.wake_round && *st.spec.wake_round > round) {
                if (!next_wake || *st.spec.wake_round < *next_wake) next_wake = st.spec.wake_round;
            }
        }

        if (!any_awake_active) {
            if (!next_wake) {
                return finish(Outcome::FinishedWithoutGathering,
                              "no awake agent and no pending wake");
            }
            round = *next_wake;
            continue;
        }

        // Demand instructions from agents without a live wait commitment.
        struct RoundAction {
            std::size_t idx;
            AgentRt::Decision decision;
        };
        std::vector<RoundAction> actions;
        actions.reserve(m);
        for (std::size_t i : order) {
            auto& st = agents[i];
            if (!st.awake || st.rt->done()) continue;
            if (st.rt->has_pending_wait()) {
                actions.push_back({i, {AgentRt::Decision::Kind::Wait, 0}});
                continue;
            }
            const auto decision = st.rt->demand(make_obs(st), round);
            if (st.rt->error()) {
                std::string what = "agent program failed";
                try {
                    std::rethrow_exception(st.rt->error());
                } catch (const std::exception& e) {
                    what = e.what();
                } catch (const InterruptSignal&) {
                    what = "uncaught interrupt signal";
                } catch (...) {
                }
                return finish(Outcome::ProtocolError,
                              "agent " + std::to_string(st.spec.label) + ": " + what);
            }
            if (decision.kind != AgentRt::Decision::Kind::Finished) actions.push_back({i, decision});
        }

        // Event jump: only when every active agent is inside a wait
        // commitment. Nobody moves during the jumped rounds, so dormant
        // agents cannot be woken by visitors and frozen commitments hold.
        if (options.fast_forward) {
            bool all_waiting = !actions.empty();
            BigInt k = options.round_limit - round;
            for (const auto& a : actions) {
                if (a.decision.kind != AgentRt::Decision::Kind::Wait) {
                    all_waiting = false;
                    break;
                }
                const auto& pending = agents[a.idx].rt->pending();
                if (pending.remaining < k) k = pending.remaining;
            }
            if (all_waiting && next_wake && *next_wake - round < k) k = *next_wake - round;
            if (all_waiting && k >= 2) {
                for (const auto& a : actions) {
                    auto& st = agents[a.idx];
                    trace.wait(a.idx, round, k, st.spec.label, st.pos, occupancy[st.pos]);
                    st.rt->consume_wait(k);
                    st.waits_executed += k;
                }
                round += k;
                continue;
            }
        }

        // Single round: record and execute all instructions simultaneously.
        struct Move {
            std::size_t idx;
            std::uint32_t to;
            std::uint32_t back;
        };
        std::vector<Move> moves;
        for (const auto& a : actions) {
            auto& st = agents[a.idx];
            const std::uint32_t card = occupancy[st.pos];
            switch (a.decision.kind) {
                case AgentRt::Decision::Kind::Wait: {
                    trace.wait(a.idx, round, 1, st.spec.label, st.pos, card);
                    st.rt->consume_wait(1);
                    st.waits_executed += 1;
                    break;
                }
                case AgentRt::Decision::Kind::Move: {
                    const std::uint32_t port = a.decision.port;
                    if (port >= scenario.graph.degree(st.pos)) {
                        return finish(Outcome::ProtocolError,
                                      "agent " + std::to_string(st.spec.label) + " took port " +
                                          std::to_string(port) + " at a node of degree " +
                                          std::to_string(scenario.graph.degree(st.pos)));
                    }
                    const PortTarget t = scenario.graph.adj[st.pos][port];
                    trace.move(a.idx, round, st.spec.label, st.pos, port, t.to, card);
                    moves.push_back({a.idx, t.to, t.back});
                    st.moves_executed += 1;
                    st.rt->clear_pending();
                    break;
                }
                case AgentRt::Decision::Kind::Declare: {
                    trace.declare(a.idx, round, st.spec.label, st.pos, card);
                    if (!st.declared_round) {
                        st.declared_round = round;
                        st.declared_node = st.pos;
                    }
                    st.rt->clear_pending();
                    break;
                }
                case AgentRt::Decision::Kind::Finished:
                    break;
            }
        }

        for (const auto& mv : moves) {
            auto& st = agents[mv.idx];
            occupancy[st.pos] -= 1;
            st.pos = mv.to;
            st.entry_port = mv.back;
            occupancy[st.pos] += 1;
        }
        moved_last_round = !moves.empty();
        round += 1;
    }

    // All programs finished; classify.
    bool all_declared = true;
    for (const auto& st : agents) {
        if (!st.declared_round) all_declared = false;
    }
    bool same = all_declared;
    if (all_declared) {
        for (const auto& st : agents) {
            if (*st.declared_round != *agents[0].declared_round ||
                *st.declared_node != *agents[0].declared_node) {
                same = false;
            }
        }
    }
    return finish(same ? Outcome::GatheredDeclared : Outcome::FinishedWithoutGathering, "");
}

GatheringReport verify_gathering(const Trace& trace, const Scenario& scenario) {
    GatheringReport rep;
    auto fail = [&](std::string msg) { rep.issues.push_back(std::move(msg)); };

    rep.all_declared = true;
    for (const auto& a : scenario.agents) {
        const AgentTerminal* t = trace.terminal(a.label);
        if (!t || !t->declared_round) {
            rep.all_declared = false;
            fail("agent " + std::to_string(a.label) + " never declared");
        }
    }

    rep.same_round = rep.all_declared;
    rep.same_node = rep.all_declared;
    if (rep.all_declared && !trace.terminals.empty()) {
        const auto& first = trace.terminals.front();
        for (const auto& t : trace.terminals) {
            if (*t.declared_round != *first.declared_round) rep.same_round = false;
            if (*t.declared_node != *first.declared_node) rep.same_node = false;
        }
        if (!rep.same_round) fail("declarations span multiple rounds");
        if (!rep.same_node) fail("declarations span multiple nodes");
    }

    std::set<std::uint64_t> labels;
    for (const auto& a : scenario.agents) labels.insert(a.label);

    rep.leaders_valid = true;
    std::optional<std::uint64_t> leader;
    for (const auto& t : trace.terminals) {
        if (!t.leader) continue;
        if (!labels.count(*t.leader)) {
            rep.leaders_valid = false;
            fail("agent " + std::to_string(t.label) + " elected non-existent leader " +
                 std::to_string(*t.leader));
        }
        if (leader && *leader != *t.leader) {
            rep.leaders_valid = false;
            fail("leader outputs disagree");
        }
        leader = t.leader;
    }

    rep.sizes_valid = true;
    for (const auto& t : trace.terminals) {
        if (!t.size) continue;
        if (*t.size != scenario.graph.node_count()) {
            rep.sizes_valid = false;
            fail("agent " + std::to_string(t.label) + " learned size " + std::to_string(*t.size) +
                 " but the graph has " + std::to_string(scenario.graph.node_count()) + " nodes");
        }
    }

    rep.ok = rep.all_declared && rep.same_round && rep.same_node && rep.leaders_valid &&
             rep.sizes_valid;
    return rep;
}

}  // namespace muster
