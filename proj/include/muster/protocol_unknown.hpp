#pragma once

#include "muster/constants.hpp"
#include "muster/engine.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace muster {

// A candidate initial configuration: a port-labeled graph of size >= 2 with
// at least two labeled nodes (the supposed agent starting positions).
struct Configuration {
    PortLabeledGraph graph;
    std::vector<std::pair<std::uint64_t, std::uint32_t>> labeled_nodes;  // sorted by label

    std::uint64_t n() const { return graph.node_count(); }
    std::uint64_t k() const { return labeled_nodes.size(); }
    bool has_label(std::uint64_t label) const;
    std::uint32_t node_of(std::uint64_t label) const;
    // Node carrying the smallest label: the gathering target.
    std::uint32_t central_node() const { return labeled_nodes.front().second; }
    std::uint64_t smallest_label() const { return labeled_nodes.front().first; }
    // Number of labeled nodes with a label smaller than `label`.
    std::uint64_t rank(std::uint64_t label) const;
    // Lexicographically smallest shortest path from label's node to the
    // central node.
    Path path_to_central(std::uint64_t label) const;
    // n + edge count + sum of label bit lengths.
    std::uint64_t weight() const;
    std::string canonical_encoding() const;
};

// The true configuration of a scenario (for liveness assertions).
Configuration scenario_configuration(const Scenario& s);

// The fixed, total, duplicate-free enumeration of all configurations:
// ascending weight, ties by canonical encoding. Shared and memoized.
class Omega {
  public:
    static std::shared_ptr<Omega> shared();
    Omega();
    ~Omega();
    Omega(const Omega&) = delete;
    Omega& operator=(const Omega&) = delete;

    const Configuration& config(std::uint64_t h);  // h >= 1
    // First index whose canonical form equals c's. Searches by weight, so it
    // terminates for every well-formed configuration.
    std::uint64_t index_of(const Configuration& c);
    // Largest graph size among configurations 1..h.
    std::uint64_t max_size_up_to(std::uint64_t h);
    // Number of configurations with weight <= w.
    std::uint64_t count_with_weight_up_to(std::uint64_t w);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// One row of the hypothesis timing schedule.
struct HypothesisRow {
    std::uint64_t h = 0;
    std::uint64_t n = 0, k = 0, m = 0;
    std::uint64_t radius = 0;   // ball traversal path length
    std::uint64_t l_sweep = 0;  // clean-exploration path length
    BigInt zeta;                // slowdown wait
    BigInt t_est;               // per-turn size-check budget
    BigInt t_bt;                // ball traversal duration bound
    BigInt s;                   // post-preprocessing wait
    BigInt t_hyp;               // exact duration of a failed hypothesis
};

class UnknownSchedule {
  public:
    UnknownSchedule(ProfileId profile, std::shared_ptr<Omega> omega);
    ~UnknownSchedule();
    UnknownSchedule(const UnknownSchedule&) = delete;
    UnknownSchedule& operator=(const UnknownSchedule&) = delete;

    ProfileId profile() const;
    std::shared_ptr<Omega> omega() const;
    const HypothesisRow& row(std::uint64_t h);  // memoized; asserts row inequalities
    // Round budget covering hypotheses 1..h plus the declaring run.
    BigInt run_limit_through(std::uint64_t h);
    std::size_t est_size_cap() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

using UnknownSchedulePtr = std::shared_ptr<UnknownSchedule>;

UnknownSchedulePtr make_unknown_schedule(ProfileId profile);

// Preprocessing sweep: follows every port word of the ball radius with a
// slowdown wait before each traversal, backtracking each word; false as soon
// as a node of degree >= n_h is seen.
Frag<bool> ball_traversal(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h);

// Walk to the supposed central node, then the bounded watch for the full
// group followed by the confirmation wait.
Frag<bool> move_to_central(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h,
                           std::uint64_t label);

// Rank-ordered neighbor-visit dance certifying the group is exactly the k_h
// expected agents. Exactly 4*d*k_h rounds.
Frag<bool> star_check(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h,
                      std::uint64_t label);

// Two lock-step sweeps of all port words of the sweep length; false on any
// post-move cardinality mismatch.
Frag<bool> ensure_clean_exploration(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h);

// Turn-taking size verification; exactly 2*k_h*t_est rounds.
Frag<bool> graph_size_check(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h,
                            std::uint64_t label);

// One full hypothesis: preprocessing, main part, backtracking and padding to
// exactly t_hyp rounds on failure.
Frag<bool> hypothesis(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h,
                      std::uint64_t label);

struct UnknownResult {
    std::uint64_t leader = 0;
    std::uint64_t size = 0;
    std::uint64_t hypothesis_index = 0;
};

Frag<UnknownResult> gather_unknown_core(AgentCtx& ctx, UnknownSchedulePtr sched,
                                        std::uint64_t label);

Program gather_unknown_program(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t label);

}  // namespace muster
