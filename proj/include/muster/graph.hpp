#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace muster {

struct PortTarget {
    std::uint32_t to = 0;    // neighbor node id
    std::uint32_t back = 0;  // port by which the edge is labeled at the neighbor
    friend bool operator==(const PortTarget&, const PortTarget&) = default;
};

// Anonymous connected graph with a local port numbering at every node.
// Node ids exist only for the engine and the tests; agents never see them.
struct PortLabeledGraph {
    // adj[v][p] is the endpoint of the edge leaving v by port p.
    std::vector<std::vector<PortTarget>> adj;

    std::size_t node_count() const { return adj.size(); }
    std::uint32_t degree(std::uint32_t v) const { return static_cast<std::uint32_t>(adj[v].size()); }
    std::size_t edge_count() const;
    friend bool operator==(const PortLabeledGraph&, const PortLabeledGraph&) = default;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> issues;
};

// Checks connectivity, the {0..d-1} port ranges (implicit in the adjacency
// layout), port symmetry, and simplicity (no self-loops, no parallel edges).
ValidationReport validate(const PortLabeledGraph& g);

using Path = std::vector<std::uint32_t>;

struct FollowResult {
    bool ok = false;
    std::uint32_t node = 0;        // terminal node when ok
    std::size_t fail_index = 0;    // 1-based index of the first invalid port when !ok
};

// Walks p from start; an out-of-range port is a normal outcome, not an error.
FollowResult follow_path(const PortLabeledGraph& g, std::uint32_t start, const Path& p);

// Nodes visited by following p from start (including start and every
// intermediate node up to the first invalid port).
std::vector<std::uint32_t> nodes_on_path(const PortLabeledGraph& g, std::uint32_t start, const Path& p);

enum class GraphKind { Ring, Line, Complete, RandomConnected };

// Deterministic in (kind, n, seed). Ring and Complete require n >= 3 and
// Line n >= 2, since parallel edges are excluded from the model.
PortLabeledGraph generate(GraphKind kind, std::size_t n, std::uint64_t seed);

// Canonical byte encoding: the lexicographically smallest serialization over
// all node orderings. Exhaustive minimization, so it is restricted to the
// desk scale (n <= 8); this is the only non-scalable routine in the module.
std::string canonical_encode(const PortLabeledGraph& g);

// Serialization of the graph as stored (no relabeling).
std::string plain_encode(const PortLabeledGraph& g);

struct GraphDecodeResult {
    bool ok = false;
    PortLabeledGraph graph;
    std::size_t error_pos = 0;  // byte offset of the first violation
    std::string error;
};

GraphDecodeResult canonical_decode(const std::string& bytes);

// Text format: header "n=<count>", then per node "v: (u0,q0) (u1,q1) ...".
std::string to_text(const PortLabeledGraph& g);
GraphDecodeResult from_text(const std::string& text);

// BFS distances from start; unreachable nodes get -1.
std::vector<int> bfs_distances(const PortLabeledGraph& g, std::uint32_t start);

// Lexicographically smallest shortest port sequence from `from` to `to`.
// Empty optional when unreachable.
std::optional<Path> lex_shortest_path(const PortLabeledGraph& g, std::uint32_t from, std::uint32_t to);

// Applies a node relabeling: node v of the input becomes perm[v].
PortLabeledGraph relabel(const PortLabeledGraph& g, const std::vector<std::uint32_t>& perm);

}  // namespace muster
