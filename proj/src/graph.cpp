#include "muster/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace muster {

namespace {

// splitmix64; used instead of std::shuffle so that generated graphs are
// identical across standard library implementations.
struct SeededRng {
    std::uint64_t state;
    explicit SeededRng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t n) { return next() % n; }
};

template <typename T>
void shuffle_seeded(std::vector<T>& v, SeededRng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

// Builds the port-labeled graph from an undirected edge list, assigning port
// numbers in the order edges appear per node.
PortLabeledGraph from_edges(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    PortLabeledGraph g;
    g.adj.assign(n, {});
    for (auto [a, b] : edges) {
        auto pa = static_cast<std::uint32_t>(g.adj[a].size());
        auto pb = static_cast<std::uint32_t>(g.adj[b].size());
        g.adj[a].push_back({b, pb});
        g.adj[b].push_back({a, pa});
    }
    return g;
}

void append_u8(std::string& out, std::uint32_t v) {
    if (v > 0xff) throw std::invalid_argument("graph too large for byte encoding");
    out.push_back(static_cast<char>(v));
}

}  // namespace

std::size_t PortLabeledGraph::edge_count() const {
    std::size_t half_edges = 0;
    for (const auto& ports : adj) half_edges += ports.size();
    return half_edges / 2;
}

ValidationReport validate(const PortLabeledGraph& g) {
    ValidationReport r;
    auto fail = [&](std::string msg) {
        r.ok = false;
        r.issues.push_back(std::move(msg));
    };
    const std::size_t n = g.node_count();
    if (n == 0) {
        fail("graph has no nodes");
        return r;
    }
    for (std::uint32_t v = 0; v < n; ++v) {
        std::set<std::uint32_t> neighbors;
        for (std::uint32_t p = 0; p < g.degree(v); ++p) {
            const PortTarget t = g.adj[v][p];
            std::ostringstream at;
            at << "node " << v << " port " << p;
            if (t.to >= n) {
                fail(at.str() + ": neighbor out of range");
                continue;
            }
            if (t.to == v) {
                fail(at.str() + ": self-loop");
                continue;
            }
            if (!neighbors.insert(t.to).second) {
                fail(at.str() + ": parallel edge to node " + std::to_string(t.to));
            }
            if (t.back >= g.degree(t.to)) {
                fail(at.str() + ": reverse port out of range at node " + std::to_string(t.to));
                continue;
            }
            const PortTarget u = g.adj[t.to][t.back];
            if (u.to != v || u.back != p) {
                fail(at.str() + ": port symmetry violated");
            }
        }
    }
    if (!r.ok) return r;
    const auto dist = bfs_distances(g, 0);
    for (std::uint32_t v = 0; v < n; ++v) {
        if (dist[v] < 0) {
            fail("node " + std::to_string(v) + " unreachable from node 0");
            break;
        }
    }
    return r;
}

FollowResult follow_path(const PortLabeledGraph& g, std::uint32_t start, const Path& p) {
    FollowResult r;
    std::uint32_t cur = start;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] >= g.degree(cur)) {
            r.fail_index = i + 1;
            return r;
        }
        cur = g.adj[cur][p[i]].to;
    }
    r.ok = true;
    r.node = cur;
    return r;
}

std::vector<std::uint32_t> nodes_on_path(const PortLabeledGraph& g, std::uint32_t start, const Path& p) {
    std::vector<std::uint32_t> out{start};
    std::uint32_t cur = start;
    for (std::uint32_t port : p) {
        if (port >= g.degree(cur)) break;
        cur = g.adj[cur][port].to;
        out.push_back(cur);
    }
    return out;
}

PortLabeledGraph generate(GraphKind kind, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("graph size must be positive");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    switch (kind) {
        case GraphKind::Ring: {
            if (n < 3) throw std::invalid_argument("ring requires n >= 3 (parallel edges are excluded)");
            for (std::uint32_t v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1});
            edges.push_back({static_cast<std::uint32_t>(n - 1), 0});
            // Port 0 leads clockwise and port 1 counter-clockwise at every
            // node except the wrap-around pair, whose order follows edge
            // insertion; validate() holds either way.
            return from_edges(n, edges);
        }
        case GraphKind::Line: {
            if (n < 2) throw std::invalid_argument("line requires n >= 2");
            for (std::uint32_t v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1});
            return from_edges(n, edges);
        }
        case GraphKind::Complete: {
            if (n < 3) throw std::invalid_argument("complete graph requires n >= 3 here (n=2 is the line)");
            for (std::uint32_t a = 0; a < n; ++a)
                for (std::uint32_t b = a + 1; b < n; ++b) edges.push_back({a, b});
            return from_edges(n, edges);
        }
        case GraphKind::RandomConnected: {
            SeededRng rng(seed * 0x5851f42d4c957f2dULL + 0x14057b7ef767814fULL);
            // Random spanning tree: attach each new node to a uniformly
            // random earlier node, then shuffle node labels.
            std::vector<std::uint32_t> order(n);
            std::iota(order.begin(), order.end(), 0u);
            shuffle_seeded(order, rng);
            std::set<std::pair<std::uint32_t, std::uint32_t>> present;
            auto add_edge = [&](std::uint32_t a, std::uint32_t b) {
                if (a == b) return false;
                auto key = std::minmax(a, b);
                if (!present.insert({key.first, key.second}).second) return false;
                edges.push_back({a, b});
                return true;
            };
            for (std::size_t i = 1; i < n; ++i) {
                add_edge(order[i], order[rng.below(i)]);
            }
            if (n >= 2) {
                const std::uint64_t extra = rng.below(n);
                for (std::uint64_t e = 0; e < extra; ++e) {
                    add_edge(static_cast<std::uint32_t>(rng.below(n)),
                             static_cast<std::uint32_t>(rng.below(n)));
                }
            }
            // Seed-deterministic port order: shuffle the edge list, then
            // assign ports by appearance.
            shuffle_seeded(edges, rng);
            return from_edges(n, edges);
        }
    }
    throw std::logic_error("unreachable");
}

std::string plain_encode(const PortLabeledGraph& g) {
    std::string out;
    out.push_back('G');
    append_u8(out, static_cast<std::uint32_t>(g.node_count()));
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
        append_u8(out, g.degree(v));
        for (const PortTarget& t : g.adj[v]) {
            append_u8(out, t.to);
            append_u8(out, t.back);
        }
    }
    return out;
}

PortLabeledGraph relabel(const PortLabeledGraph& g, const std::vector<std::uint32_t>& perm) {
    PortLabeledGraph out;
    out.adj.assign(g.node_count(), {});
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
        out.adj[perm[v]].resize(g.degree(v));
        for (std::uint32_t p = 0; p < g.degree(v); ++p) {
            out.adj[perm[v]][p] = {perm[g.adj[v][p].to], g.adj[v][p].back};
        }
    }
    return out;
}

std::string canonical_encode(const PortLabeledGraph& g) {
    const std::size_t n = g.node_count();
    if (n > 8) throw std::invalid_argument("canonical_encode is exhaustive and limited to n <= 8");
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::string best;
    do {
        std::string enc = plain_encode(relabel(g, perm));
        if (best.empty() || enc < best) best = std::move(enc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

GraphDecodeResult canonical_decode(const std::string& bytes) {
    GraphDecodeResult r;
    std::size_t pos = 0;
    auto need = [&](std::size_t count) {
        if (pos + count > bytes.size()) {
            r.error_pos = bytes.size();
            r.error = "truncated encoding";
            return false;
        }
        return true;
    };
    if (!need(2)) return r;
    if (bytes[0] != 'G') {
        r.error_pos = 0;
        r.error = "bad magic byte";
        return r;
    }
    pos = 1;
    const auto n = static_cast<std::uint8_t>(bytes[pos++]);
    if (n == 0) {
        r.error_pos = 1;
        r.error = "zero node count";
        return r;
    }
    PortLabeledGraph g;
    g.adj.assign(n, {});
    for (std::uint32_t v = 0; v < n; ++v) {
        if (!need(1)) return r;
        const auto deg = static_cast<std::uint8_t>(bytes[pos++]);
        g.adj[v].resize(deg);
        for (std::uint32_t p = 0; p < deg; ++p) {
            if (!need(2)) return r;
            g.adj[v][p].to = static_cast<std::uint8_t>(bytes[pos++]);
            g.adj[v][p].back = static_cast<std::uint8_t>(bytes[pos++]);
        }
    }
    if (pos != bytes.size()) {
        r.error_pos = pos;
        r.error = "trailing bytes";
        return r;
    }
    auto report = validate(g);
    if (!report.ok) {
        r.error_pos = 2;
        r.error = "decoded graph invalid: " + report.issues.front();
        return r;
    }
    r.ok = true;
    r.graph = std::move(g);
    return r;
}

std::string to_text(const PortLabeledGraph& g) {
    std::ostringstream out;
    out << "n=" << g.node_count() << "\n";
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
        out << v << ":";
        for (const PortTarget& t : g.adj[v]) out << " (" << t.to << "," << t.back << ")";
        out << "\n";
    }
    return out.str();
}

GraphDecodeResult from_text(const std::string& text) {
    GraphDecodeResult r;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("n=", 0) != 0) {
        r.error = "missing n= header";
        return r;
    }
    std::size_t n = 0;
    try {
        n = std::stoul(line.substr(2));
    } catch (...) {
        r.error = "bad node count";
        return r;
    }
    if (n == 0) {
        r.error = "zero node count";
        return r;
    }
    PortLabeledGraph g;
    g.adj.assign(n, {});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::uint32_t v = 0;
        char colon = 0;
        if (!(ls >> v >> colon) || colon != ':' || v >= n) {
            r.error = "bad node line: " + line;
            return r;
        }
        char open = 0, comma = 0, close = 0;
        std::uint32_t to = 0, back = 0;
        while (ls >> open >> to >> comma >> back >> close) {
            if (open != '(' || comma != ',' || close != ')') {
                r.error = "bad port entry on line: " + line;
                return r;
            }
            g.adj[v].push_back({to, back});
        }
    }
    auto report = validate(g);
    if (!report.ok) {
        r.error = "graph invalid: " + report.issues.front();
        return r;
    }
    r.ok = true;
    r.graph = std::move(g);
    return r;
}

std::vector<int> bfs_distances(const PortLabeledGraph& g, std::uint32_t start) {
    std::vector<int> dist(g.node_count(), -1);
    std::deque<std::uint32_t> queue{start};
    dist[start] = 0;
    while (!queue.empty()) {
        const std::uint32_t v = queue.front();
        queue.pop_front();
        for (const PortTarget& t : g.adj[v]) {
            if (dist[t.to] < 0) {
                dist[t.to] = dist[v] + 1;
                queue.push_back(t.to);
            }
        }
    }
    return dist;
}

std::optional<Path> lex_shortest_path(const PortLabeledGraph& g, std::uint32_t from, std::uint32_t to) {
    const auto dist = bfs_distances(g, to);
    if (dist[from] < 0) return std::nullopt;
    Path p;
    std::uint32_t cur = from;
    while (cur != to) {
        bool stepped = false;
        for (std::uint32_t port = 0; port < g.degree(cur); ++port) {
            const std::uint32_t next = g.adj[cur][port].to;
            if (dist[next] == dist[cur] - 1) {
                p.push_back(port);
                cur = next;
                stepped = true;
                break;
            }
        }
        if (!stepped) return std::nullopt;
    }
    return p;
}

}  // namespace muster
