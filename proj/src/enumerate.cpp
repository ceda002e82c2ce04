#include "muster/enumerate.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>

namespace muster {

namespace {

std::mutex g_cache_mutex;
std::map<std::size_t, std::shared_ptr<const std::vector<PortLabeledGraph>>> g_graph_cache;
std::map<std::size_t, std::shared_ptr<const std::vector<MarkedGraph>>> g_marked_cache;

bool connected_mask(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t components = n;
    for (auto [a, b] : edges) {
        const auto ra = find(a), rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    }
    return components == 1;
}

// Enumerates every assignment of port numbers: for each node, a permutation
// of its incident edges. The callback receives each completed graph.
template <typename Fn>
void for_each_port_assignment(std::size_t n,
                              const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                              Fn&& fn) {
    std::vector<std::vector<std::uint32_t>> incident(n);  // edge indices per node
    for (std::uint32_t e = 0; e < edges.size(); ++e) {
        incident[edges[e].first].push_back(e);
        incident[edges[e].second].push_back(e);
    }
    std::vector<std::vector<std::uint32_t>> perms(n);
    for (std::uint32_t v = 0; v < n; ++v) {
        perms[v].resize(incident[v].size());
        std::iota(perms[v].begin(), perms[v].end(), 0u);
    }
    // Odometer over per-node permutations.
    while (true) {
        // ports_at[v][slot] = edge index; port number == slot.
        PortLabeledGraph g;
        g.adj.assign(n, {});
        std::vector<std::vector<std::uint32_t>> port_of_edge_at(n);
        for (std::uint32_t v = 0; v < n; ++v) g.adj[v].resize(incident[v].size());
        // First pass: port of each edge at each endpoint.
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_port(edges.size(), {0, 0});
        for (std::uint32_t v = 0; v < n; ++v) {
            for (std::uint32_t slot = 0; slot < incident[v].size(); ++slot) {
                const std::uint32_t e = incident[v][perms[v][slot]];
                if (edges[e].first == v)
                    edge_port[e].first = slot;
                else
                    edge_port[e].second = slot;
            }
        }
        for (std::uint32_t e = 0; e < edges.size(); ++e) {
            const auto [a, b] = edges[e];
            const auto [pa, pb] = edge_port[e];
            g.adj[a][pa] = {b, pb};
            g.adj[b][pb] = {a, pa};
        }
        fn(g);
        // Advance odometer.
        std::size_t v = 0;
        for (; v < n; ++v) {
            if (std::next_permutation(perms[v].begin(), perms[v].end())) break;
        }
        if (v == n) break;
    }
}

template <typename Fn>
void for_each_connected_port_graph(std::size_t n, Fn&& fn) {
    if (n == 1) {
        PortLabeledGraph g;
        g.adj.assign(1, {});
        fn(g);
        return;
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> all_pairs;
    for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = a + 1; b < n; ++b) all_pairs.push_back({a, b});
    const std::size_t masks = std::size_t{1} << all_pairs.size();
    for (std::size_t mask = 0; mask < masks; ++mask) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (std::size_t e = 0; e < all_pairs.size(); ++e) {
            if (mask & (std::size_t{1} << e)) edges.push_back(all_pairs[e]);
        }
        if (edges.size() < n - 1 || !connected_mask(n, edges)) continue;
        for_each_port_assignment(n, edges, fn);
    }
}

}  // namespace

std::shared_ptr<const std::vector<PortLabeledGraph>> enumerate_graphs_exact(std::size_t n) {
    if (n == 0 || n > 6) throw std::invalid_argument("graph enumeration supports 1 <= n <= 6");
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        auto it = g_graph_cache.find(n);
        if (it != g_graph_cache.end()) return it->second;
    }
    std::map<std::string, PortLabeledGraph> by_canonical;
    for_each_connected_port_graph(n, [&](const PortLabeledGraph& g) {
        std::string canon = canonical_encode(g);
        by_canonical.emplace(std::move(canon), g);
    });
    auto out = std::make_shared<std::vector<PortLabeledGraph>>();
    out->reserve(by_canonical.size());
    for (auto& [canon, g] : by_canonical) {
        // Store the canonical representative itself so encodings round-trip.
        out->push_back(canonical_decode(canon).graph);
    }
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto& slot = g_graph_cache[n];
    if (!slot) slot = out;
    return slot;
}

std::vector<PortLabeledGraph> enumerate_graphs(std::size_t n_max) {
    std::vector<PortLabeledGraph> out;
    for (std::size_t n = 1; n <= n_max; ++n) {
        auto part = enumerate_graphs_exact(n);
        out.insert(out.end(), part->begin(), part->end());
    }
    return out;
}

std::string marked_canonical_encode(const PortLabeledGraph& g, std::uint32_t mark) {
    const std::size_t n = g.node_count();
    if (n > 8) throw std::invalid_argument("marked canonical encoding limited to n <= 8");
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::string best;
    do {
        std::string enc = plain_encode(relabel(g, perm));
        enc.push_back(static_cast<char>(perm[mark]));
        if (best.empty() || enc < best) best = std::move(enc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::shared_ptr<const std::vector<MarkedGraph>> enumerate_marked_graphs(std::size_t n) {
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        auto it = g_marked_cache.find(n);
        if (it != g_marked_cache.end()) return it->second;
    }
    auto graphs = enumerate_graphs_exact(n);
    std::map<std::string, MarkedGraph> by_canonical;
    for (const auto& g : *graphs) {
        for (std::uint32_t v = 0; v < n; ++v) {
            by_canonical.emplace(marked_canonical_encode(g, v), MarkedGraph{g, v});
        }
    }
    auto out = std::make_shared<std::vector<MarkedGraph>>();
    for (auto& [canon, mg] : by_canonical) out->push_back(mg);
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto& slot = g_marked_cache[n];
    if (!slot) slot = out;
    return slot;
}

}  // namespace muster
