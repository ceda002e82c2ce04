#pragma once

#include "muster/graph.hpp"

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace muster {

// All connected port-labeled simple graphs with exactly n nodes, one per
// canonical form, sorted by canonical encoding. Exhaustive; feasible up to
// n = 6 and refused beyond that. Results are cached per n.
std::shared_ptr<const std::vector<PortLabeledGraph>> enumerate_graphs_exact(std::size_t n);

// Same, for all sizes 1..n_max flattened (size-major order).
std::vector<PortLabeledGraph> enumerate_graphs(std::size_t n_max);

// A graph with one marked node (a token holder). Canonical form minimizes
// the encoding jointly with the mark.
struct MarkedGraph {
    PortLabeledGraph graph;
    std::uint32_t mark = 0;
};

std::shared_ptr<const std::vector<MarkedGraph>> enumerate_marked_graphs(std::size_t n);

std::string marked_canonical_encode(const PortLabeledGraph& g, std::uint32_t mark);

}  // namespace muster
