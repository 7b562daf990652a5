#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fockforge {

struct StableGraph {
    std::vector<int> genus;                  // g_v per vertex
    std::vector<std::pair<int, int>> edges;  // (u, v) with u <= v; u == v is a loop
    std::vector<int> legs;                   // legs[l] = vertex carrying leg l

    int vertex_count() const { return static_cast<int>(genus.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }
    int valence(int v) const;
    int total_genus() const;
    bool connected() const;
    bool stable() const;
    // multiplicity[u][v] = number of edges between u and v (loops on the diagonal).
    std::vector<std::vector<int>> multiplicity() const;
};

struct GraphWithAut {
    StableGraph graph;
    long aut;
};

// Equal iff the graphs are isomorphic by a map fixing legs pointwise.
std::vector<int> canonical_form(const StableGraph& graph);

long automorphism_order(const StableGraph& graph);

// Isomorphism classes of connected stable graphs of type (g, n), in a fixed
// deterministic order. max_edges < 0 means no cap. Cached per (g, n, max_edges).
const std::vector<GraphWithAut>& enumerate_stable_graphs(int g, int n, int max_edges = -1);

std::string graphs_to_json(const std::vector<GraphWithAut>& graphs, int indent = 2);

}  // namespace fockforge
