#pragma once

#include <cstdint>
#include <vector>

#include "g2cp/graph.hpp"
#include "g2cp/traversal.hpp"

namespace g2cp {

// Directed-graph summary. Degree is reported under both conventions because
// mean out-degree and mean total degree differ by a factor of two and both
// show up in fixture descriptions.
struct GraphStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    double density = 0;           // E / (n * (n - 1))
    double avg_out_degree = 0;    // E / n
    double avg_total_degree = 0;  // 2E / n
    int diameter = 0;             // largest finite directed eccentricity
    bool fully_connected = true;  // false when some ordered pair is unreachable
};

// Throws EmptyGraph on a graph with no nodes. Diameter is computed by
// all-pairs BFS over the union of all edge types.
GraphStats compute_stats(const KnowledgeGraph& graph);

// ---------------------------------------------------------------------------
// Synthetic generators

// Schema used by every synthetic graph below: node type "N", edge type "link".
const GraphSchema& synthetic_schema();

// Complete r-ary out-tree on n nodes: node i points to i*r+1 .. i*r+r (when in
// range). Starting a traversal at the root puts exactly r^h nodes on layer h,
// independent of n, which makes the expansion bound exact.
KnowledgeGraph make_regular_tree(std::size_t n, int r, const EmbeddingProvider& embedder);

// n nodes and m distinct random edges (no self loops); deterministic in seed.
KnowledgeGraph make_random_graph(std::size_t n, std::size_t m, std::uint64_t seed,
                                 const EmbeddingProvider& embedder);

// Same tree as make_regular_tree with the edge insertion order shuffled by
// `seed`. Canonical traversal output must not depend on insertion order, so
// the bench reruns every row against this variant.
KnowledgeGraph make_shuffled_tree(std::size_t n, int r, std::uint64_t seed,
                                  const EmbeddingProvider& embedder);

// ---------------------------------------------------------------------------
// Complexity bench

struct BenchRow {
    std::size_t n = 0;            // graph size
    int r = 0;                    // branching factor
    int h = 0;                    // traversal depth
    std::size_t expanded_nodes = 0;
    long elapsed_ms = 0;
    std::size_t bound = 0;        // |V_s| * (r * |via|)^h
    std::size_t result_nodes = 0;
    bool order_independent = true;
};

// Runs a root traversal at every (n, r, h) combination over regular trees.
// Limits are opened wide so the bound is observed, not enforced. A nonzero
// seed reruns each row on a shuffled-insertion copy and records whether the
// canonical result matched.
std::vector<BenchRow> bench_traversal(const std::vector<std::size_t>& sizes,
                                      const std::vector<int>& branchings,
                                      const std::vector<int>& depths,
                                      const EmbeddingProvider& embedder,
                                      std::uint64_t seed = 0);

}  // namespace g2cp
