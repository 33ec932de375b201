#include <algorithm>
#include <deque>
#include <random>

#include "g2cp/errors.hpp"
#include "g2cp/stats.hpp"

namespace g2cp {

GraphStats compute_stats(const KnowledgeGraph& graph) {
    if (graph.node_count() == 0) throw EmptyGraph("statistics need at least one node");
    GraphStats s;
    s.node_count = graph.node_count();
    s.edge_count = graph.edge_count();
    const double n = static_cast<double>(s.node_count);
    const double e = static_cast<double>(s.edge_count);
    s.density = s.node_count > 1 ? e / (n * (n - 1)) : 0.0;
    s.avg_out_degree = e / n;
    s.avg_total_degree = 2.0 * e / n;

    // Dense index for BFS.
    std::vector<NodeId> ids;
    ids.reserve(s.node_count);
    std::map<NodeId, int> index;
    for (const auto& [id, node] : graph.nodes()) {
        index[id] = static_cast<int>(ids.size());
        ids.push_back(id);
    }
    std::vector<std::vector<int>> adj(ids.size());
    for (const auto& [eid, edge] : graph.edges())
        adj[index[edge.from]].push_back(index[edge.to]);

    int best = 0;
    bool connected = true;
    std::vector<int> dist(ids.size());
    for (std::size_t src = 0; src < ids.size(); ++src) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[src] = 0;
        std::deque<int> q = {static_cast<int>(src)};
        int reached = 1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            for (int v : adj[u]) {
                if (dist[v] != -1) continue;
                dist[v] = dist[u] + 1;
                best = std::max(best, dist[v]);
                ++reached;
                q.push_back(v);
            }
        }
        if (reached != static_cast<int>(ids.size())) connected = false;
    }
    s.diameter = best;
    s.fully_connected = connected;
    return s;
}

// ---------------------------------------------------------------------------

const GraphSchema& synthetic_schema() {
    static const GraphSchema schema = [] {
        GraphSchema s;
        s.node_types = {"N"};
        s.edge_types = {"link"};
        return s;
    }();
    return schema;
}

namespace {

NodeId synth_id(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "N:%07zu", i);
    return buf;
}

Node synth_node(std::size_t i, const EmbeddingProvider& embedder) {
    Node n;
    n.id = synth_id(i);
    n.type = "N";
    n.display_name = "node " + std::to_string(i);
    n.embedding = embedder.embed(n.display_name);
    return n;
}

Edge synth_edge(std::size_t from, std::size_t to) {
    Edge e;
    e.from = synth_id(from);
    e.to = synth_id(to);
    e.type = "link";
    e.id = make_edge_id(e.from, e.type, e.to, 0);
    return e;
}

}  // namespace

KnowledgeGraph make_regular_tree(std::size_t n, int r, const EmbeddingProvider& embedder) {
    KnowledgeGraph g;
    for (std::size_t i = 0; i < n; ++i) g.add_node(synth_node(i, embedder));
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 1; j <= r; ++j) {
            const std::size_t child = i * static_cast<std::size_t>(r) + j;
            if (child >= n) break;
            g.add_edge(synth_edge(i, child));
        }
    return g;
}

KnowledgeGraph make_random_graph(std::size_t n, std::size_t m, std::uint64_t seed,
                                 const EmbeddingProvider& embedder) {
    if (n < 2 && m > 0) throw Error("cannot place edges on fewer than two nodes");
    KnowledgeGraph g;
    for (std::size_t i = 0; i < n; ++i) g.add_node(synth_node(i, embedder));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::set<std::pair<std::size_t, std::size_t>> used;
    while (used.size() < m) {
        const std::size_t a = pick(rng);
        const std::size_t b = pick(rng);
        if (a == b) continue;
        if (!used.insert({a, b}).second) continue;
        g.add_edge(synth_edge(a, b));
    }
    return g;
}

KnowledgeGraph make_shuffled_tree(std::size_t n, int r, std::uint64_t seed,
                                  const EmbeddingProvider& embedder) {
    KnowledgeGraph g;
    for (std::size_t i = 0; i < n; ++i) g.add_node(synth_node(i, embedder));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 1; j <= r; ++j) {
            const std::size_t child = i * static_cast<std::size_t>(r) + j;
            if (child >= n) break;
            pairs.emplace_back(i, child);
        }
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (const auto& [from, to] : pairs) g.add_edge(synth_edge(from, to));
    return g;
}

std::vector<BenchRow> bench_traversal(const std::vector<std::size_t>& sizes,
                                      const std::vector<int>& branchings,
                                      const std::vector<int>& depths,
                                      const EmbeddingProvider& embedder,
                                      std::uint64_t seed) {
    std::vector<BenchRow> rows;
    ExecutionLimits open;
    open.timeout_ms = 10L * 60 * 1000;
    open.max_result_nodes = 2'000'000;
    open.frontier_cap = 2'000'000;

    for (int r : branchings) {
        for (std::size_t n : sizes) {
            const KnowledgeGraph g = make_regular_tree(n, r, embedder);
            for (int h : depths) {
                TraverseOp op;
                op.from = NodeSelector::explicit_ids({synth_id(0)});
                op.via = {"link"};
                op.depth = Depth::bounded(h);
                op.ret = ReturnFormat::Subgraph;
                ConversationContext ctx;
                ctx.id = "bench";
                const TraversalResult res =
                    traverse(g, synthetic_schema(), op, ctx, embedder, open);
                BenchRow row;
                row.n = n;
                row.r = r;
                row.h = h;
                row.expanded_nodes = res.stats.expanded_nodes;
                row.elapsed_ms = res.stats.elapsed_ms;
                std::size_t bound = 1;  // |V_s| = 1, one via type
                for (int i = 0; i < h; ++i) bound *= static_cast<std::size_t>(r);
                row.bound = bound;
                row.result_nodes = res.body.nodes.size();
                if (seed != 0) {
                    const KnowledgeGraph shuffled =
                        make_shuffled_tree(n, r, seed, embedder);
                    const TraversalResult again =
                        traverse(shuffled, synthetic_schema(), op, ctx, embedder, open);
                    row.order_independent = again.body == res.body;
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

}  // namespace g2cp
