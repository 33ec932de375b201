#include <algorithm>
#include <chrono>
#include <functional>
#include <tuple>

#include "g2cp/config.hpp"
#include "g2cp/errors.hpp"
#include "g2cp/traversal.hpp"

namespace g2cp {

namespace {

using Clock = std::chrono::steady_clock;

long elapsed_ms_since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

bool passes(const KnowledgeGraph& graph, const NodeId& id, const TraverseOp& op) {
    if (!op.constraints) return true;
    return eval_predicate(graph.node(id), *op.constraints);
}

// All shortest source->leaf paths inside the explored subgraph, appended in a
// deterministic order. Returns false once the global path cap is hit.
bool enumerate_pair_paths(const KnowledgeGraph& graph, const std::set<NodeId>& explored,
                          const std::set<std::string>& via, const NodeId& source,
                          const NodeId& leaf, std::vector<WirePath>& out) {
    // Forward distances from the source within the explored subgraph.
    std::map<NodeId, int> dist;
    dist[source] = 0;
    std::vector<NodeId> frontier = {source};
    while (!frontier.empty()) {
        std::vector<NodeId> next;
        for (const NodeId& u : frontier) {
            for (const EdgeId& eid : graph.out_edges(u)) {
                const Edge& e = graph.edge(eid);
                if (!via.count(e.type) || !explored.count(e.to)) continue;
                if (dist.count(e.to)) continue;
                dist[e.to] = dist[u] + 1;
                next.push_back(e.to);
            }
        }
        frontier = std::move(next);
    }
    auto it = dist.find(leaf);
    if (it == dist.end()) return true;  // unreachable pair, nothing to emit
    const int target = it->second;
    if (target == 0) return true;  // source == leaf, no edges to show

    // Reverse distances to the leaf, restricted to the same subgraph.
    std::map<NodeId, int> back;
    back[leaf] = 0;
    std::vector<NodeId> rfrontier = {leaf};
    int hops = 0;
    while (!rfrontier.empty() && hops < target) {
        std::vector<NodeId> next;
        ++hops;
        for (const NodeId& u : explored) {
            if (back.count(u)) continue;
            for (const EdgeId& eid : graph.out_edges(u)) {
                const Edge& e = graph.edge(eid);
                if (!via.count(e.type) || !explored.count(e.to)) continue;
                auto b = back.find(e.to);
                if (b != back.end() && b->second == hops - 1) {
                    back[u] = hops;
                    next.push_back(u);
                    break;
                }
            }
        }
        rfrontier = std::move(next);
    }

    // Depth-first expansion along the shortest-path DAG; candidate steps are
    // ordered by (next node, edge type) so output is reproducible.
    struct Step {
        NodeId to;
        std::string type;
    };
    std::vector<WireEdge> prefix;
    bool ok = true;
    std::function<void(const NodeId&)> walk = [&](const NodeId& u) {
        if (!ok) return;
        int d = dist[u];
        if (d == target) {
            if (out.size() >= kMaxPathsPerResult) {
                ok = false;
                return;
            }
            out.push_back({prefix});
            return;
        }
        std::vector<Step> steps;
        for (const EdgeId& eid : graph.out_edges(u)) {
            const Edge& e = graph.edge(eid);
            if (!via.count(e.type) || !explored.count(e.to)) continue;
            auto dv = dist.find(e.to);
            auto bv = back.find(e.to);
            if (dv == dist.end() || bv == back.end()) continue;
            if (dv->second != d + 1 || dv->second + bv->second != target) continue;
            steps.push_back({e.to, e.type});
        }
        std::sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) {
            return std::tie(a.to, a.type) < std::tie(b.to, b.type);
        });
        steps.erase(std::unique(steps.begin(), steps.end(),
                                [](const Step& a, const Step& b) {
                                    return a.to == b.to && a.type == b.type;
                                }),
                    steps.end());
        for (const Step& s : steps) {
            prefix.push_back({u, s.type, s.to});
            walk(s.to);
            prefix.pop_back();
            if (!ok) return;
        }
    };
    walk(source);
    return ok;
}

}  // namespace

TraversalResult traverse(const KnowledgeGraph& graph, const GraphSchema& schema,
                         const TraverseOp& op, const ConversationContext& ctx,
                         const EmbeddingProvider& embedder, const ExecutionLimits& limits) {
    const auto start = Clock::now();
    TraversalResult res;

    std::set<NodeId> source_set =
        resolve_selector(graph, schema, op.from, ctx, embedder);
    if (source_set.empty()) throw SourceEmpty();
    res.sources.assign(source_set.begin(), source_set.end());

    const int h_eff = op.depth.unbounded ? limits.max_effective_depth : op.depth.hops;

    std::set<NodeId> explored;
    std::vector<NodeId> frontier;
    for (const NodeId& s : res.sources) {
        explored.insert(s);
        res.depth[s] = 0;
        res.confidence[s] = 1.0;
        frontier.push_back(s);
    }
    if (frontier.size() > limits.max_result_nodes) {
        frontier.resize(limits.max_result_nodes);
        explored = std::set<NodeId>(frontier.begin(), frontier.end());
        for (auto it = res.depth.begin(); it != res.depth.end();)
            it = explored.count(it->first) ? std::next(it) : res.depth.erase(it);
        for (auto it = res.confidence.begin(); it != res.confidence.end();)
            it = explored.count(it->first) ? std::next(it) : res.confidence.erase(it);
        res.truncated = true;
    }
    res.stats.expanded_nodes = frontier.size();

    int reached = 0;
    for (int layer = 1; layer <= h_eff; ++layer) {
        if (elapsed_ms_since(start) > limits.timeout_ms) {
            res.stats.timed_out = true;
            res.truncated = true;
            break;
        }
        std::set<NodeId> next_set;
        for (const NodeId& u : frontier) {
            for (const EdgeId& eid : graph.out_edges(u)) {
                const Edge& e = graph.edge(eid);
                if (!op.via.count(e.type)) continue;
                if (explored.count(e.to) || next_set.count(e.to)) continue;
                if (!passes(graph, e.to, op)) continue;
                next_set.insert(e.to);
            }
        }
        std::vector<NodeId> next(next_set.begin(), next_set.end());
        if (next.size() > limits.frontier_cap) {
            next.resize(limits.frontier_cap);
            res.truncated = true;
        }
        if (explored.size() + next.size() > limits.max_result_nodes) {
            next.resize(limits.max_result_nodes - explored.size());
            res.truncated = true;
        }
        if (next.empty()) break;
        reached = layer;
        res.stats.expanded_nodes = std::max(res.stats.expanded_nodes, next.size());
        for (const NodeId& v : next) {
            explored.insert(v);
            res.depth[v] = layer;
            double best = 0.0;
            for (const NodeId& u : frontier) {
                for (const EdgeId& eid : graph.out_edges(u)) {
                    const Edge& e = graph.edge(eid);
                    if (e.to != v || !op.via.count(e.type)) continue;
                    best = std::max(best, res.confidence[u] * e.weight);
                }
            }
            res.confidence[v] = best;
        }
        frontier = std::move(next);
        if (explored.size() >= limits.max_result_nodes) {
            res.truncated = true;
            break;
        }
    }
    res.effective_depth = reached;

    // Leaves: nodes at the requested effective depth, plus dead ends (no
    // via-typed continuation inside the explored set) at shallower layers.
    // With depth 0 every source sits at the effective depth and qualifies.
    std::set<NodeId> leaf_set;
    for (const NodeId& v : explored) {
        if (res.depth[v] == h_eff) {
            leaf_set.insert(v);
            continue;
        }
        bool dead_end = true;
        for (const EdgeId& eid : graph.out_edges(v)) {
            const Edge& e = graph.edge(eid);
            if (op.via.count(e.type) && explored.count(e.to)) {
                dead_end = false;
                break;
            }
        }
        if (dead_end) leaf_set.insert(v);
    }
    res.leaves.assign(leaf_set.begin(), leaf_set.end());

    res.body.format = op.ret;
    auto confidence_for = [&](const std::vector<NodeId>& nodes) {
        std::vector<double> out;
        out.reserve(nodes.size());
        for (const NodeId& n : nodes) out.push_back(res.confidence.at(n));
        return out;
    };

    switch (op.ret) {
        case ReturnFormat::Subgraph: {
            res.body.nodes.assign(explored.begin(), explored.end());
            std::set<std::tuple<NodeId, std::string, NodeId>> seen;
            for (const NodeId& u : explored) {
                for (const EdgeId& eid : graph.out_edges(u)) {
                    const Edge& e = graph.edge(eid);
                    if (!op.via.count(e.type) || !explored.count(e.to)) continue;
                    seen.insert({e.from, e.type, e.to});
                }
            }
            for (const auto& [f, t, to] : seen) res.body.edges.push_back({f, t, to});
            res.body.confidence = confidence_for(res.body.nodes);
            break;
        }
        case ReturnFormat::Leaves: {
            res.body.nodes = res.leaves;
            res.body.confidence = confidence_for(res.body.nodes);
            break;
        }
        case ReturnFormat::Paths: {
            bool capped = false;
            std::set<NodeId> used;
            for (const NodeId& leaf : res.leaves) {
                for (const NodeId& s : res.sources) {
                    // A source that is its own leaf has a zero-length path;
                    // the wire cannot carry an empty step list, so the node
                    // joins the result without a path entry.
                    if (s == leaf) {
                        used.insert(leaf);
                        continue;
                    }
                    if (!enumerate_pair_paths(graph, explored, op.via, s, leaf,
                                              res.body.paths)) {
                        capped = true;
                        break;
                    }
                }
                if (capped) break;
            }
            if (capped) res.truncated = true;
            std::set<std::tuple<NodeId, std::string, NodeId>> used_edges;
            for (const WirePath& p : res.body.paths) {
                for (const WireEdge& e : p.steps) {
                    used.insert(e.from);
                    used.insert(e.to);
                    used_edges.insert({e.from, e.type, e.to});
                }
            }
            res.body.nodes.assign(used.begin(), used.end());
            for (const auto& [f, t, to] : used_edges) res.body.edges.push_back({f, t, to});
            res.body.confidence = confidence_for(res.body.nodes);
            break;
        }
    }

    res.stats.elapsed_ms = elapsed_ms_since(start);
    return res;
}

Payload run_traverse(const KnowledgeGraph& graph, const GraphSchema& schema,
                     const TraverseOp& op, const ConversationContext& ctx,
                     const EmbeddingProvider& embedder, const ExecutionLimits& limits) {
    try {
        TraversalResult res = traverse(graph, schema, op, ctx, embedder, limits);
        if (res.stats.timed_out) return ErrorBody{kErrTimeout, "traversal exceeded time budget"};
        return res.body;
    } catch (const SourceEmpty& e) {
        return ErrorBody{kErrSourceEmpty, e.what()};
    } catch (const UnknownNode& e) {
        return ErrorBody{kErrUnknownNode, e.what()};
    } catch (const UnknownContextSymbol& e) {
        return ErrorBody{kErrMalformed, e.what()};
    } catch (const SchemaViolation& e) {
        return ErrorBody{kErrSchemaViolation, e.what()};
    }
}

}  // namespace g2cp
