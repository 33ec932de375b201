#include "g2cp/delta.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "g2cp/errors.hpp"

namespace g2cp {
namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::vector<Violation> validate_delta(const KnowledgeGraph& graph, const GraphDelta& delta,
                                      const GraphSchema& schema,
                                      const std::vector<NodeId>& retired_node_ids,
                                      const std::vector<EdgeId>& retired_edge_ids) {
    std::vector<Violation> out;
    std::set<NodeId> added_nodes;

    for (const Node& n : delta.add_nodes) {
        if (!schema.node_types.count(n.type))
            out.push_back({"UNKNOWN_NODE_TYPE", "node '" + n.id + "' has undeclared type '" +
                                                    n.type + "'"});
        if (node_type_of(n.id) != n.type)
            out.push_back({"BAD_NODE_ID", "node id '" + n.id + "' lacks type prefix '" + n.type +
                                              ":'"});
        if (graph.has_node(n.id))
            out.push_back({"DUPLICATE_NODE", "node '" + n.id + "' already exists"});
        if (!added_nodes.insert(n.id).second)
            out.push_back({"DUPLICATE_NODE", "node '" + n.id + "' added twice in one delta"});
        if (contains(retired_node_ids, n.id))
            out.push_back({"ID_REUSE", "node id '" + n.id + "' was deleted earlier; ids are "
                                       "never reused"});
        if (auto it = schema.required_attrs.find(n.type); it != schema.required_attrs.end())
            for (const auto& key : it->second)
                if (!n.attrs.count(key))
                    out.push_back({"MISSING_ATTR",
                                   "node '" + n.id + "' missing required attr '" + key + "'"});
        if (contains(delta.del_nodes, n.id))
            out.push_back({"ADD_DEL_OVERLAP", "node '" + n.id + "' both added and deleted"});
    }

    auto node_type_in = [&](const NodeId& id) -> std::string {
        if (graph.has_node(id)) return graph.node(id).type;
        for (const Node& n : delta.add_nodes)
            if (n.id == id) return n.type;
        return {};
    };

    std::set<std::tuple<NodeId, std::string, NodeId, Timestamp>> seen_new;
    for (const Edge& e : delta.add_edges) {
        if (!schema.edge_types.count(e.type))
            out.push_back({"UNKNOWN_EDGE_TYPE", "edge type '" + e.type + "' not declared"});
        const std::string ft = node_type_in(e.from);
        const std::string tt = node_type_in(e.to);
        if (ft.empty())
            out.push_back({"DANGLING_EDGE", "edge endpoint '" + e.from + "' unknown"});
        if (tt.empty()) out.push_back({"DANGLING_EDGE", "edge endpoint '" + e.to + "' unknown"});
        if (!ft.empty() && !tt.empty() && schema.edge_types.count(e.type) &&
            !schema.allows(ft, e.type, tt))
            out.push_back({"SCHEMA_SIGNATURE", "signature (" + ft + ", " + e.type + ", " + tt +
                                                   ") not allowed"});
        if (graph.has_parallel_with_ts(e.from, e.type, e.to, e.ts))
            out.push_back({"DUPLICATE_EDGE", "edge " + e.from + " -[" + e.type + "]-> " + e.to +
                                                 " duplicates an existing edge with the same "
                                                 "timestamp"});
        if (!seen_new.insert({e.from, e.type, e.to, e.ts}).second)
            out.push_back({"DUPLICATE_EDGE", "edge " + e.from + " -[" + e.type + "]-> " + e.to +
                                                 " added twice with the same timestamp"});
        if (!e.id.empty()) {
            if (graph.has_edge(e.id))
                out.push_back({"DUPLICATE_EDGE", "edge id '" + e.id + "' already exists"});
            if (contains(retired_edge_ids, e.id))
                out.push_back({"ID_REUSE", "edge id '" + e.id + "' was deleted earlier"});
            if (contains(delta.del_edges, e.id))
                out.push_back({"ADD_DEL_OVERLAP", "edge '" + e.id + "' both added and deleted"});
        }
    }

    std::set<EdgeId> deleted_edges(delta.del_edges.begin(), delta.del_edges.end());
    for (const EdgeId& id : delta.del_edges)
        if (!graph.has_edge(id))
            out.push_back({"UNKNOWN_DELETE_TARGET", "edge '" + id + "' not in graph"});

    for (const NodeId& id : delta.del_nodes) {
        if (!graph.has_node(id)) {
            out.push_back({"UNKNOWN_DELETE_TARGET", "node '" + id + "' not in graph"});
            continue;
        }
        for (const EdgeId& eid : graph.incident_edges(id))
            if (!deleted_edges.count(eid))
                out.push_back({"DELETE_WITH_INCIDENT_EDGES",
                               "node '" + id + "' still has incident edge '" + eid + "'"});
        for (const Edge& e : delta.add_edges)
            if (e.from == id || e.to == id)
                out.push_back({"DELETE_WITH_INCIDENT_EDGES",
                               "node '" + id + "' is an endpoint of an added edge"});
    }
    return out;
}

GraphStore::GraphStore(KnowledgeGraph base, GraphSchema schema, const EmbeddingProvider& embedder)
    : base_(base), head_(std::move(base)), schema_(std::move(schema)), embedder_(embedder) {}

KnowledgeGraph GraphStore::graph_at(VersionId version) const {
    if (version > head_version())
        throw UnknownVersion("version " + std::to_string(version) + " past head " +
                             std::to_string(head_version()));
    KnowledgeGraph g = base_;
    for (VersionId i = 0; i < version; ++i)
        apply_in_place(g, history_[i].delta, history_[i].provenance);
    return g;
}

std::vector<Violation> GraphStore::validate(const GraphDelta& delta) const {
    return validate_delta(head_, delta, schema_, retired_nodes_, retired_edges_);
}

GraphDelta GraphStore::assign_edge_ids(const KnowledgeGraph& g, GraphDelta delta) const {
    std::set<EdgeId> used(retired_edges_.begin(), retired_edges_.end());
    for (Edge& e : delta.add_edges) {
        if (!e.id.empty()) continue;
        int k = g.parallel_count(e.from, e.type, e.to);
        EdgeId id = make_edge_id(e.from, e.type, e.to, k);
        while (g.has_edge(id) || used.count(id)) id = make_edge_id(e.from, e.type, e.to, ++k);
        used.insert(id);
        e.id = id;
    }
    return delta;
}

VersionId GraphStore::apply(const GraphDelta& delta, const ProvenanceTag& provenance,
                            VersionId expected_base) {
    if (expected_base != head_version())
        throw ConcurrentWriteConflict("delta targets version " + std::to_string(expected_base) +
                                      " but head is " + std::to_string(head_version()));
    auto violations = validate(delta);
    if (!violations.empty())
        throw SchemaViolation("delta rejected: " + violations.front().code + ": " +
                              violations.front().detail);
    GraphDelta resolved = assign_edge_ids(head_, delta);
    apply_in_place(head_, resolved, provenance);
    for (const NodeId& id : resolved.del_nodes) retired_nodes_.push_back(id);
    for (const EdgeId& id : resolved.del_edges) retired_edges_.push_back(id);
    history_.push_back({std::move(resolved), provenance.author, provenance.timestamp, provenance,
                        false, 0});
    return head_version();
}

VersionId GraphStore::rollback(VersionId version, const AgentId& author, Timestamp now) {
    KnowledgeGraph target = graph_at(version);
    GraphDelta inverse = diff_graphs(head_, target);
    ProvenanceTag prov{author, "rollback to version " + std::to_string(version), now, 1.0};
    apply_in_place(head_, inverse, prov);
    // Restored ids are live again; ids deleted by the inverse retire as usual.
    auto un_retire = [](std::vector<std::string>& pool, const std::string& id) {
        pool.erase(std::remove(pool.begin(), pool.end(), id), pool.end());
    };
    for (const Node& n : inverse.add_nodes) un_retire(retired_nodes_, n.id);
    for (const Edge& e : inverse.add_edges) un_retire(retired_edges_, e.id);
    for (const NodeId& id : inverse.del_nodes) retired_nodes_.push_back(id);
    for (const EdgeId& id : inverse.del_edges) retired_edges_.push_back(id);
    history_.push_back({std::move(inverse), author, now, prov, true, version});
    return head_version();
}

void GraphStore::apply_in_place(KnowledgeGraph& g, const GraphDelta& delta,
                                const ProvenanceTag& provenance) const {
    for (Node n : delta.add_nodes) {
        n.embedding = embedder_.embed(n.display_name);
        g.add_node(std::move(n));
    }
    for (Edge e : delta.add_edges) {
        if (e.id.empty())
            e.id = make_edge_id(e.from, e.type, e.to, g.parallel_count(e.from, e.type, e.to));
        if (!e.provenance) {
            e.provenance = provenance;
        } else if (e.provenance->author.empty()) {
            // Keep a caller-supplied confidence, fill in the rest.
            e.provenance->author = provenance.author;
            e.provenance->source_message = provenance.source_message;
            e.provenance->timestamp = provenance.timestamp;
        }
        g.add_edge(std::move(e));
    }
    for (const EdgeId& id : delta.del_edges) g.remove_edge(id);
    for (const NodeId& id : delta.del_nodes) g.remove_node(id);
}

GraphDelta delta_from_wire(const UpdateBody& body) {
    GraphDelta d;
    for (const WireAddNode& wn : body.add_nodes) {
        Node n;
        n.id = wn.id;
        n.type = wn.type;
        n.display_name = wn.name;
        n.attrs = wn.attrs;
        d.add_nodes.push_back(std::move(n));
    }
    for (const WireAddEdge& we : body.add_edges) {
        Edge e;
        e.from = we.from;
        e.to = we.to;
        e.type = we.type;
        e.weight = we.weight;
        e.ts = we.ts.value_or(0);
        if (we.confidence) {
            ProvenanceTag tag;
            tag.confidence = *we.confidence;
            e.provenance = tag;
        }
        d.add_edges.push_back(std::move(e));
    }
    d.del_edges = body.del_edges;
    d.del_nodes = body.del_nodes;
    return d;
}

UpdateBody delta_to_wire(const GraphDelta& delta) {
    UpdateBody body;
    for (const Node& n : delta.add_nodes)
        body.add_nodes.push_back({n.id, n.type, n.display_name, n.attrs});
    for (const Edge& e : delta.add_edges) {
        WireAddEdge we;
        we.from = e.from;
        we.to = e.to;
        we.type = e.type;
        we.weight = e.weight;
        if (e.provenance && e.provenance->confidence != 1.0)
            we.confidence = e.provenance->confidence;
        if (e.ts != 0) we.ts = e.ts;
        body.add_edges.push_back(std::move(we));
    }
    body.del_edges = delta.del_edges;
    body.del_nodes = delta.del_nodes;
    return body;
}

GraphDelta diff_graphs(const KnowledgeGraph& from, const KnowledgeGraph& to) {
    GraphDelta d;
    for (const auto& [id, n] : to.nodes())
        if (!from.has_node(id)) d.add_nodes.push_back(n);
    for (const auto& [id, n] : from.nodes())
        if (!to.has_node(id)) d.del_nodes.push_back(id);
    for (const auto& [id, e] : to.edges())
        if (!from.has_edge(id)) d.add_edges.push_back(e);
    for (const auto& [id, e] : from.edges())
        if (!to.has_edge(id)) d.del_edges.push_back(id);
    return d;
}

}  // namespace g2cp
