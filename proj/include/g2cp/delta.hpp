#pragma once

#include <string>
#include <vector>

#include "g2cp/errors.hpp"
#include "g2cp/graph.hpp"
#include "g2cp/ids.hpp"
#include "g2cp/protocol.hpp"

namespace g2cp {

// Set-delta over a graph. Application order: add nodes, add edges, delete
// edges, delete nodes; add and delete sets must be disjoint.
struct GraphDelta {
    std::vector<Node> add_nodes;
    std::vector<Edge> add_edges;  // ids may be empty; assigned at apply time
    std::vector<EdgeId> del_edges;
    std::vector<NodeId> del_nodes;

    bool empty() const {
        return add_nodes.empty() && add_edges.empty() && del_edges.empty() && del_nodes.empty();
    }
};

// Checks a delta against a graph and schema without mutating either.
// Returns every violation found; an empty result means the delta may be
// applied. `retired_node_ids`/`retired_edge_ids` guard against id reuse after
// deletion (rollbacks are exempt: they restore, not reuse).
std::vector<Violation> validate_delta(const KnowledgeGraph& graph, const GraphDelta& delta,
                                      const GraphSchema& schema,
                                      const std::vector<NodeId>& retired_node_ids = {},
                                      const std::vector<EdgeId>& retired_edge_ids = {});

struct DeltaRecord {
    GraphDelta delta;
    AgentId author;
    Timestamp timestamp = 0;
    ProvenanceTag provenance;
    bool is_rollback = false;
    VersionId rollback_target = 0;  // meaningful only when is_rollback
};

// Single-writer versioned graph store. Version 0 is the loaded base; version
// k is the base with the first k recorded deltas applied. History is
// append-only: a rollback lands as a new inverse delta, never a rewrite.
class GraphStore {
public:
    GraphStore(KnowledgeGraph base, GraphSchema schema, const EmbeddingProvider& embedder);

    VersionId head_version() const { return static_cast<VersionId>(history_.size()); }
    const KnowledgeGraph& head() const { return head_; }
    const GraphSchema& schema() const { return schema_; }
    const std::vector<DeltaRecord>& history() const { return history_; }

    // Materialises the graph as of `version`; throws UnknownVersion past head.
    KnowledgeGraph graph_at(VersionId version) const;

    std::vector<Violation> validate(const GraphDelta& delta) const;

    // Applies a validated delta. `expected_base` must equal head_version() or
    // the write is rejected with ConcurrentWriteConflict; a delta with
    // violations raises SchemaViolation. Returns the new version id.
    VersionId apply(const GraphDelta& delta, const ProvenanceTag& provenance,
                    VersionId expected_base);

    const KnowledgeGraph& current() const { return head_; }
    const KnowledgeGraph& base() const { return base_; }

    // Restores the graph of `version` by applying the inverse delta as a new
    // history entry. Returns the new version id.
    VersionId rollback(VersionId version, const AgentId& author, Timestamp now);

private:
    void apply_in_place(KnowledgeGraph& g, const GraphDelta& delta,
                        const ProvenanceTag& provenance) const;
    GraphDelta assign_edge_ids(const KnowledgeGraph& g, GraphDelta delta) const;

    KnowledgeGraph base_;
    KnowledgeGraph head_;
    GraphSchema schema_;
    const EmbeddingProvider& embedder_;
    std::vector<DeltaRecord> history_;
    std::vector<NodeId> retired_nodes_;
    std::vector<EdgeId> retired_edges_;
};

// Delta that turns `from` into `to` (content diff by id).
GraphDelta diff_graphs(const KnowledgeGraph& from, const KnowledgeGraph& to);

// Conversions between wire-level update payloads and internal deltas. Edges
// arriving without a timestamp get ts = 0; a wire confidence is preserved as
// a partial provenance tag completed when the delta is applied.
GraphDelta delta_from_wire(const UpdateBody& body);
UpdateBody delta_to_wire(const GraphDelta& delta);

}  // namespace g2cp
