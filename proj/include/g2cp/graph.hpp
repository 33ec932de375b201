#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "g2cp/embedding.hpp"
#include "g2cp/ids.hpp"
#include "g2cp/timeutil.hpp"

namespace g2cp {

using AttrValue = std::variant<std::string, std::int64_t, double, bool>;
using AttrMap = std::map<std::string, AttrValue>;

// Lineage for edges written after the initial load.
struct ProvenanceTag {
    AgentId author;
    std::string source_message;  // digest or message reference; may be empty
    Timestamp timestamp = 0;
    double confidence = 1.0;

    bool operator==(const ProvenanceTag&) const = default;
};

struct Node {
    NodeId id;  // "<TypeLabel>:<local-name>"
    std::string type;
    std::string display_name;
    AttrMap attrs;
    Embedding embedding{};
};

struct Edge {
    EdgeId id;
    NodeId from;
    NodeId to;
    std::string type;
    double weight = 1.0;
    Timestamp ts = 0;
    std::optional<ProvenanceTag> provenance;
};

// Deterministic, content-derived edge id; `occurrence` disambiguates parallel
// edges with equal endpoints and type.
EdgeId make_edge_id(const NodeId& from, const std::string& type, const NodeId& to, int occurrence);

struct GraphSchema {
    std::set<std::string> node_types;  // fixed for the graph's lifetime
    std::set<std::string> edge_types;
    // Allowed (source type, edge type, target type) signatures; "*" matches
    // any declared type. Empty means every declared combination is allowed.
    std::set<std::array<std::string, 3>> signatures;
    std::map<std::string, std::vector<std::string>> required_attrs;

    bool allows(const std::string& src, const std::string& edge, const std::string& dst) const;
};

class KnowledgeGraph {
public:
    // Mutators reject duplicate ids, dangling endpoints, and exact duplicate
    // edges (same endpoints, type, and timestamp).
    void add_node(Node node);
    void add_edge(Edge edge);
    void remove_node(const NodeId& id);  // caller must remove incident edges first
    void remove_edge(const EdgeId& id);

    bool has_node(const NodeId& id) const { return nodes_.count(id) != 0; }
    bool has_edge(const EdgeId& id) const { return edges_.count(id) != 0; }
    const Node& node(const NodeId& id) const;
    const Edge& edge(const EdgeId& id) const;

    const std::map<NodeId, Node>& nodes() const { return nodes_; }
    const std::map<EdgeId, Edge>& edges() const { return edges_; }
    // Outgoing edge ids in insertion order; empty for unknown nodes.
    const std::vector<EdgeId>& out_edges(const NodeId& id) const;
    std::vector<EdgeId> incident_edges(const NodeId& id) const;

    // Number of parallel edges (same endpoints and type) already present.
    int parallel_count(const NodeId& from, const std::string& type, const NodeId& to) const;
    bool has_parallel_with_ts(const NodeId& from, const std::string& type, const NodeId& to,
                              Timestamp ts) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    // Content comparison over nodes and edges; provenance tags are lineage
    // metadata and do not participate.
    bool structurally_equal(const KnowledgeGraph& other) const;

private:
    std::map<NodeId, Node> nodes_;
    std::map<EdgeId, Edge> edges_;
    std::map<NodeId, std::vector<EdgeId>> out_;
};

// Line-delimited JSON loader. Node records must precede the edges that use
// them; violations carry the 1-based line number.
KnowledgeGraph load_graph(std::istream& in, const GraphSchema& schema,
                          const EmbeddingProvider& embedder);
GraphSchema load_schema(std::istream& in);

KnowledgeGraph load_graph_file(const std::string& path, const GraphSchema& schema,
                               const EmbeddingProvider& embedder);
GraphSchema load_schema_file(const std::string& path);

}  // namespace g2cp
