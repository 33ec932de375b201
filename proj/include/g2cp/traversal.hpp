#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "g2cp/graph.hpp"
#include "g2cp/protocol.hpp"
#include "g2cp/selector.hpp"

namespace g2cp {

// Caps applied while a traversal runs. Defaults mirror the runtime's
// production configuration; tests override individual fields.
struct ExecutionLimits {
    long timeout_ms = 30000;
    std::size_t max_result_nodes = 5000;
    std::size_t frontier_cap = 1000;   // per-layer width cap, lexicographic truncation
    int max_effective_depth = 6;       // substitute for UNBOUNDED
};

struct TraversalStats {
    std::size_t expanded_nodes = 0;  // peak frontier width across layers
    long elapsed_ms = 0;
    bool timed_out = false;
};

struct TraversalResult {
    ResultBody body;
    TraversalStats stats;
    bool truncated = false;
    int effective_depth = 0;             // depth actually used for extraction
    std::vector<NodeId> sources;         // resolved source set, sorted
    std::map<NodeId, int> depth;         // layer index per explored node
    std::map<NodeId, double> confidence; // propagated confidence per explored node
    std::vector<NodeId> leaves;          // frontier + dead ends, sorted (always computed)
};

// Runs a breadth-first expansion from the operation's resolved sources along
// edges whose type is in the via set, then extracts the requested view.
// Throws SourceEmpty when the selector resolves to nothing.
TraversalResult traverse(const KnowledgeGraph& graph, const GraphSchema& schema,
                         const TraverseOp& op, const ConversationContext& ctx,
                         const EmbeddingProvider& embedder,
                         const ExecutionLimits& limits = {});

// Same execution, but failures are mapped onto wire-level error payloads so
// the outcome can be recorded and replayed byte for byte.
Payload run_traverse(const KnowledgeGraph& graph, const GraphSchema& schema,
                     const TraverseOp& op, const ConversationContext& ctx,
                     const EmbeddingProvider& embedder, const ExecutionLimits& limits = {});

}  // namespace g2cp
