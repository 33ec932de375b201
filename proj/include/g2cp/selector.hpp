#pragma once

#include <set>
#include <string>
#include <vector>

#include "g2cp/config.hpp"
#include "g2cp/graph.hpp"
#include "g2cp/ids.hpp"

namespace g2cp {

// Shared per-conversation state. `focus` is the node frontier the exchange is
// currently anchored on; CURRENT_FOCUS selectors resolve against it.
struct ConversationContext {
    ConversationId id;
    int turn = 0;
    std::set<NodeId> focus;

    bool operator==(const ConversationContext&) const = default;
};

enum class CmpOp { Eq, Ne, Lt, Gt, Le, Ge };

struct Comparison {
    std::string attr;
    CmpOp op = CmpOp::Eq;
    AttrValue value;

    bool operator==(const Comparison&) const = default;
};

// Conjunction of attribute comparisons; nodes missing the attribute fail.
struct Predicate {
    std::vector<Comparison> all;

    bool operator==(const Predicate&) const = default;
};

enum class SelectorKind { ExplicitIds, ByType, PropertyFilter, ContextRef, ByName };

struct NodeSelector {
    SelectorKind kind = SelectorKind::ExplicitIds;
    std::vector<NodeId> ids;         // ExplicitIds
    std::vector<std::string> types;  // ByType
    std::string filter_type;         // PropertyFilter
    Predicate predicate;             // PropertyFilter
    std::string symbol;              // ContextRef
    std::vector<std::string> names;  // ByName

    bool operator==(const NodeSelector&) const = default;

    static NodeSelector explicit_ids(std::vector<NodeId> ids);
    static NodeSelector by_type(std::vector<std::string> types);
    static NodeSelector by_name(std::vector<std::string> names);
    static NodeSelector context_ref(std::string symbol);
    static NodeSelector property_filter(std::string type, Predicate pred);
};

bool eval_predicate(const Node& node, const Predicate& pred);

// Resolves a selector to concrete node ids.
// ExplicitIds: every id must exist. ByType: types must be declared. ByName:
// fuzzy match against node display-name embeddings; names below `threshold`
// are dropped, ties break to the lexicographically smaller id. ContextRef:
// only CURRENT_FOCUS is bound.
std::set<NodeId> resolve_selector(const KnowledgeGraph& graph, const GraphSchema& schema,
                                  const NodeSelector& selector, const ConversationContext& ctx,
                                  const EmbeddingProvider& embedder,
                                  double threshold = kSimilarityThreshold);

}  // namespace g2cp
