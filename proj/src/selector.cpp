#include "g2cp/selector.hpp"

#include <optional>

#include "g2cp/errors.hpp"

namespace g2cp {

NodeSelector NodeSelector::explicit_ids(std::vector<NodeId> ids) {
    NodeSelector s;
    s.kind = SelectorKind::ExplicitIds;
    s.ids = std::move(ids);
    return s;
}

NodeSelector NodeSelector::by_type(std::vector<std::string> types) {
    NodeSelector s;
    s.kind = SelectorKind::ByType;
    s.types = std::move(types);
    return s;
}

NodeSelector NodeSelector::by_name(std::vector<std::string> names) {
    NodeSelector s;
    s.kind = SelectorKind::ByName;
    s.names = std::move(names);
    return s;
}

NodeSelector NodeSelector::context_ref(std::string symbol) {
    NodeSelector s;
    s.kind = SelectorKind::ContextRef;
    s.symbol = std::move(symbol);
    return s;
}

NodeSelector NodeSelector::property_filter(std::string type, Predicate pred) {
    NodeSelector s;
    s.kind = SelectorKind::PropertyFilter;
    s.filter_type = std::move(type);
    s.predicate = std::move(pred);
    return s;
}

namespace {

// Three-way comparison; nullopt when the kinds are incomparable.
std::optional<int> compare_values(const AttrValue& a, const AttrValue& b) {
    auto as_number = [](const AttrValue& v) -> std::optional<double> {
        if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
        if (const auto* d = std::get_if<double>(&v)) return *d;
        return std::nullopt;
    };
    if (auto na = as_number(a)) {
        auto nb = as_number(b);
        if (!nb) return std::nullopt;
        if (*na < *nb) return -1;
        if (*na > *nb) return 1;
        return 0;
    }
    if (const auto* sa = std::get_if<std::string>(&a)) {
        const auto* sb = std::get_if<std::string>(&b);
        if (!sb) return std::nullopt;
        return sa->compare(*sb) < 0 ? -1 : (*sa == *sb ? 0 : 1);
    }
    if (const auto* ba = std::get_if<bool>(&a)) {
        const auto* bb = std::get_if<bool>(&b);
        if (!bb) return std::nullopt;
        return *ba == *bb ? 0 : (*ba < *bb ? -1 : 1);
    }
    return std::nullopt;
}

bool eval_comparison(const Node& node, const Comparison& cmp) {
    auto it = node.attrs.find(cmp.attr);
    if (it == node.attrs.end()) return false;
    auto rel = compare_values(it->second, cmp.value);
    switch (cmp.op) {
        case CmpOp::Eq: return rel.has_value() && *rel == 0;
        case CmpOp::Ne: return !rel.has_value() || *rel != 0;
        case CmpOp::Lt: return rel.has_value() && *rel < 0;
        case CmpOp::Gt: return rel.has_value() && *rel > 0;
        case CmpOp::Le: return rel.has_value() && *rel <= 0;
        case CmpOp::Ge: return rel.has_value() && *rel >= 0;
    }
    return false;
}

}  // namespace

bool eval_predicate(const Node& node, const Predicate& pred) {
    for (const Comparison& c : pred.all)
        if (!eval_comparison(node, c)) return false;
    return true;
}

std::set<NodeId> resolve_selector(const KnowledgeGraph& graph, const GraphSchema& schema,
                                  const NodeSelector& selector, const ConversationContext& ctx,
                                  const EmbeddingProvider& embedder, double threshold) {
    std::set<NodeId> out;
    switch (selector.kind) {
        case SelectorKind::ExplicitIds:
            for (const NodeId& id : selector.ids) {
                if (!graph.has_node(id)) throw UnknownNode("unknown node '" + id + "'");
                out.insert(id);
            }
            return out;
        case SelectorKind::ByType:
            for (const std::string& t : selector.types)
                if (!schema.node_types.count(t))
                    throw SchemaViolation("selector type '" + t + "' not declared in schema");
            for (const auto& [id, n] : graph.nodes())
                for (const std::string& t : selector.types)
                    if (n.type == t) {
                        out.insert(id);
                        break;
                    }
            return out;
        case SelectorKind::PropertyFilter:
            if (!schema.node_types.count(selector.filter_type))
                throw SchemaViolation("selector type '" + selector.filter_type +
                                      "' not declared in schema");
            for (const auto& [id, n] : graph.nodes())
                if (n.type == selector.filter_type && eval_predicate(n, selector.predicate))
                    out.insert(id);
            return out;
        case SelectorKind::ContextRef:
            if (selector.symbol != "CURRENT_FOCUS")
                throw UnknownContextSymbol("context symbol '" + selector.symbol +
                                           "' is not bound");
            return ctx.focus;
        case SelectorKind::ByName:
            for (const std::string& name : selector.names) {
                const Embedding q = embedder.embed(name);
                double best = -1.0;
                NodeId best_id;
                for (const auto& [id, n] : graph.nodes()) {
                    double s = cosine(q, n.embedding);
                    if (s > best || (s == best && (best_id.empty() || id < best_id))) {
                        best = s;
                        best_id = id;
                    }
                }
                if (!best_id.empty() && best >= threshold) out.insert(best_id);
            }
            return out;
    }
    return out;
}

}  // namespace g2cp
