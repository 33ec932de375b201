#include "g2cp/graph.hpp"

#include <fstream>
#include <istream>

#include <nlohmann/json.hpp>

#include "g2cp/errors.hpp"

namespace g2cp {

using nlohmann::json;

EdgeId make_edge_id(const NodeId& from, const std::string& type, const NodeId& to,
                    int occurrence) {
    return from + ":" + type + ":" + to + ":" + std::to_string(occurrence);
}

bool GraphSchema::allows(const std::string& src, const std::string& edge,
                         const std::string& dst) const {
    if (signatures.empty()) return true;
    for (const auto& sig : signatures) {
        bool ok = (sig[0] == "*" || sig[0] == src) && (sig[1] == "*" || sig[1] == edge) &&
                  (sig[2] == "*" || sig[2] == dst);
        if (ok) return true;
    }
    return false;
}

void KnowledgeGraph::add_node(Node node) {
    if (nodes_.count(node.id)) throw SchemaViolation("duplicate node id '" + node.id + "'");
    nodes_.emplace(node.id, std::move(node));
}

void KnowledgeGraph::add_edge(Edge edge) {
    if (edges_.count(edge.id)) throw SchemaViolation("duplicate edge id '" + edge.id + "'");
    if (!nodes_.count(edge.from))
        throw UnknownNode("edge endpoint '" + edge.from + "' not in graph");
    if (!nodes_.count(edge.to)) throw UnknownNode("edge endpoint '" + edge.to + "' not in graph");
    if (has_parallel_with_ts(edge.from, edge.type, edge.to, edge.ts))
        throw SchemaViolation("duplicate edge " + edge.from + " -[" + edge.type + "]-> " +
                              edge.to + " with identical timestamp");
    out_[edge.from].push_back(edge.id);
    edges_.emplace(edge.id, std::move(edge));
}

void KnowledgeGraph::remove_node(const NodeId& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw UnknownNode("cannot remove unknown node '" + id + "'");
    nodes_.erase(it);
    out_.erase(id);
}

void KnowledgeGraph::remove_edge(const EdgeId& id) {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw UnknownNode("cannot remove unknown edge '" + id + "'");
    auto& vec = out_[it->second.from];
    for (auto v = vec.begin(); v != vec.end(); ++v) {
        if (*v == id) {
            vec.erase(v);
            break;
        }
    }
    edges_.erase(it);
}

const Node& KnowledgeGraph::node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw UnknownNode("unknown node '" + id + "'");
    return it->second;
}

const Edge& KnowledgeGraph::edge(const EdgeId& id) const {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw UnknownNode("unknown edge '" + id + "'");
    return it->second;
}

const std::vector<EdgeId>& KnowledgeGraph::out_edges(const NodeId& id) const {
    static const std::vector<EdgeId> kEmpty;
    auto it = out_.find(id);
    return it == out_.end() ? kEmpty : it->second;
}

std::vector<EdgeId> KnowledgeGraph::incident_edges(const NodeId& id) const {
    std::vector<EdgeId> result;
    for (const auto& [eid, e] : edges_)
        if (e.from == id || e.to == id) result.push_back(eid);
    return result;
}

int KnowledgeGraph::parallel_count(const NodeId& from, const std::string& type,
                                   const NodeId& to) const {
    int n = 0;
    for (EdgeId eid : out_edges(from)) {
        const Edge& e = edges_.at(eid);
        if (e.type == type && e.to == to) ++n;
    }
    return n;
}

bool KnowledgeGraph::has_parallel_with_ts(const NodeId& from, const std::string& type,
                                          const NodeId& to, Timestamp ts) const {
    for (EdgeId eid : out_edges(from)) {
        const Edge& e = edges_.at(eid);
        if (e.type == type && e.to == to && e.ts == ts) return true;
    }
    return false;
}

bool KnowledgeGraph::structurally_equal(const KnowledgeGraph& other) const {
    if (nodes_.size() != other.nodes_.size() || edges_.size() != other.edges_.size()) return false;
    for (const auto& [id, n] : nodes_) {
        auto it = other.nodes_.find(id);
        if (it == other.nodes_.end()) return false;
        const Node& o = it->second;
        if (n.type != o.type || n.display_name != o.display_name || n.attrs != o.attrs)
            return false;
    }
    for (const auto& [id, e] : edges_) {
        auto it = other.edges_.find(id);
        if (it == other.edges_.end()) return false;
        const Edge& o = it->second;
        if (e.from != o.from || e.to != o.to || e.type != o.type || e.weight != o.weight ||
            e.ts != o.ts)
            return false;
    }
    return true;
}

namespace {

AttrValue attr_from_json(const json& v, int line) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer() || v.is_number_unsigned()) return v.get<std::int64_t>();
    if (v.is_number_float()) return v.get<double>();
    throw ParseError(line, 1, {"string", "number", "bool"}, "unsupported attribute value type");
}

}  // namespace

KnowledgeGraph load_graph(std::istream& in, const GraphSchema& schema,
                          const EmbeddingProvider& embedder) {
    KnowledgeGraph g;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, 1, {"json record"}, e.what());
        }
        const std::string kind = rec.value("kind", "");
        if (kind == "node") {
            Node n;
            n.id = rec.at("id").get<std::string>();
            n.type = rec.at("type").get<std::string>();
            n.display_name = rec.value("name", "");
            if (rec.contains("attrs"))
                for (const auto& [k, v] : rec.at("attrs").items())
                    n.attrs[k] = attr_from_json(v, lineno);
            if (!schema.node_types.count(n.type))
                throw SchemaViolation("line " + std::to_string(lineno) + ": node type '" +
                                      n.type + "' not in schema");
            if (node_type_of(n.id) != n.type)
                throw SchemaViolation("line " + std::to_string(lineno) + ": node id '" + n.id +
                                      "' does not carry type prefix '" + n.type + ":'");
            if (auto it = schema.required_attrs.find(n.type); it != schema.required_attrs.end())
                for (const auto& key : it->second)
                    if (!n.attrs.count(key))
                        throw SchemaViolation("line " + std::to_string(lineno) + ": node '" +
                                              n.id + "' missing required attr '" + key + "'");
            n.embedding = embedder.embed(n.display_name);
            try {
                g.add_node(std::move(n));
            } catch (const Error& e) {
                throw SchemaViolation("line " + std::to_string(lineno) + ": " + e.what());
            }
        } else if (kind == "edge") {
            Edge e;
            e.from = rec.at("from").get<std::string>();
            e.to = rec.at("to").get<std::string>();
            e.type = rec.at("type").get<std::string>();
            e.weight = rec.value("weight", 1.0);
            if (rec.contains("ts")) e.ts = parse_rfc3339(rec.at("ts").get<std::string>());
            if (!schema.edge_types.count(e.type))
                throw SchemaViolation("line " + std::to_string(lineno) + ": edge type '" +
                                      e.type + "' not in schema");
            if (!g.has_node(e.from))
                throw DanglingEdge(lineno, "line " + std::to_string(lineno) +
                                               ": edge references undefined node '" + e.from +
                                               "'");
            if (!g.has_node(e.to))
                throw DanglingEdge(lineno, "line " + std::to_string(lineno) +
                                               ": edge references undefined node '" + e.to + "'");
            if (!schema.allows(g.node(e.from).type, e.type, g.node(e.to).type))
                throw SchemaViolation("line " + std::to_string(lineno) + ": signature (" +
                                      g.node(e.from).type + ", " + e.type + ", " +
                                      g.node(e.to).type + ") not allowed by schema");
            e.id = make_edge_id(e.from, e.type, e.to, g.parallel_count(e.from, e.type, e.to));
            try {
                g.add_edge(std::move(e));
            } catch (const Error& err) {
                throw SchemaViolation("line " + std::to_string(lineno) + ": " + err.what());
            }
        } else {
            throw ParseError(lineno, 1, {"node", "edge"}, "unknown record kind '" + kind + "'");
        }
    }
    return g;
}

GraphSchema load_schema(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(1, 1, {"json"}, e.what());
    }
    GraphSchema s;
    for (const auto& t : doc.at("node_types")) s.node_types.insert(t.get<std::string>());
    for (const auto& t : doc.at("edge_types")) s.edge_types.insert(t.get<std::string>());
    if (doc.contains("edges"))
        for (const auto& sig : doc.at("edges"))
            s.signatures.insert({sig.at(0).get<std::string>(), sig.at(1).get<std::string>(),
                                 sig.at(2).get<std::string>()});
    if (doc.contains("required_attrs"))
        for (const auto& [type, keys] : doc.at("required_attrs").items())
            for (const auto& k : keys) s.required_attrs[type].push_back(k.get<std::string>());
    return s;
}

KnowledgeGraph load_graph_file(const std::string& path, const GraphSchema& schema,
                               const EmbeddingProvider& embedder) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph file '" + path + "'");
    return load_graph(in, schema, embedder);
}

GraphSchema load_schema_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open schema file '" + path + "'");
    return load_schema(in);
}

}  // namespace g2cp
