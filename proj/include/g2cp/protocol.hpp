#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "g2cp/errors.hpp"
#include "g2cp/graph.hpp"
#include "g2cp/ids.hpp"
#include "g2cp/selector.hpp"

namespace g2cp {

enum class Performative { Request, Inform, Query, Propose, Confirm, Reject, Update };

enum class ReturnFormat { Subgraph, Paths, Leaves };

const char* to_string(Performative p);
const char* to_string(ReturnFormat f);

// Graph read: expand `from` along `via`-typed outgoing edges up to `depth`.
struct TraverseOp {
    NodeSelector from;
    std::set<std::string> via;
    Depth depth;
    ReturnFormat ret = ReturnFormat::Subgraph;
    std::optional<Predicate> constraints;

    bool operator==(const TraverseOp&) const = default;
};

// Result payloads reference edges at triple granularity.
struct WireEdge {
    NodeId from;
    std::string type;
    NodeId to;

    bool operator==(const WireEdge&) const = default;
    auto operator<=>(const WireEdge&) const = default;
};

struct WirePath {
    std::vector<WireEdge> steps;

    bool operator==(const WirePath&) const = default;
    auto operator<=>(const WirePath&) const = default;
};

// Node order is meaningful (ranked results keep rank order); `confidence`
// aligns with `nodes` and is present whenever `nodes` is non-empty.
struct ResultBody {
    ReturnFormat format = ReturnFormat::Subgraph;
    std::vector<NodeId> nodes;
    std::vector<WireEdge> edges;
    std::vector<double> confidence;
    std::vector<WirePath> paths;  // PATHS results only

    bool operator==(const ResultBody&) const = default;
};

struct ErrorBody {
    std::string code;
    std::string detail;

    bool operator==(const ErrorBody&) const = default;
};

struct WireAddNode {
    NodeId id;
    std::string type;
    std::string name;
    AttrMap attrs;

    bool operator==(const WireAddNode&) const = default;
};

struct WireAddEdge {
    NodeId from;
    NodeId to;
    std::string type;
    double weight = 1.0;
    std::optional<double> confidence;
    std::optional<Timestamp> ts;

    bool operator==(const WireAddEdge&) const = default;
};

struct UpdateBody {
    std::vector<WireAddNode> add_nodes;
    std::vector<WireAddEdge> add_edges;
    std::vector<EdgeId> del_edges;
    std::vector<NodeId> del_nodes;

    bool operator==(const UpdateBody&) const = default;
};

using Payload = std::variant<TraverseOp, UpdateBody, ResultBody, ErrorBody>;

struct Message {
    AgentId sender;
    AgentId receiver;
    Performative performative = Performative::Request;
    ConversationId conversation;
    Payload payload;

    bool operator==(const Message&) const = default;
};

// Canonical wire text: LF endings, fixed layout, node/edge/type sets in
// lexicographic order except Result node lists, which keep rank order.
std::string serialize(const Message& m);

// Canonical unindented text of a payload alone; used for audit digests.
std::string payload_text(const Payload& p);

// Parses text produced by payload_text back into a payload.
Payload parse_payload_text(const std::string& text);

// Receipt bodies a graph-owning agent produces for an update request.
ResultBody update_receipt(const UpdateBody& body);
ErrorBody update_rejection(const Violation& first);

// Inverse of serialize; indentation-insensitive. Throws ParseError with
// 1-based line/column and the token set acceptable at the failure point.
Message parse(const std::string& text);

// Structural checks: performative/payload compatibility, non-empty header
// fields, non-empty via, depth >= 0, result edge endpoints within the node
// list, confidence arity. Returns all violations found.
std::vector<Violation> validate(const Message& m);

// Whitespace-delimited tokens, further split at every character outside
// [A-Za-z0-9_]; separator characters count as tokens (one per UTF-8 code
// point).
int token_count(const std::string& text);

// Error codes used in Error payloads.
inline constexpr const char* kErrMalformed = "MALFORMED_MESSAGE";
inline constexpr const char* kErrUnauthorized = "UNAUTHORIZED_OPERATION";
inline constexpr const char* kErrTimeout = "TIMEOUT";
inline constexpr const char* kErrSchemaViolation = "SCHEMA_VIOLATION";
inline constexpr const char* kErrSourceEmpty = "SOURCE_EMPTY";
inline constexpr const char* kErrNoEntities = "NO_ENTITIES_LINKED";
inline constexpr const char* kErrConflict = "CONCURRENT_WRITE_CONFLICT";
inline constexpr const char* kErrUnknownNode = "UNKNOWN_NODE";

}  // namespace g2cp
