#pragma once

#include <cstdint>
#include <string>

namespace g2cp {

// Node ids are "<TypeLabel>:<local-name>"; the type prefix is authoritative.
using NodeId = std::string;
using EdgeId = std::string;
using AgentId = std::string;
using ConversationId = std::string;
using VersionId = std::uint64_t;

// Extracts the type label from a NodeId; empty if the id has no ':' prefix.
inline std::string node_type_of(const NodeId& id) {
    auto pos = id.find(':');
    return pos == std::string::npos ? std::string{} : id.substr(0, pos);
}

// Traversal depth: either a small bounded hop count or unbounded (capped at
// execution time by ExecutionLimits::max_effective_depth).
struct Depth {
    int hops = 0;
    bool unbounded = false;

    static Depth bounded(int h) { return Depth{h, false}; }
    static Depth unbounded_depth() { return Depth{0, true}; }

    bool operator==(const Depth&) const = default;
};

}  // namespace g2cp
