#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "g2cp/ids.hpp"

namespace g2cp {

// ---------------------------------------------------------------------------
// Hashing and signatures (libsodium)

std::string sha256_hex(const std::string& bytes);

// Holds one Ed25519 keypair per agent. Keys are derived from a fixed,
// id-dependent seed so every run of the runtime produces identical
// signatures for identical inputs.
class KeyRing {
public:
    void add_agent(const AgentId& id);
    bool has(const AgentId& id) const { return keys_.count(id) != 0; }
    std::vector<unsigned char> sign(const AgentId& id, const std::string& bytes) const;
    bool verify(const AgentId& id, const std::string& bytes,
                const std::vector<unsigned char>& sig) const;

private:
    struct Pair {
        std::array<unsigned char, 32> pk;
        std::array<unsigned char, 64> sk;
    };
    std::map<AgentId, Pair> keys_;
};

// Envelope layout: the canonical message text, a replay-protection NONCE line
// (covered by the signature), then a SIGNATURE/KEYID trailer. The signature
// covers every byte before the SIGNATURE line.
std::string make_nonce(const ConversationId& conversation, std::uint64_t seq);
std::string seal(const std::string& body, const AgentId& sender,
                 const ConversationId& conversation, std::uint64_t seq, const KeyRing& ring);

struct Opened {
    bool ok = false;
    std::string body;    // canonical message text, NONCE line stripped
    std::string nonce;
    AgentId keyid;
    std::string reason;  // set when !ok
};
Opened open_envelope(const std::string& envelope, const KeyRing& ring);

// ---------------------------------------------------------------------------
// Roster and permissions

struct Permission {
    std::string action;                 // READ, TRAVERSE or UPDATE
    std::set<std::string> node_types;   // "*" matches everything
    std::set<std::string> edge_types;
};

struct AgentSpec {
    AgentId id;
    std::string role;
    std::vector<Permission> permissions;
};

struct Roster {
    std::map<AgentId, AgentSpec> agents;
    bool has(const AgentId& id) const { return agents.count(id) != 0; }
    const AgentSpec& at(const AgentId& id) const;
};

Roster load_roster(std::istream& in);
Roster load_roster_file(const std::string& path);

// Coverage is unioned across an agent's grants for the given action: every
// touched type must appear in at least one grant (or be matched by "*").
bool authorize_traverse(const AgentSpec& agent, const std::set<std::string>& source_types,
                        const std::set<std::string>& via);
bool authorize_update(const AgentSpec& agent, const std::set<std::string>& node_types,
                      const std::set<std::string>& edge_types);

// ---------------------------------------------------------------------------
// Trust

struct TrustEvent {
    AgentId agent;
    int step = 0;      // 1-based count of recorded observations for the agent
    double score = 0;  // score after the triggering observation
};

// Exponential moving average over verification outcomes. Crossing below the
// review threshold emits a TrustEvent for human attention.
class TrustTracker {
public:
    double score(const AgentId& id) const;
    int steps(const AgentId& id) const;
    std::optional<TrustEvent> record(const AgentId& id, bool verified);
    const std::vector<TrustEvent>& events() const { return events_; }

private:
    struct State {
        double score;
        int steps;
    };
    std::map<AgentId, State> state_;
    std::vector<TrustEvent> events_;
};

}  // namespace g2cp
