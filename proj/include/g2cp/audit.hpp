#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "g2cp/delta.hpp"
#include "g2cp/graph.hpp"
#include "g2cp/protocol.hpp"
#include "g2cp/security.hpp"
#include "g2cp/timeutil.hpp"
#include "g2cp/traversal.hpp"

namespace g2cp {

// One write-ahead entry per processed inbound message, persisted before the
// response leaves the runtime. `envelope` keeps the signed bytes verbatim;
// `result` is the canonical payload text the receiver produced for it.
struct AuditEntry {
    std::uint64_t seq = 0;        // 1-based, contiguous
    std::string kind;             // "op" (verifiable envelope) or "error"
    std::string envelope;         // received bytes, signed for kind == "op"
    std::string result;           // canonical payload text of the outcome
    std::string digest;           // SHA-256 hex of `result`
    VersionId version_before = 0;
    VersionId version_after = 0;
    Timestamp ts = 0;
};

class AuditLog {
public:
    // Fills seq and digest; returns the stored entry.
    const AuditEntry& append(std::string kind, std::string envelope, std::string result,
                             VersionId before, VersionId after, Timestamp ts);

    const std::vector<AuditEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    // Throws CorruptEntry for undecodable lines and BrokenChain when the
    // sequence numbering is not 1..n.
    static AuditLog load(std::istream& in);
    static AuditLog load_file(const std::string& path);

private:
    std::vector<AuditEntry> entries_;
};

// Normalized node/edge view of a result body, path steps included.
void add_result_view(const ResultBody& body, std::set<NodeId>& nodes,
                     std::set<std::tuple<NodeId, std::string, NodeId>>& edges);

// True when every node and edge the body mentions exists in the graph.
bool result_grounded(const ResultBody& body, const KnowledgeGraph& g,
                     std::string* why = nullptr);

// ---------------------------------------------------------------------------
// Replay

enum class ReplayStatus { Match, Mismatch };

struct EntryVerdict {
    std::uint64_t seq = 0;
    ReplayStatus status = ReplayStatus::Match;
    std::string note;
    // Result view recomputed during replay; empty node set for error entries.
    std::set<NodeId> nodes;
    std::set<std::tuple<NodeId, std::string, NodeId>> edges;
};

struct ReplayReport {
    bool all_match = true;
    std::vector<EntryVerdict> entries;
    VersionId final_version = 0;
};

// Re-executes the log against the base graph: traversal operations are rerun
// and digest-compared, result-bearing messages are grounding-checked against
// the version they cite, updates are re-validated and re-applied. A version
// chain break marks the entry and every later one as mismatched.
ReplayReport replay(const AuditLog& log, const KnowledgeGraph& base,
                    const GraphSchema& schema, const KeyRing& ring,
                    const EmbeddingProvider& embedder, const ExecutionLimits& limits = {});

// ---------------------------------------------------------------------------
// Claim verification

struct ClaimSpec {
    std::set<NodeId> nodes;
    std::set<std::tuple<NodeId, std::string, NodeId>> edges;
};

enum class ClaimKind { Grounded, Fabricated, FalsifiedTrace };

struct ClaimVerdict {
    ClaimKind kind = ClaimKind::Grounded;
    std::vector<std::string> missing;      // Fabricated: items with no support
    std::uint64_t falsified_seq = 0;       // FalsifiedTrace: first bad entry
};

// Replays the whole log, unions the replayed results of the cited trace
// entries, and checks the claim against that union.
ClaimVerdict verify_claim(const AuditLog& log, const KnowledgeGraph& base,
                          const GraphSchema& schema, const KeyRing& ring,
                          const EmbeddingProvider& embedder, const ClaimSpec& claim,
                          const std::vector<std::uint64_t>& trace,
                          const ExecutionLimits& limits = {});

}  // namespace g2cp
