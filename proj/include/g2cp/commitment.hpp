#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "g2cp/audit.hpp"
#include "g2cp/protocol.hpp"

namespace g2cp {

// What a message obligates its debtor to. Each performative maps to exactly
// one kind; see commitment_kind_for.
enum class CommitmentKind {
    ExecuteAndReturn,    // REQUEST: receiver runs the operation and answers
    ResultGrounded,      // INFORM: sender's result holds in the cited version
    TruthfulResponse,    // QUERY: receiver's yes/no stance matches the graph
    EvaluateAndRespond,  // PROPOSE: receiver confirms or rejects
    ResultVerified,      // CONFIRM: sender re-checked the confirmed content
    RejectionJustified,  // REJECT: the recorded rejection is consistent
    ApplyIfValid,        // UPDATE: receiver applies a valid delta or rejects
};

enum class CommitmentState { Pending, Discharged, Violated, Cancelled };

const char* to_string(CommitmentKind k);
const char* to_string(CommitmentState s);
CommitmentKind commitment_kind_for(Performative p);

struct Commitment {
    std::uint64_t id = 0;
    AgentId debtor;
    AgentId creditor;
    CommitmentKind kind{};
    ConversationId conversation;
    std::uint64_t entry_seq = 0;  // audit entry of the message that created it
    CommitmentState state = CommitmentState::Pending;
    std::string note;

    bool operator==(const Commitment&) const = default;
};

// Tracks the obligation attached to every processed message. The runtime
// feeds it live; `rebuild` reconstructs the same ledger from the audit log,
// so the two can be compared entry for entry.
class CommitmentLedger {
public:
    // entry_ok: the recorded outcome for this message checks out (replay
    // match live equals the receiver's own validation at processing time).
    // result_nonempty: the associated result carries at least one node.
    void on_processed(const Message& m, std::uint64_t entry_seq, bool entry_ok,
                      bool result_nonempty);

    // Horizon pass at quiescence: anything still pending becomes violated.
    void finalize();

    const std::vector<Commitment>& all() const { return commitments_; }
    std::size_t pending_count() const;
    std::size_t count_in_state(CommitmentState s) const;

    bool operator==(const CommitmentLedger& other) const {
        return commitments_ == other.commitments_;
    }

private:
    std::vector<Commitment> commitments_;
    std::map<std::uint64_t, bool> query_truth_;  // commitment id -> queried truth
};

// Rebuilds the ledger from the audit log alone, using replay verdicts where
// the live path used the receiver's immediate checks.
CommitmentLedger rebuild_ledger(const AuditLog& log, const KnowledgeGraph& base,
                                const GraphSchema& schema, const KeyRing& ring,
                                const EmbeddingProvider& embedder,
                                const ExecutionLimits& limits = {});

}  // namespace g2cp
