#include <algorithm>

#include "g2cp/commitment.hpp"

namespace g2cp {

const char* to_string(CommitmentKind k) {
    switch (k) {
        case CommitmentKind::ExecuteAndReturn: return "ExecuteAndReturn";
        case CommitmentKind::ResultGrounded: return "ResultGrounded";
        case CommitmentKind::TruthfulResponse: return "TruthfulResponse";
        case CommitmentKind::EvaluateAndRespond: return "EvaluateAndRespond";
        case CommitmentKind::ResultVerified: return "ResultVerified";
        case CommitmentKind::RejectionJustified: return "RejectionJustified";
        case CommitmentKind::ApplyIfValid: return "ApplyIfValid";
    }
    return "?";
}

const char* to_string(CommitmentState s) {
    switch (s) {
        case CommitmentState::Pending: return "Pending";
        case CommitmentState::Discharged: return "Discharged";
        case CommitmentState::Violated: return "Violated";
        case CommitmentState::Cancelled: return "Cancelled";
    }
    return "?";
}

CommitmentKind commitment_kind_for(Performative p) {
    switch (p) {
        case Performative::Request: return CommitmentKind::ExecuteAndReturn;
        case Performative::Inform: return CommitmentKind::ResultGrounded;
        case Performative::Query: return CommitmentKind::TruthfulResponse;
        case Performative::Propose: return CommitmentKind::EvaluateAndRespond;
        case Performative::Confirm: return CommitmentKind::ResultVerified;
        case Performative::Reject: return CommitmentKind::RejectionJustified;
        case Performative::Update: return CommitmentKind::ApplyIfValid;
    }
    return CommitmentKind::ExecuteAndReturn;
}

namespace {

// REQUEST, QUERY, PROPOSE and UPDATE obligate the receiver; the result-side
// performatives obligate the sender.
bool debtor_is_receiver(Performative p) {
    switch (p) {
        case Performative::Request:
        case Performative::Query:
        case Performative::Propose:
        case Performative::Update: return true;
        default: return false;
    }
}

}  // namespace

void CommitmentLedger::on_processed(const Message& m, std::uint64_t entry_seq, bool entry_ok,
                                    bool result_nonempty) {
    // A response may settle an earlier commitment awaiting it.
    if (m.performative == Performative::Confirm || m.performative == Performative::Inform ||
        m.performative == Performative::Reject) {
        for (Commitment& c : commitments_) {
            if (c.state != CommitmentState::Pending) continue;
            if (c.debtor != m.sender || c.creditor != m.receiver) continue;
            if (c.conversation != m.conversation) continue;
            if (c.kind == CommitmentKind::TruthfulResponse) {
                if (m.performative == Performative::Reject) {
                    // The query itself was refused; the obligation lapses.
                    c.state = CommitmentState::Cancelled;
                    c.note = "query rejected";
                } else {
                    const bool claimed =
                        m.performative == Performative::Confirm || result_nonempty;
                    const bool truth = query_truth_.at(c.id);
                    if (claimed == truth && entry_ok) {
                        c.state = CommitmentState::Discharged;
                    } else {
                        c.state = CommitmentState::Violated;
                        c.note = claimed == truth ? "answer not verifiable"
                                                  : "answer contradicts the graph";
                    }
                }
                break;
            }
            if (c.kind == CommitmentKind::EvaluateAndRespond &&
                m.performative != Performative::Inform) {
                if (entry_ok) {
                    c.state = CommitmentState::Discharged;
                } else {
                    c.state = CommitmentState::Violated;
                    c.note = "response not verifiable";
                }
                break;
            }
        }
    }

    Commitment c;
    c.id = commitments_.size() + 1;
    if (debtor_is_receiver(m.performative)) {
        c.debtor = m.receiver;
        c.creditor = m.sender;
    } else {
        c.debtor = m.sender;
        c.creditor = m.receiver;
    }
    c.kind = commitment_kind_for(m.performative);
    c.conversation = m.conversation;
    c.entry_seq = entry_seq;

    switch (c.kind) {
        case CommitmentKind::ExecuteAndReturn:
        case CommitmentKind::ApplyIfValid:
        case CommitmentKind::RejectionJustified:
        case CommitmentKind::ResultGrounded:
        case CommitmentKind::ResultVerified:
            if (entry_ok) {
                c.state = CommitmentState::Discharged;
            } else {
                c.state = CommitmentState::Violated;
                c.note = "recorded outcome failed verification";
            }
            break;
        case CommitmentKind::TruthfulResponse:
            query_truth_[c.id] = entry_ok && result_nonempty;
            if (!entry_ok) {
                c.state = CommitmentState::Violated;
                c.note = "query execution failed verification";
            }
            break;
        case CommitmentKind::EvaluateAndRespond:
            break;  // stays pending until a response arrives
    }
    commitments_.push_back(std::move(c));
}

void CommitmentLedger::finalize() {
    for (Commitment& c : commitments_) {
        if (c.state == CommitmentState::Pending) {
            c.state = CommitmentState::Violated;
            c.note = "no response by horizon";
        }
    }
}

std::size_t CommitmentLedger::pending_count() const {
    return count_in_state(CommitmentState::Pending);
}

std::size_t CommitmentLedger::count_in_state(CommitmentState s) const {
    return static_cast<std::size_t>(
        std::count_if(commitments_.begin(), commitments_.end(),
                      [s](const Commitment& c) { return c.state == s; }));
}

CommitmentLedger rebuild_ledger(const AuditLog& log, const KnowledgeGraph& base,
                                const GraphSchema& schema, const KeyRing& ring,
                                const EmbeddingProvider& embedder,
                                const ExecutionLimits& limits) {
    CommitmentLedger ledger;
    const ReplayReport report = replay(log, base, schema, ring, embedder, limits);
    for (std::size_t i = 0; i < log.entries().size(); ++i) {
        const AuditEntry& entry = log.entries()[i];
        if (entry.kind != "op") continue;  // malformed traffic creates no obligation
        Opened opened = open_envelope(entry.envelope, ring);
        if (!opened.ok) continue;
        Message m;
        try {
            m = parse(opened.body);
        } catch (const ParseError&) {
            continue;
        }
        const EntryVerdict& v = report.entries[i];
        ledger.on_processed(m, entry.seq, v.status == ReplayStatus::Match, !v.nodes.empty());
    }
    ledger.finalize();
    return ledger;
}

}  // namespace g2cp
