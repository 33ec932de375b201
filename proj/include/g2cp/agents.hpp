#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "g2cp/audit.hpp"
#include "g2cp/commitment.hpp"
#include "g2cp/delta.hpp"
#include "g2cp/embedding.hpp"
#include "g2cp/protocol.hpp"
#include "g2cp/security.hpp"
#include "g2cp/timeutil.hpp"
#include "g2cp/traversal.hpp"

namespace g2cp {

// ---------------------------------------------------------------------------
// Natural-language boundary

struct LinkedEntity {
    NodeId id;
    std::string span;  // surface text that matched
};

struct QueryAnalysis {
    std::string intent;  // diagnostic, procedural, predictive or factoid
    std::vector<LinkedEntity> entities;
    int depth = 1;       // suggested traversal depth, clamped to [1, 3]
};

// Where free text enters and leaves the runtime. Everything between these
// two calls speaks the graph protocol only.
class LanguagePort {
public:
    virtual ~LanguagePort() = default;
    virtual QueryAnalysis analyze(const std::string& query) = 0;
    virtual std::string render_response(const std::string& intent,
                                        const std::vector<NodeId>& nodes,
                                        const std::vector<double>& confidence) = 0;
};

// Deterministic port for tests and the bundled scenarios: entity linking is
// longest-match dictionary lookup over node display names (and bare id
// suffixes), intent is keyword-rule based.
class StubLanguagePort : public LanguagePort {
public:
    explicit StubLanguagePort(const KnowledgeGraph& graph);
    QueryAnalysis analyze(const std::string& query) override;
    std::string render_response(const std::string& intent, const std::vector<NodeId>& nodes,
                                const std::vector<double>& confidence) override;

private:
    const KnowledgeGraph& graph_;
    std::vector<std::pair<std::string, NodeId>> dictionary_;  // phrase -> node
};

// Intent -> edge types the runtime walks for that question family.
const std::set<std::string>& edge_map(const std::string& intent);

// Builds the first graph operation for an analyzed query and names the agent
// family that should execute it. Throws NoEntitiesLinked when no entity
// anchors the query.
struct RoutedOp {
    TraverseOp op;
    std::string role;  // diagnostic, procedural or synthesis
    // True when the reply names candidate faults the dispatcher should act
    // on (single-unit diagnosis); relational comparisons answer directly.
    bool expect_diagnosis = false;
};
RoutedOp translate_query(const QueryAnalysis& analysis, const KnowledgeGraph& graph);

// ---------------------------------------------------------------------------
// Pattern discovery (synthesis agent)

struct PatternConfig {
    int min_support = kDefaultMinSupport;
    double min_ratio = kDefaultMinRatio;
    long long window_secs = kCooccurrenceWindowSecs;
};

struct PatternProposal {
    NodeId fault;
    NodeId condition;
    int support = 0;  // fault incidents with a condition reading in window
    int total = 0;    // all fault incidents
    double ratio = 0;

    bool operator==(const PatternProposal&) const = default;
};

// Scans fault incident edges against sensor/condition readings that occurred
// within the configured window and reports pairs that clear both thresholds.
std::vector<PatternProposal> discover_patterns(const KnowledgeGraph& graph,
                                               const PatternConfig& cfg = {});

Message make_pattern_update(const PatternProposal& p, const AgentId& sender,
                            const AgentId& receiver, const ConversationId& conversation);

// ---------------------------------------------------------------------------
// Multi-agent harness

struct RunReport {
    std::vector<Message> transcript;       // delivery order
    std::vector<std::string> envelopes;    // sealed bytes, same order
    int message_count = 0;
    long long protocol_tokens = 0;         // token total over canonical bodies
    std::string intent;
    std::string answer_text;
    std::vector<NodeId> answer_nodes;
    std::vector<double> answer_confidence;
    ClaimSpec claim;                       // union of cited audit results
    std::vector<std::uint64_t> trace;      // cited entry sequence numbers
    ClaimVerdict verdict;
    VersionId final_version = 0;
    std::vector<Commitment> commitments;   // ledger state after finalize
    AuditLog log;                          // copy of the run's audit log
};

class Harness {
public:
    Harness(KnowledgeGraph base, GraphSchema schema, Roster roster,
            const EmbeddingProvider& embedder, ExecutionLimits limits = {},
            Timestamp clock_base = LogicalClock::kDefaultBase);

    // Full query loop: analyze, route, pump to quiescence, settle the ledger
    // and verify the assembled claim against the audit log.
    RunReport run_query(const std::string& query, const ConversationId& conversation,
                        LanguagePort& port);

    // Direct injection for tests. `inject` seals and enqueues a well-formed
    // message; `inject_raw` delivers arbitrary bytes to a receiver's queue.
    void inject(const Message& m);
    void inject_raw(const AgentId& receiver, const std::string& bytes);
    void pump();

    GraphStore& store() { return store_; }
    const AuditLog& log() const { return log_; }
    CommitmentLedger& ledger() { return ledger_; }
    TrustTracker& trust() { return trust_; }
    const KeyRing& ring() const { return ring_; }
    const GraphSchema& schema() const { return schema_; }
    const Roster& roster() const { return roster_; }
    const std::vector<Message>& transcript() const { return transcript_; }
    const std::vector<std::string>& envelopes() const { return envelopes_; }
    const EmbeddingProvider& embedder() const { return embedder_; }
    const ExecutionLimits& limits() const { return limits_; }
    AgentId agent_with_role(const std::string& role) const;

private:
    struct Pending {
        std::uint64_t seq = 0;
        int priority = 0;
        std::string envelope;           // sealed bytes as delivered
        std::optional<Message> parsed;  // unset for raw injections
    };

    void send(const Message& m);
    void deliver(const AgentId& receiver, Pending p);
    void process(const AgentId& self, const Pending& p);
    void handle_dispatcher(const Message& m, bool grounded);
    void handle_diagnostic(const Message& m);
    void handle_procedural(const Message& m);
    void handle_synthesis(const Message& m);
    void handle_ingestion(const Message& m);

    // Records the entry first, then reports processing to the ledger.
    void record_op(const Message& m, const std::string& envelope, const Payload& outcome,
                   VersionId before, VersionId after);
    void record_error(const std::string& envelope, const ErrorBody& err);
    Payload execute(const TraverseOp& op, const ConversationId& conversation,
                    TraversalResult* details = nullptr);
    bool authorized(const Message& m);

    GraphSchema schema_;
    Roster roster_;
    const EmbeddingProvider& embedder_;
    ExecutionLimits limits_;
    GraphStore store_;
    KeyRing ring_;
    AuditLog log_;
    CommitmentLedger ledger_;
    TrustTracker trust_;
    LogicalClock clock_;
    std::map<AgentId, std::deque<Pending>> queues_;
    std::vector<AgentId> agent_order_;
    std::uint64_t bus_seq_ = 0;
    std::vector<Message> transcript_;
    std::vector<std::string> envelopes_;
    std::string current_envelope_;  // envelope of the message being processed

    // Per-conversation orchestration state kept by the dispatcher.
    struct ConvState {
        std::string intent;
        std::set<NodeId> focus;
        std::string phase;  // awaiting_diagnosis, awaiting_procedure, done
        std::vector<NodeId> answer_nodes;
        std::vector<double> answer_confidence;
    };
    std::map<ConversationId, ConvState> conv_;
    std::map<ConversationId, std::set<NodeId>> focus_;  // shared with responders
};

// ---------------------------------------------------------------------------
// Scenario files

struct Scenario {
    std::string name;
    std::string graph_file;
    std::string schema_file;
    std::string roster_file;
    std::string query;
    ConversationId conversation_id;
    std::string ftma_file;  // plain-text baseline transcript, "---" separated
    int expected_message_count = 0;
    std::vector<NodeId> expected_claim_nodes;   // must be included in the claim
    std::vector<std::string> expected_claim_edges;  // "from -[type]-> to"
    std::string expected_verdict;               // Grounded / Fabricated / FalsifiedTrace
    std::string dir;                            // directory the file came from
};

Scenario load_scenario_file(const std::string& path);

// Token total of a baseline transcript: messages separated by lines of dashes.
long long ftma_token_total(const std::string& text);

RunReport run_scenario(const Scenario& s, const EmbeddingProvider& embedder,
                       const ExecutionLimits& limits = {});

// Throws AssertionFailure when the report misses an expectation.
void assert_scenario(const Scenario& s, const RunReport& r);

}  // namespace g2cp
