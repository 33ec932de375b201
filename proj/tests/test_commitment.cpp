#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "g2cp/agents.hpp"
#include "g2cp/commitment.hpp"

using namespace g2cp;

namespace {

std::string fx(const std::string& rel) {
    return std::string(G2CP_FIXTURE_PATH) + "/" + rel;
}

const TrigramEmbedder& embedder() {
    static TrigramEmbedder e;
    return e;
}

Message msg(const AgentId& from, const AgentId& to, Performative p,
            const ConversationId& conv = "conv_t") {
    Message m;
    m.sender = from;
    m.receiver = to;
    m.performative = p;
    m.conversation = conv;
    return m;
}

}  // namespace

TEST_CASE("each performative maps onto one obligation kind") {
    CHECK(commitment_kind_for(Performative::Request) == CommitmentKind::ExecuteAndReturn);
    CHECK(commitment_kind_for(Performative::Inform) == CommitmentKind::ResultGrounded);
    CHECK(commitment_kind_for(Performative::Query) == CommitmentKind::TruthfulResponse);
    CHECK(commitment_kind_for(Performative::Propose) == CommitmentKind::EvaluateAndRespond);
    CHECK(commitment_kind_for(Performative::Confirm) == CommitmentKind::ResultVerified);
    CHECK(commitment_kind_for(Performative::Reject) == CommitmentKind::RejectionJustified);
    CHECK(commitment_kind_for(Performative::Update) == CommitmentKind::ApplyIfValid);
}

TEST_CASE("kind and state names are stable") {
    CHECK(std::string(to_string(CommitmentKind::ExecuteAndReturn)) == "ExecuteAndReturn");
    CHECK(std::string(to_string(CommitmentKind::ApplyIfValid)) == "ApplyIfValid");
    CHECK(std::string(to_string(CommitmentState::Pending)) == "Pending");
    CHECK(std::string(to_string(CommitmentState::Discharged)) == "Discharged");
    CHECK(std::string(to_string(CommitmentState::Violated)) == "Violated");
    CHECK(std::string(to_string(CommitmentState::Cancelled)) == "Cancelled");
}

TEST_CASE("request obligations bind the receiver and settle with the entry") {
    CommitmentLedger ledger;
    ledger.on_processed(msg("Dispatcher", "A_D", Performative::Request), 1, true, true);
    REQUIRE(ledger.all().size() == 1);
    const Commitment& c = ledger.all()[0];
    CHECK(c.id == 1);
    CHECK(c.debtor == "A_D");
    CHECK(c.creditor == "Dispatcher");
    CHECK(c.kind == CommitmentKind::ExecuteAndReturn);
    CHECK(c.entry_seq == 1);
    CHECK(c.state == CommitmentState::Discharged);

    CommitmentLedger bad;
    bad.on_processed(msg("Dispatcher", "A_D", Performative::Request), 1, false, false);
    CHECK(bad.all()[0].state == CommitmentState::Violated);
    CHECK(!bad.all()[0].note.empty());
}

TEST_CASE("result-side performatives bind the sender") {
    CommitmentLedger ledger;
    ledger.on_processed(msg("A_D", "Dispatcher", Performative::Inform), 2, true, true);
    const Commitment& c = ledger.all()[0];
    CHECK(c.debtor == "A_D");
    CHECK(c.creditor == "Dispatcher");
    CHECK(c.kind == CommitmentKind::ResultGrounded);
    CHECK(c.state == CommitmentState::Discharged);
}

TEST_CASE("a query's truthfulness is judged by the eventual answer") {
    SUBCASE("positive answer over a nonempty result is truthful") {
        CommitmentLedger ledger;
        ledger.on_processed(msg("A_P", "A_S", Performative::Query), 1, true, true);
        CHECK(ledger.all()[0].state == CommitmentState::Pending);
        ledger.on_processed(msg("A_S", "A_P", Performative::Confirm), 2, true, true);
        CHECK(ledger.all()[0].state == CommitmentState::Discharged);
        CHECK(ledger.all()[1].kind == CommitmentKind::ResultVerified);
    }
    SUBCASE("negative answer over an empty result is truthful") {
        CommitmentLedger ledger;
        ledger.on_processed(msg("A_P", "A_S", Performative::Query), 1, true, false);
        ledger.on_processed(msg("A_S", "A_P", Performative::Inform), 2, true, false);
        CHECK(ledger.all()[0].state == CommitmentState::Discharged);
    }
    SUBCASE("claiming content the graph lacks violates the obligation") {
        CommitmentLedger ledger;
        ledger.on_processed(msg("A_P", "A_S", Performative::Query), 1, true, false);
        ledger.on_processed(msg("A_S", "A_P", Performative::Confirm), 2, true, true);
        CHECK(ledger.all()[0].state == CommitmentState::Violated);
        CHECK(ledger.all()[0].note == "answer contradicts the graph");
    }
    SUBCASE("denying content the graph has violates the obligation") {
        CommitmentLedger ledger;
        ledger.on_processed(msg("A_P", "A_S", Performative::Query), 1, true, true);
        ledger.on_processed(msg("A_S", "A_P", Performative::Inform), 2, true, false);
        CHECK(ledger.all()[0].state == CommitmentState::Violated);
    }
    SUBCASE("a refused query cancels rather than violates") {
        CommitmentLedger ledger;
        ledger.on_processed(msg("A_P", "A_S", Performative::Query), 1, true, true);
        ledger.on_processed(msg("A_S", "A_P", Performative::Reject), 2, true, false);
        CHECK(ledger.all()[0].state == CommitmentState::Cancelled);
        CHECK(ledger.all()[0].note == "query rejected");
    }
    SUBCASE("an unverifiable answer counts against the responder") {
        CommitmentLedger ledger;
        ledger.on_processed(msg("A_P", "A_S", Performative::Query), 1, true, true);
        ledger.on_processed(msg("A_S", "A_P", Performative::Confirm), 2, false, true);
        CHECK(ledger.all()[0].state == CommitmentState::Violated);
        CHECK(ledger.all()[0].note == "answer not verifiable");
    }
}

TEST_CASE("proposals stay open until a confirm or reject lands") {
    CommitmentLedger ledger;
    ledger.on_processed(msg("A_S", "A_I", Performative::Propose), 1, true, true);
    CHECK(ledger.all()[0].state == CommitmentState::Pending);
    CHECK(ledger.pending_count() == 1);

    SUBCASE("confirm settles it") {
        ledger.on_processed(msg("A_I", "A_S", Performative::Confirm), 2, true, true);
        CHECK(ledger.all()[0].state == CommitmentState::Discharged);
    }
    SUBCASE("reject settles it too: evaluation happened") {
        ledger.on_processed(msg("A_I", "A_S", Performative::Reject), 2, true, false);
        CHECK(ledger.all()[0].state == CommitmentState::Discharged);
    }
    SUBCASE("an inform does not settle an evaluation obligation") {
        ledger.on_processed(msg("A_I", "A_S", Performative::Inform), 2, true, true);
        CHECK(ledger.all()[0].state == CommitmentState::Pending);
    }
    SUBCASE("silence until the horizon is a violation") {
        ledger.finalize();
        CHECK(ledger.all()[0].state == CommitmentState::Violated);
        CHECK(ledger.all()[0].note == "no response by horizon");
        CHECK(ledger.pending_count() == 0);
        CHECK(ledger.count_in_state(CommitmentState::Violated) == 1);
    }
}

TEST_CASE("responses only settle matching conversations and parties") {
    CommitmentLedger ledger;
    ledger.on_processed(msg("A_P", "A_S", Performative::Query, "conv_1"), 1, true, true);
    // Wrong conversation.
    ledger.on_processed(msg("A_S", "A_P", Performative::Confirm, "conv_2"), 2, true, true);
    CHECK(ledger.all()[0].state == CommitmentState::Pending);
    // Wrong direction.
    ledger.on_processed(msg("A_P", "A_S", Performative::Confirm, "conv_1"), 3, true, true);
    CHECK(ledger.all()[0].state == CommitmentState::Pending);
    // Right response.
    ledger.on_processed(msg("A_S", "A_P", Performative::Confirm, "conv_1"), 4, true, true);
    CHECK(ledger.all()[0].state == CommitmentState::Discharged);
}

TEST_CASE("state counts add up") {
    CommitmentLedger ledger;
    ledger.on_processed(msg("a", "b", Performative::Request), 1, true, true);
    ledger.on_processed(msg("a", "b", Performative::Propose), 2, true, true);
    ledger.on_processed(msg("a", "b", Performative::Query), 3, true, true);
    CHECK(ledger.pending_count() == 2);
    CHECK(ledger.count_in_state(CommitmentState::Discharged) == 1);
    ledger.finalize();
    CHECK(ledger.pending_count() == 0);
    CHECK(ledger.count_in_state(CommitmentState::Violated) == 2);
}

TEST_CASE("ledgers compare by content") {
    CommitmentLedger a, b;
    a.on_processed(msg("x", "y", Performative::Request), 1, true, true);
    b.on_processed(msg("x", "y", Performative::Request), 1, true, true);
    CHECK(a == b);
    b.on_processed(msg("x", "y", Performative::Inform), 2, true, true);
    CHECK(!(a == b));
}

TEST_CASE("the ledger rebuilt from the audit log matches the live run") {
    for (const char* name : {"scenarios/worked_example.json", "scenarios/factoid.json"}) {
        const Scenario s = load_scenario_file(fx(name));
        const RunReport rep = run_scenario(s, embedder());
        REQUIRE(!rep.commitments.empty());

        const GraphSchema schema = load_schema_file(fx("turbomatic_core.schema.json"));
        const KnowledgeGraph base =
            load_graph_file(fx("turbomatic_core.graph.jsonl"), schema, embedder());
        KeyRing ring;
        const Roster roster = load_roster_file(fx("roster.json"));
        for (const auto& [id, spec] : roster.agents) ring.add_agent(id);

        const CommitmentLedger rebuilt = rebuild_ledger(rep.log, base, schema, ring, embedder());
        CAPTURE(name);
        REQUIRE(rebuilt.all().size() == rep.commitments.size());
        for (std::size_t i = 0; i < rep.commitments.size(); ++i) {
            CAPTURE(i);
            CHECK(rebuilt.all()[i] == rep.commitments[i]);
        }
        CHECK(rebuilt.pending_count() == 0);
    }
}

TEST_CASE("every scenario run ends with zero pending obligations") {
    const Scenario s = load_scenario_file(fx("scenarios/worked_example.json"));
    const RunReport rep = run_scenario(s, embedder());
    int pending = 0;
    for (const Commitment& c : rep.commitments)
        if (c.state == CommitmentState::Pending) ++pending;
    CHECK(pending == 0);
    for (const Commitment& c : rep.commitments)
        CHECK(c.state == CommitmentState::Discharged);
}
