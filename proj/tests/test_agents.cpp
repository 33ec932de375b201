#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "g2cp/agents.hpp"
#include "oracles.hpp"

using namespace g2cp;

namespace {

std::string fx(const std::string& rel) {
    return std::string(G2CP_FIXTURE_PATH) + "/" + rel;
}

const TrigramEmbedder& embedder() {
    static TrigramEmbedder e;
    return e;
}

const KnowledgeGraph& plant_graph() {
    static GraphSchema schema = load_schema_file(fx("turbomatic_core.schema.json"));
    static KnowledgeGraph g =
        load_graph_file(fx("turbomatic_core.graph.jsonl"), schema, embedder());
    return g;
}

const std::vector<std::string>& scenario_files() {
    static const std::vector<std::string> files = {
        "scenarios/worked_example.json", "scenarios/case_study.json",
        "scenarios/factoid.json",        "scenarios/procedural.json",
        "scenarios/relational.json",     "scenarios/predictive.json",
    };
    return files;
}

}  // namespace

TEST_CASE("intent keywords pick the question family, most specific first") {
    StubLanguagePort port(plant_graph());
    CHECK(port.analyze("Why is circuit HC-3 losing pressure?").intent == "diagnostic");
    CHECK(port.analyze("How do I replace the mechanical seal?").intent == "procedural");
    CHECK(port.analyze("Predict the failure risk for pump P-205").intent == "predictive");
    CHECK(port.analyze("What is the pressure rating of pump P-101?").intent == "factoid");
    // Predictive outranks diagnostic when both vocabularies appear.
    CHECK(port.analyze("predict which fault comes next").intent == "predictive");
    // Diagnostic outranks procedural.
    CHECK(port.analyze("why does the repair fail").intent == "diagnostic");
}

TEST_CASE("each intent carries its own default traversal depth") {
    StubLanguagePort port(plant_graph());
    CHECK(port.analyze("spec of P-101").depth == 1);
    CHECK(port.analyze("why is it wrong").depth == 2);
    CHECK(port.analyze("how do i fix it").depth == 2);
    CHECK(port.analyze("predict the trend").depth == 3);
}

TEST_CASE("entity linking matches display names and id suffixes") {
    StubLanguagePort port(plant_graph());

    auto a = port.analyze("Tell me about circuit HC-3 today");
    REQUIRE(a.entities.size() == 1);
    CHECK(a.entities[0].id == "Component:HC-3");
    CHECK(a.entities[0].span == "circuit HC-3");

    // The bare designator links through the id suffix.
    auto b = port.analyze("is HC-3 healthy");
    REQUIRE(b.entities.size() == 1);
    CHECK(b.entities[0].id == "Component:HC-3");

    // Case-insensitive.
    auto c = port.analyze("is hc-3 healthy");
    REQUIRE(c.entities.size() == 1);
    CHECK(c.entities[0].id == "Component:HC-3");

    // Two distinct mentions, first mention wins per node.
    auto d = port.analyze("compare circuit HC-3 with circuit HC-7 and then circuit HC-3 again");
    REQUIRE(d.entities.size() == 2);
    CHECK(d.entities[0].id == "Component:HC-3");
    CHECK(d.entities[1].id == "Component:HC-7");

    // No match inside longer words.
    auto e = port.analyze("the P-1011 unit is not ours");
    for (const LinkedEntity& ent : e.entities) CHECK(ent.id != "Component:P-101");
}

TEST_CASE("responses render from the ranked node list") {
    StubLanguagePort port(plant_graph());
    const std::string none = port.render_response("diagnostic", {}, {});
    CHECK(none == "No grounded answer was found for this diagnostic query.");

    const std::string one =
        port.render_response("diagnostic", {"Fault:seal_degradation"}, {0.91});
    CHECK(one.find("seal degradation") != std::string::npos);
    CHECK(one.find("0.91") != std::string::npos);

    const std::string many = port.render_response(
        "diagnostic", {"Fault:seal_degradation", "Fault:valve_blockage"}, {0.91, 0.84});
    CHECK(many.find("2 grounded result nodes") != std::string::npos);
}

TEST_CASE("every intent walks a fixed edge vocabulary") {
    CHECK(edge_map("diagnostic") == std::set<std::string>{"causes", "indicates"});
    CHECK(edge_map("procedural") ==
          std::set<std::string>{"addressed_by", "requires", "requires_part",
                                "has_safety_protocol"});
    CHECK(edge_map("predictive") == std::set<std::string>{"occurred_in", "failed_after"});
    CHECK(edge_map("factoid") == std::set<std::string>{"has_spec", "has_sensor"});
    CHECK(edge_map("unheard_of") == edge_map("factoid"));
}

TEST_CASE("query translation picks operation shape by linked entity types") {
    const KnowledgeGraph& g = plant_graph();

    QueryAnalysis none;
    none.intent = "diagnostic";
    CHECK_THROWS_AS(translate_query(none, g), NoEntitiesLinked);

    SUBCASE("several symptoms: path convergence at depth two") {
        QueryAnalysis a;
        a.intent = "diagnostic";
        a.depth = 2;
        a.entities = {{"Symptom:grinding_1200RPM", "grinding"},
                      {"Symptom:temp_85C", "85C"}};
        const RoutedOp r = translate_query(a, g);
        CHECK(r.role == "diagnostic");
        CHECK(r.expect_diagnosis);
        CHECK(r.op.ret == ReturnFormat::Paths);
        CHECK(r.op.depth.hops == 2);
        CHECK(r.op.via == std::set<std::string>{"causes", "indicates"});
        CHECK(r.op.from.ids == std::vector<NodeId>{"Symptom:grinding_1200RPM",
                                                   "Symptom:temp_85C"});
    }
    SUBCASE("several components: a relational picture, no repair dispatch") {
        QueryAnalysis a;
        a.intent = "diagnostic";
        a.depth = 2;
        a.entities = {{"Component:HC-7", "HC-7"}, {"Component:HC-3", "HC-3"}};
        const RoutedOp r = translate_query(a, g);
        CHECK(!r.expect_diagnosis);
        CHECK(r.op.ret == ReturnFormat::Paths);
        CHECK(r.op.via ==
              std::set<std::string>{"has_symptom", "causes", "indicates"});
        // Explicit id sets are canonicalized.
        CHECK(r.op.from.ids == std::vector<NodeId>{"Component:HC-3", "Component:HC-7"});
    }
    SUBCASE("one component: collect its symptoms first") {
        QueryAnalysis a;
        a.intent = "diagnostic";
        a.depth = 2;
        a.entities = {{"Component:HC-3", "HC-3"}};
        const RoutedOp r = translate_query(a, g);
        CHECK(r.expect_diagnosis);
        CHECK(r.op.ret == ReturnFormat::Subgraph);
        CHECK(r.op.depth.hops == 1);
        CHECK(r.op.via == std::set<std::string>{"has_symptom"});
    }
    SUBCASE("fallback for other diagnostic anchors") {
        QueryAnalysis a;
        a.intent = "diagnostic";
        a.depth = 2;
        a.entities = {{"Fault:seal_degradation", "seal"}};
        const RoutedOp r = translate_query(a, g);
        CHECK(r.op.ret == ReturnFormat::Subgraph);
        CHECK(r.op.depth.hops == 2);
        CHECK(r.op.via == edge_map("diagnostic"));
    }
    SUBCASE("procedural routes to the procedural family") {
        QueryAnalysis a;
        a.intent = "procedural";
        a.depth = 2;
        a.entities = {{"Fault:seal_degradation", "seal"}};
        const RoutedOp r = translate_query(a, g);
        CHECK(r.role == "procedural");
        CHECK(r.op.via == edge_map("procedural"));
        CHECK(r.op.ret == ReturnFormat::Subgraph);
    }
    SUBCASE("predictive routes to synthesis and returns leaves") {
        QueryAnalysis a;
        a.intent = "predictive";
        a.depth = 3;
        a.entities = {{"Component:P-101", "P-101"}};
        const RoutedOp r = translate_query(a, g);
        CHECK(r.role == "synthesis");
        CHECK(r.op.ret == ReturnFormat::Leaves);
        CHECK(r.op.depth.hops == 3);
    }
    SUBCASE("factoid is a one-hop attribute walk") {
        QueryAnalysis a;
        a.intent = "factoid";
        a.depth = 1;
        a.entities = {{"Component:P-101", "P-101"}};
        const RoutedOp r = translate_query(a, g);
        CHECK(r.role == "diagnostic");
        CHECK(r.op.via == edge_map("factoid"));
        CHECK(r.op.depth.hops == 1);
    }
}

TEST_CASE("the bundled incident history yields exactly one pattern proposal") {
    const GraphSchema schema = load_schema_file(fx("synthesis_15of20.schema.json"));
    const KnowledgeGraph g =
        load_graph_file(fx("synthesis_15of20.graph.jsonl"), schema, embedder());

    const auto proposals = discover_patterns(g);
    REQUIRE(proposals.size() == 1);
    const PatternProposal& p = proposals[0];
    CHECK(p.fault == "Fault:recurring_overheat");
    CHECK(p.condition == "Condition:high_temp_alarm");
    CHECK(p.support == 15);
    CHECK(p.total == 20);
    CHECK(p.ratio == doctest::Approx(0.75).epsilon(1e-12));

    // The near-misses stay out: one fails support, one fails the ratio.
    PatternConfig loose;
    loose.min_support = 1;
    loose.min_ratio = 0.0;
    const auto all = discover_patterns(g, loose);
    bool saw_vibration = false, saw_sensor = false;
    for (const PatternProposal& q : all) {
        if (q.condition == "Condition:vibration_alarm") {
            saw_vibration = true;
            CHECK(q.support < kDefaultMinSupport);
        }
        if (q.condition == "Sensor:S-TEMP-7") {
            saw_sensor = true;
            CHECK(q.support >= kDefaultMinSupport);
            CHECK(q.ratio < kDefaultMinRatio);
        }
    }
    CHECK(saw_vibration);
    CHECK(saw_sensor);
}

TEST_CASE("pattern counting agrees with a brute-force oracle on random histories") {
    std::mt19937_64 rng(140721);
    for (int iter = 0; iter < 30; ++iter) {
        // One fault, one condition, a pile of timestamped occurrence edges.
        KnowledgeGraph g;
        GraphSchema schema;
        schema.node_types = {"Fault", "Condition", "WorkOrder"};
        schema.edge_types = {"occurred_in"};
        auto add_node = [&](const std::string& id, const std::string& type) {
            Node n;
            n.id = id;
            n.type = type;
            n.display_name = id;
            g.add_node(std::move(n));
        };
        add_node("Fault:f", "Fault");
        add_node("Condition:c", "Condition");

        std::uniform_int_distribution<int> n_inc(1, 24), n_read(0, 24);
        std::uniform_int_distribution<long long> when(0, 30ll * 24 * 3600);
        std::vector<long long> incidents, readings;
        const int ni = n_inc(rng), nr = n_read(rng);
        int wo = 0;
        auto occurrence = [&](const std::string& from, long long ts) {
            const std::string w = "WorkOrder:W" + std::to_string(wo++);
            add_node(w, "WorkOrder");
            Edge e;
            e.from = from;
            e.to = w;
            e.type = "occurred_in";
            e.ts = ts;
            e.id = make_edge_id(e.from, e.type, e.to, 0);
            g.add_edge(std::move(e));
        };
        for (int i = 0; i < ni; ++i) {
            incidents.push_back(when(rng));
            occurrence("Fault:f", incidents.back());
        }
        for (int i = 0; i < nr; ++i) {
            readings.push_back(when(rng));
            occurrence("Condition:c", readings.back());
        }

        PatternConfig cfg;
        cfg.min_support = 0;
        cfg.min_ratio = 0.0;
        const auto proposals = discover_patterns(g, cfg);
        const oracle::CoocCount want =
            oracle::cooccurrence(incidents, readings, cfg.window_secs);
        CAPTURE(iter);
        if (readings.empty()) {
            CHECK(proposals.empty());
            continue;
        }
        REQUIRE(proposals.size() == 1);
        CHECK(proposals[0].support == want.support);
        CHECK(proposals[0].total == want.total);
        CHECK(proposals[0].ratio ==
              doctest::Approx(static_cast<double>(want.support) / want.total).epsilon(1e-12));
    }
}

TEST_CASE("a proposal becomes a well-formed update message") {
    PatternProposal p{"Fault:recurring_overheat", "Condition:high_temp_alarm", 15, 20, 0.75};
    const Message m = make_pattern_update(p, "A_S", "A_I", "conv_055");
    CHECK(m.performative == Performative::Update);
    CHECK(validate(m).empty());
    const auto& body = std::get<UpdateBody>(m.payload);
    REQUIRE(body.add_edges.size() == 1);
    CHECK(body.add_edges[0].from == "Fault:recurring_overheat");
    CHECK(body.add_edges[0].to == "Condition:high_temp_alarm");
    CHECK(body.add_edges[0].type == "risk_indicator");
    REQUIRE(body.add_edges[0].confidence.has_value());
    CHECK(*body.add_edges[0].confidence == doctest::Approx(0.75));
    // Round-trips the wire byte-exactly.
    CHECK(parse(serialize(m)) == m);
}

TEST_CASE("all bundled scenarios run to a grounded answer") {
    for (const std::string& file : scenario_files()) {
        const Scenario s = load_scenario_file(fx(file));
        const RunReport rep = run_scenario(s, embedder());
        CAPTURE(file);
        CHECK(rep.message_count == s.expected_message_count);
        CHECK(rep.verdict.kind == ClaimKind::Grounded);
        CHECK_NOTHROW(assert_scenario(s, rep));
        for (const Commitment& c : rep.commitments)
            CHECK(c.state != CommitmentState::Pending);
        CHECK(rep.final_version == 0);
    }
}

TEST_CASE("protocol traffic stays far below the prose baseline") {
    for (const std::string& file : scenario_files()) {
        const Scenario s = load_scenario_file(fx(file));
        const RunReport rep = run_scenario(s, embedder());
        std::ifstream in(s.dir + "/" + s.ftma_file);
        REQUIRE(in);
        std::stringstream buf;
        buf << in.rdbuf();
        const long long baseline = ftma_token_total(buf.str());
        CAPTURE(file);
        REQUIRE(baseline > 0);
        const double ratio = static_cast<double>(rep.protocol_tokens) / baseline;
        CHECK(ratio <= 0.40);
    }
}

TEST_CASE("identical queries produce byte-identical runs") {
    const Scenario s = load_scenario_file(fx("scenarios/worked_example.json"));
    const RunReport a = run_scenario(s, embedder());
    const RunReport b = run_scenario(s, embedder());
    REQUIRE(a.envelopes.size() == b.envelopes.size());
    for (std::size_t i = 0; i < a.envelopes.size(); ++i) CHECK(a.envelopes[i] == b.envelopes[i]);
    CHECK(a.transcript == b.transcript);
    CHECK(a.answer_text == b.answer_text);
    CHECK(a.protocol_tokens == b.protocol_tokens);
}

TEST_CASE("the worked example exchanges exactly the five designed messages") {
    const Scenario s = load_scenario_file(fx("scenarios/worked_example.json"));
    const RunReport rep = run_scenario(s, embedder());
    REQUIRE(rep.message_count == 5);
    REQUIRE(rep.transcript.size() == 5);
    CHECK(rep.transcript[0].performative == Performative::Request);
    CHECK(rep.transcript[1].performative == Performative::Inform);
    CHECK(rep.transcript[2].performative == Performative::Request);
    CHECK(rep.transcript[3].performative == Performative::Query);
    CHECK(rep.transcript[4].performative == Performative::Confirm);

    // The ranked fault confidences on the second message.
    const auto& body = std::get<ResultBody>(rep.transcript[1].payload);
    REQUIRE(body.nodes.size() >= 3);
    CHECK(body.nodes[0] == "Fault:seal_degradation");
    CHECK(body.confidence[0] == doctest::Approx(0.91).epsilon(1e-9));
    CHECK(body.confidence[1] == doctest::Approx(0.84).epsilon(1e-9));
    CHECK(body.confidence[2] == doctest::Approx(0.72).epsilon(1e-9));

    CHECK(rep.answer_nodes.front() == "Fault:seal_degradation");
    CHECK(rep.answer_confidence.front() == doctest::Approx(0.91).epsilon(1e-9));
}

TEST_CASE("every message on the bus is canonical protocol text") {
    for (const std::string& file : scenario_files()) {
        const Scenario s = load_scenario_file(fx(file));
        const RunReport rep = run_scenario(s, embedder());
        CAPTURE(file);
        for (const Message& m : rep.transcript) {
            const std::string body = serialize(m);
            const Message back = parse(body);
            CHECK(back == m);
            CHECK(validate(m).empty());
            CHECK(serialize(back) == body);
        }
    }
}

TEST_CASE("raw garbage on the bus lands in the log as an error entry") {
    const GraphSchema schema = load_schema_file(fx("turbomatic_core.schema.json"));
    KnowledgeGraph base = load_graph_file(fx("turbomatic_core.graph.jsonl"), schema, embedder());
    Harness h(std::move(base), schema, load_roster_file(fx("roster.json")), embedder());

    h.inject_raw("A_D", "this is not an envelope at all\n");
    h.pump();
    REQUIRE(h.log().size() == 1);
    CHECK(h.log().entries()[0].kind == "error");
    CHECK(h.log().entries()[0].result.rfind("ERROR", 0) == 0);

    // A forged envelope (bad signature) is refused the same way.
    Message m;
    m.sender = "A_P";
    m.receiver = "A_D";
    m.performative = Performative::Request;
    m.conversation = "conv_x";
    TraverseOp op;
    op.from = NodeSelector::explicit_ids({"Component:HC-3"});
    op.via = {"has_symptom"};
    op.depth = Depth::bounded(1);
    op.ret = ReturnFormat::Subgraph;
    m.payload = op;
    std::string env = seal(serialize(m), "A_P", "conv_x", 1, h.ring());
    env[10] = env[10] == 'x' ? 'y' : 'x';
    h.inject_raw("A_D", env);
    h.pump();
    // The tampered envelope logs an error and the victim gets a REJECT,
    // whose processing appends one more entry.
    REQUIRE(h.log().size() == 3);
    CHECK(h.log().entries()[1].kind == "error");
    CHECK(h.log().entries()[2].kind == "op");
    bool saw_reject = false;
    for (const Message& t : h.transcript())
        if (t.performative == Performative::Reject) saw_reject = true;
    CHECK(saw_reject);
}

TEST_CASE("a well-formed injected request is executed and answered") {
    const GraphSchema schema = load_schema_file(fx("turbomatic_core.schema.json"));
    KnowledgeGraph base = load_graph_file(fx("turbomatic_core.graph.jsonl"), schema, embedder());
    Harness h(std::move(base), schema, load_roster_file(fx("roster.json")), embedder());

    Message m;
    m.sender = "Dispatcher";
    m.receiver = "A_D";
    m.performative = Performative::Request;
    m.conversation = "conv_inj";
    TraverseOp op;
    op.from = NodeSelector::explicit_ids({"Component:HC-3"});
    op.via = {"has_symptom"};
    op.depth = Depth::bounded(1);
    op.ret = ReturnFormat::Subgraph;
    m.payload = op;
    h.inject(m);
    h.pump();

    REQUIRE(h.log().size() >= 1);
    CHECK(h.log().entries()[0].kind == "op");
    CHECK(h.log().entries()[0].result.rfind("RESULT SUBGRAPH", 0) == 0);
    // The reply reached the transcript.
    bool saw_inform = false;
    for (const Message& t : h.transcript())
        if (t.performative == Performative::Inform && t.sender == "A_D") saw_inform = true;
    CHECK(saw_inform);
}

TEST_CASE("an update from an agent without write rights is rejected") {
    const GraphSchema schema = load_schema_file(fx("turbomatic_core.schema.json"));
    KnowledgeGraph base = load_graph_file(fx("turbomatic_core.graph.jsonl"), schema, embedder());
    Harness h(std::move(base), schema, load_roster_file(fx("roster.json")), embedder());
    const VersionId before = h.store().head_version();

    // A_D holds no update permission; the ingestion agent must refuse.
    Message m;
    m.sender = "A_D";
    m.receiver = "A_I";
    m.performative = Performative::Update;
    m.conversation = "conv_deny";
    UpdateBody body;
    WireAddEdge e;
    e.from = "Fault:seal_degradation";
    e.to = "Symptom:pressure_drop";
    e.type = "risk_indicator";
    e.weight = 1.0;
    e.confidence = 0.9;
    body.add_edges.push_back(e);
    m.payload = body;
    h.inject(m);
    h.pump();

    CHECK(h.store().head_version() == before);
    bool saw_reject = false;
    for (const Message& t : h.transcript())
        if (t.performative == Performative::Reject && t.sender == "A_I") {
            saw_reject = true;
            const auto& err = std::get<ErrorBody>(t.payload);
            CHECK(err.code == std::string(kErrUnauthorized));
        }
    CHECK(saw_reject);
}

TEST_CASE("the same update from the authorized writer applies cleanly") {
    const GraphSchema schema = load_schema_file(fx("turbomatic_core.schema.json"));
    KnowledgeGraph base = load_graph_file(fx("turbomatic_core.graph.jsonl"), schema, embedder());
    Harness h(std::move(base), schema, load_roster_file(fx("roster.json")), embedder());

    Message m;
    m.sender = "A_S";
    m.receiver = "A_I";
    m.performative = Performative::Update;
    m.conversation = "conv_apply";
    UpdateBody body;
    WireAddEdge e;
    e.from = "Fault:bearing_wear_B4521";
    e.to = "Sensor:S-HC3-P1";
    e.type = "risk_indicator";
    e.weight = 1.0;
    e.confidence = 0.8;
    e.ts = 1763650000;
    body.add_edges.push_back(e);
    m.payload = body;
    h.inject(m);
    h.pump();

    CHECK(h.store().head_version() == 1);
    bool found = false;
    for (const EdgeId& eid : h.store().head().out_edges("Fault:bearing_wear_B4521")) {
        const Edge& ee = h.store().head().edge(eid);
        if (ee.type == "risk_indicator" && ee.to == "Sensor:S-HC3-P1") {
            found = true;
            REQUIRE(ee.provenance.has_value());
            CHECK(ee.provenance->author == "A_S");
            CHECK(ee.provenance->confidence == doctest::Approx(0.8));
        }
    }
    CHECK(found);
    bool saw_confirm = false;
    for (const Message& t : h.transcript())
        if (t.performative == Performative::Confirm && t.sender == "A_I") saw_confirm = true;
    CHECK(saw_confirm);
}

TEST_CASE("baseline transcripts are token-counted per message block") {
    const std::string text = "alpha beta.\n---\ngamma delta epsilon!\n---\nzeta\n";
    // alpha beta . | gamma delta epsilon ! | zeta  -> 3 + 4 + 1
    CHECK(ftma_token_total(text) == 8);
    CHECK(ftma_token_total("") == 0);
    CHECK(ftma_token_total("one two\n") == 2);
}
