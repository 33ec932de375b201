#include <algorithm>
#include <cctype>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "g2cp/agents.hpp"
#include "g2cp/strutil.hpp"

namespace g2cp {

namespace {

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_';
}

std::string id_suffix(const NodeId& id) {
    auto at = id.find(':');
    return at == std::string::npos ? id : id.substr(at + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// StubLanguagePort

StubLanguagePort::StubLanguagePort(const KnowledgeGraph& graph) : graph_(graph) {
    for (const auto& [id, node] : graph.nodes()) {
        dictionary_.emplace_back(lower(node.display_name), id);
        std::string suffix = lower(id_suffix(id));
        if (suffix.size() >= 2 && suffix != lower(node.display_name))
            dictionary_.emplace_back(std::move(suffix), id);
    }
    // Longest phrase first so the scan prefers the most specific mention.
    std::sort(dictionary_.begin(), dictionary_.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
        return a < b;
    });
}

QueryAnalysis StubLanguagePort::analyze(const std::string& query) {
    QueryAnalysis out;
    const std::string q = lower(query);

    static const std::vector<std::pair<std::string, std::vector<std::string>>> kIntentRules = {
        {"predictive", {"predict", "risk", "forecast", "next likely", "trend"}},
        {"diagnostic", {"why", "cause", "diagnos", "wrong", "fault", "symptom"}},
        {"procedural", {"how do i", "procedure", "replace", "repair", "install", "steps",
                        "fix"}},
    };
    out.intent = "factoid";
    for (const auto& [intent, keywords] : kIntentRules) {
        bool hit = false;
        for (const std::string& kw : keywords)
            if (q.find(kw) != std::string::npos) {
                hit = true;
                break;
            }
        if (hit) {
            out.intent = intent;
            break;
        }
    }

    static const std::map<std::string, int> kDepth = {
        {"factoid", 1}, {"diagnostic", 2}, {"procedural", 2}, {"predictive", 3}};
    out.depth = std::clamp(kDepth.at(out.intent), 1, 3);

    std::size_t i = 0;
    while (i < q.size()) {
        if (i > 0 && word_char(q[i - 1]) && word_char(q[i])) {
            ++i;  // inside a word, not a phrase start
            continue;
        }
        bool matched = false;
        for (const auto& [phrase, id] : dictionary_) {
            if (phrase.empty() || q.compare(i, phrase.size(), phrase) != 0) continue;
            const std::size_t after = i + phrase.size();
            if (after < q.size() && word_char(q[after]) && word_char(phrase.back())) continue;
            out.entities.push_back({id, query.substr(i, phrase.size())});
            i = after;
            matched = true;
            break;
        }
        if (!matched) ++i;
    }
    // First mention wins per node.
    std::vector<LinkedEntity> unique;
    std::set<NodeId> seen;
    for (LinkedEntity& e : out.entities)
        if (seen.insert(e.id).second) unique.push_back(std::move(e));
    out.entities = std::move(unique);
    return out;
}

std::string StubLanguagePort::render_response(const std::string& intent,
                                              const std::vector<NodeId>& nodes,
                                              const std::vector<double>& confidence) {
    if (nodes.empty()) return "No grounded answer was found for this " + intent + " query.";
    std::ostringstream out;
    const Node* top = graph_.has_node(nodes.front()) ? &graph_.node(nodes.front()) : nullptr;
    out << "Top finding: " << (top ? top->display_name : nodes.front());
    if (!confidence.empty()) out << " (confidence " << format_double(confidence.front()) << ")";
    out << ".";
    if (nodes.size() > 1) out << " Based on " << nodes.size() << " grounded result nodes.";
    return out.str();
}

// ---------------------------------------------------------------------------
// Routing

const std::set<std::string>& edge_map(const std::string& intent) {
    static const std::map<std::string, std::set<std::string>> kMap = {
        {"diagnostic", {"causes", "indicates"}},
        {"procedural", {"addressed_by", "requires", "requires_part", "has_safety_protocol"}},
        {"predictive", {"occurred_in", "failed_after"}},
        {"factoid", {"has_spec", "has_sensor"}},
    };
    auto it = kMap.find(intent);
    return it == kMap.end() ? kMap.at("factoid") : it->second;
}

RoutedOp translate_query(const QueryAnalysis& analysis, const KnowledgeGraph& graph) {
    if (analysis.entities.empty())
        throw NoEntitiesLinked("no graph entity matched the query text");

    std::vector<NodeId> components;
    std::vector<NodeId> symptoms;
    std::vector<NodeId> all;
    for (const LinkedEntity& e : analysis.entities) {
        all.push_back(e.id);
        const std::string type = node_type_of(e.id);
        if (type == "Component") components.push_back(e.id);
        if (type == "Symptom") symptoms.push_back(e.id);
    }
    (void)graph;

    RoutedOp r;
    auto explicit_from = [](std::vector<NodeId> ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return NodeSelector::explicit_ids(std::move(ids));
    };

    if (analysis.intent == "diagnostic") {
        r.role = "diagnostic";
        r.expect_diagnosis = true;
        if (symptoms.size() >= 2) {
            // Symptoms named directly: walk the causal edges and show how
            // they converge.
            r.op.from = explicit_from(symptoms);
            r.op.via = edge_map("diagnostic");
            r.op.depth = Depth::bounded(2);
            r.op.ret = ReturnFormat::Paths;
        } else if (components.size() >= 2) {
            // Relational question across units: one combined walk from every
            // anchor so shared causes show up as shared path endpoints. The
            // path picture itself is the answer; no repair dispatch follows.
            r.expect_diagnosis = false;
            r.op.from = explicit_from(components);
            r.op.via = {"has_symptom", "causes", "indicates"};
            r.op.depth = Depth::bounded(2);
            r.op.ret = ReturnFormat::Paths;
        } else if (!components.empty() && symptoms.empty()) {
            // Component named but no symptom: first collect its symptoms,
            // the diagnostic agent takes it from there.
            r.op.from = explicit_from(components);
            r.op.via = {"has_symptom"};
            r.op.depth = Depth::bounded(1);
            r.op.ret = ReturnFormat::Subgraph;
        } else {
            r.op.from = explicit_from(all);
            r.op.via = edge_map("diagnostic");
            r.op.depth = Depth::bounded(analysis.depth);
            r.op.ret = ReturnFormat::Subgraph;
        }
    } else if (analysis.intent == "procedural") {
        r.role = "procedural";
        r.op.from = explicit_from(all);
        r.op.via = edge_map("procedural");
        r.op.depth = Depth::bounded(analysis.depth);
        r.op.ret = ReturnFormat::Subgraph;
    } else if (analysis.intent == "predictive") {
        r.role = "synthesis";
        r.op.from = explicit_from(all);
        r.op.via = edge_map("predictive");
        r.op.depth = Depth::bounded(analysis.depth);
        r.op.ret = ReturnFormat::Leaves;
    } else {
        r.role = "diagnostic";
        r.op.from = explicit_from(all);
        r.op.via = edge_map("factoid");
        r.op.depth = Depth::bounded(1);
        r.op.ret = ReturnFormat::Subgraph;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Pattern discovery

std::vector<PatternProposal> discover_patterns(const KnowledgeGraph& graph,
                                               const PatternConfig& cfg) {
    std::vector<PatternProposal> out;
    for (const auto& [fid, fault] : graph.nodes()) {
        if (fault.type != "Fault") continue;
        std::vector<Timestamp> incidents;
        for (const EdgeId& eid : graph.out_edges(fid)) {
            const Edge& e = graph.edge(eid);
            if (e.type == "occurred_in") incidents.push_back(e.ts);
        }
        if (incidents.empty()) continue;
        for (const auto& [cid, cond] : graph.nodes()) {
            if (cond.type != "Sensor" && cond.type != "Condition") continue;
            std::vector<Timestamp> readings;
            for (const EdgeId& eid : graph.out_edges(cid)) {
                const Edge& e = graph.edge(eid);
                if (e.type == "occurred_in") readings.push_back(e.ts);
            }
            if (readings.empty()) continue;
            int support = 0;
            for (Timestamp it : incidents) {
                bool hit = false;
                for (Timestamp rt : readings)
                    if (std::llabs(it - rt) <= cfg.window_secs) {
                        hit = true;
                        break;
                    }
                if (hit) ++support;
            }
            const double ratio = static_cast<double>(support) / incidents.size();
            if (support >= cfg.min_support && ratio >= cfg.min_ratio)
                out.push_back({fid, cid, support, static_cast<int>(incidents.size()), ratio});
        }
    }
    return out;
}

Message make_pattern_update(const PatternProposal& p, const AgentId& sender,
                            const AgentId& receiver, const ConversationId& conversation) {
    Message m;
    m.sender = sender;
    m.receiver = receiver;
    m.performative = Performative::Update;
    m.conversation = conversation;
    UpdateBody body;
    WireAddEdge e;
    e.from = p.fault;
    e.to = p.condition;
    e.type = "risk_indicator";
    e.weight = 1.0;
    e.confidence = p.ratio;
    body.add_edges.push_back(std::move(e));
    m.payload = std::move(body);
    return m;
}

// ---------------------------------------------------------------------------
// Harness

namespace {

int priority_of(Performative p) {
    switch (p) {
        case Performative::Reject: return 0;
        case Performative::Confirm:
        case Performative::Inform: return 1;
        case Performative::Request:
        case Performative::Query: return 2;
        case Performative::Propose: return 3;
        case Performative::Update: return 4;
    }
    return 5;
}

bool has_out_edge_of_type(const KnowledgeGraph& g, const NodeId& id, const std::string& type) {
    if (!g.has_node(id)) return false;
    for (const EdgeId& eid : g.out_edges(id))
        if (g.edge(eid).type == type) return true;
    return false;
}

std::set<std::string> out_edge_types(const KnowledgeGraph& g, const NodeId& id) {
    std::set<std::string> out;
    if (!g.has_node(id)) return out;
    for (const EdgeId& eid : g.out_edges(id)) out.insert(g.edge(eid).type);
    return out;
}

// Whether `target` is reachable from `from` using via-typed edges whose
// endpoints both lie in `within`.
bool reachable_within(const KnowledgeGraph& g, const std::set<NodeId>& within,
                      const std::set<std::string>& via, const NodeId& from,
                      const NodeId& target) {
    if (from == target) return true;
    std::set<NodeId> seen = {from};
    std::vector<NodeId> frontier = {from};
    while (!frontier.empty()) {
        std::vector<NodeId> next;
        for (const NodeId& u : frontier) {
            for (const EdgeId& eid : g.out_edges(u)) {
                const Edge& e = g.edge(eid);
                if (!via.count(e.type) || !within.count(e.to) || seen.count(e.to)) continue;
                if (e.to == target) return true;
                seen.insert(e.to);
                next.push_back(e.to);
            }
        }
        frontier = std::move(next);
    }
    return false;
}

}  // namespace

Harness::Harness(KnowledgeGraph base, GraphSchema schema, Roster roster,
                 const EmbeddingProvider& embedder, ExecutionLimits limits,
                 Timestamp clock_base)
    : schema_(std::move(schema)),
      roster_(std::move(roster)),
      embedder_(embedder),
      limits_(limits),
      store_(std::move(base), schema_, embedder_),
      clock_(clock_base) {
    for (const auto& [id, spec] : roster_.agents) {
        ring_.add_agent(id);
        agent_order_.push_back(id);
    }
    std::sort(agent_order_.begin(), agent_order_.end());
}

AgentId Harness::agent_with_role(const std::string& role) const {
    for (const AgentId& id : agent_order_)
        if (roster_.at(id).role == role) return id;
    throw UnknownSender("no agent with role '" + role + "'");
}

void Harness::send(const Message& m) {
    const std::string body = serialize(m);
    ++bus_seq_;
    std::string envelope = seal(body, m.sender, m.conversation, bus_seq_, ring_);
    transcript_.push_back(m);
    envelopes_.push_back(envelope);
    Pending p;
    p.seq = bus_seq_;
    p.priority = priority_of(m.performative);
    p.envelope = std::move(envelope);
    p.parsed = m;
    deliver(m.receiver, std::move(p));
}

void Harness::deliver(const AgentId& receiver, Pending p) {
    queues_[receiver].push_back(std::move(p));
}

void Harness::inject(const Message& m) { send(m); }

void Harness::inject_raw(const AgentId& receiver, const std::string& bytes) {
    ++bus_seq_;
    Pending p;
    p.seq = bus_seq_;
    p.priority = 5;
    p.envelope = bytes;
    deliver(receiver, std::move(p));
}

void Harness::pump() {
    bool any = true;
    while (any) {
        any = false;
        for (const AgentId& agent : agent_order_) {
            auto& q = queues_[agent];
            while (!q.empty()) {
                auto it = std::min_element(q.begin(), q.end(),
                                           [](const Pending& a, const Pending& b) {
                                               return std::tie(a.priority, a.seq) <
                                                      std::tie(b.priority, b.seq);
                                           });
                Pending p = std::move(*it);
                q.erase(it);
                process(agent, p);
                any = true;
            }
        }
    }
}

Payload Harness::execute(const TraverseOp& op, const ConversationId& conversation,
                         TraversalResult* details) {
    ConversationContext ctx;
    ctx.id = conversation;
    ctx.focus = focus_[conversation];
    try {
        TraversalResult r = traverse(store_.current(), schema_, op, ctx, embedder_, limits_);
        if (r.stats.timed_out) return ErrorBody{kErrTimeout, "traversal exceeded time budget"};
        if (details) *details = r;
        return r.body;
    } catch (const SourceEmpty& e) {
        return ErrorBody{kErrSourceEmpty, e.what()};
    } catch (const UnknownNode& e) {
        return ErrorBody{kErrUnknownNode, e.what()};
    } catch (const UnknownContextSymbol& e) {
        return ErrorBody{kErrMalformed, e.what()};
    } catch (const SchemaViolation& e) {
        return ErrorBody{kErrSchemaViolation, e.what()};
    }
}

bool Harness::authorized(const Message& m) {
    if (!roster_.has(m.sender)) return false;
    const AgentSpec& sender = roster_.at(m.sender);
    if (const auto* op = std::get_if<TraverseOp>(&m.payload)) {
        std::set<std::string> source_types;
        try {
            ConversationContext ctx;
            ctx.id = m.conversation;
            ctx.focus = focus_[m.conversation];
            for (const NodeId& id :
                 resolve_selector(store_.current(), schema_, op->from, ctx, embedder_))
                source_types.insert(store_.current().node(id).type);
        } catch (const Error&) {
            return true;  // execution will surface the real failure
        }
        return authorize_traverse(sender, source_types, op->via);
    }
    if (const auto* ub = std::get_if<UpdateBody>(&m.payload)) {
        std::set<std::string> node_types;
        std::set<std::string> edge_types;
        for (const WireAddNode& n : ub->add_nodes) node_types.insert(n.type);
        for (const WireAddEdge& e : ub->add_edges) {
            edge_types.insert(e.type);
            node_types.insert(node_type_of(e.from));
            node_types.insert(node_type_of(e.to));
        }
        for (const NodeId& id : ub->del_nodes) node_types.insert(node_type_of(id));
        for (const EdgeId& id : ub->del_edges)
            if (store_.current().has_edge(id))
                edge_types.insert(store_.current().edge(id).type);
        return authorize_update(sender, node_types, edge_types);
    }
    return true;
}

void Harness::record_op(const Message& m, const std::string& envelope, const Payload& outcome,
                        VersionId before, VersionId after) {
    const std::string text = payload_text(outcome);
    const Timestamp ts = clock_.tick();
    const AuditEntry& entry = log_.append("op", envelope, text, before, after, ts);

    bool entry_ok = true;
    bool nonempty = false;
    if (const auto* rb = std::get_if<ResultBody>(&m.payload)) {
        // Result-bearing messages are checked against the graph they cite.
        entry_ok = result_grounded(*rb, store_.current());
        nonempty = !rb->nodes.empty();
    }
    if (const auto* rb = std::get_if<ResultBody>(&outcome)) nonempty = !rb->nodes.empty();

    ledger_.on_processed(m, entry.seq, entry_ok, nonempty);
    if (m.performative == Performative::Inform || m.performative == Performative::Confirm)
        trust_.record(m.sender, entry_ok);
}

void Harness::record_error(const std::string& envelope, const ErrorBody& err) {
    const std::string text = payload_text(Payload{err});
    const VersionId v = store_.head_version();
    log_.append("error", envelope, text, v, v, clock_.tick());
}

void Harness::process(const AgentId& self, const Pending& p) {
    Message m;
    if (p.parsed) {
        m = *p.parsed;
    } else {
        // Raw bytes: try to authenticate and parse; otherwise record the
        // failure and push back a rejection when the sender is recoverable.
        Opened opened = open_envelope(p.envelope, ring_);
        if (!opened.ok) {
            record_error(p.envelope, {kErrMalformed, opened.reason});
            const auto eol = p.envelope.find('\n');
            const std::string header =
                eol == std::string::npos ? p.envelope : p.envelope.substr(0, eol);
            const auto at = header.find(" TO ");
            const std::string sender = at == std::string::npos ? "" : header.substr(0, at);
            if (roster_.has(sender)) {
                Message rej;
                rej.sender = self;
                rej.receiver = sender;
                rej.performative = Performative::Reject;
                rej.conversation = "conv_error";
                rej.payload = ErrorBody{kErrMalformed, opened.reason};
                send(rej);
            }
            return;
        }
        try {
            m = parse(opened.body);
        } catch (const ParseError& e) {
            record_error(p.envelope, {kErrMalformed, e.what()});
            if (roster_.has(opened.keyid)) {
                Message rej;
                rej.sender = self;
                rej.receiver = opened.keyid;
                rej.performative = Performative::Reject;
                rej.conversation = "conv_error";
                rej.payload = ErrorBody{kErrMalformed, e.what()};
                send(rej);
            }
            return;
        }
    }

    const auto violations = validate(m);
    if (!violations.empty()) {
        const ErrorBody err{kErrMalformed, violations[0].code + ": " + violations[0].detail};
        record_error(p.envelope, err);
        if (roster_.has(m.sender) && m.sender != self) {
            Message rej;
            rej.sender = self;
            rej.receiver = m.sender;
            rej.performative = Performative::Reject;
            rej.conversation = m.conversation;
            rej.payload = err;
            send(rej);
        }
        return;
    }
    if (!authorized(m)) {
        const ErrorBody err{kErrUnauthorized, "Unauthorized operation"};
        record_error(p.envelope, err);
        if (roster_.has(m.sender) && m.sender != self) {
            Message rej;
            rej.sender = self;
            rej.receiver = m.sender;
            rej.performative = Performative::Reject;
            rej.conversation = m.conversation;
            rej.payload = err;
            send(rej);
        }
        return;
    }

    // Stash the envelope where the handlers can reach it via m + this seq.
    current_envelope_ = p.envelope;
    const std::string role = roster_.at(self).role;
    if (role == "dispatcher") {
        const bool grounded =
            !std::holds_alternative<ResultBody>(m.payload) ||
            result_grounded(std::get<ResultBody>(m.payload), store_.current());
        handle_dispatcher(m, grounded);
    } else if (role == "diagnostic") {
        handle_diagnostic(m);
    } else if (role == "procedural") {
        handle_procedural(m);
    } else if (role == "synthesis") {
        handle_synthesis(m);
    } else if (role == "ingestion") {
        handle_ingestion(m);
    } else {
        record_op(m, p.envelope, m.payload, store_.head_version(), store_.head_version());
    }
}

void Harness::handle_dispatcher(const Message& m, bool grounded) {
    const VersionId v = store_.head_version();
    record_op(m, current_envelope_, m.payload, v, v);

    ConvState& st = conv_[m.conversation];
    if (m.performative == Performative::Reject) {
        st.phase = "done";
        return;
    }
    const auto* rb = std::get_if<ResultBody>(&m.payload);
    if (!rb) {
        st.phase = "done";
        return;
    }

    if (st.phase == "awaiting_diagnosis" && grounded) {
        // Rank candidate faults out of the diagnostic result.
        std::vector<NodeId> faults;
        std::vector<double> conf;
        std::map<NodeId, double> conf_of;
        for (std::size_t i = 0; i < rb->nodes.size(); ++i)
            conf_of[rb->nodes[i]] = i < rb->confidence.size() ? rb->confidence[i] : 0.0;

        if (rb->format == ReturnFormat::Paths) {
            std::map<NodeId, std::set<NodeId>> starts;  // endpoint -> path starts
            for (const WirePath& p : rb->paths) {
                if (p.steps.empty()) continue;
                starts[p.steps.back().to].insert(p.steps.front().from);
            }
            std::vector<NodeId> ends;
            for (const auto& [end, from] : starts) ends.push_back(end);
            std::sort(ends.begin(), ends.end(), [&](const NodeId& a, const NodeId& b) {
                const auto ka = std::make_tuple(-static_cast<int>(starts[a].size()),
                                                -conf_of[a]);
                const auto kb = std::make_tuple(-static_cast<int>(starts[b].size()),
                                                -conf_of[b]);
                return std::tie(ka, a) < std::tie(kb, b);
            });
            for (const NodeId& e : ends) {
                faults.push_back(e);
                conf.push_back(conf_of[e]);
            }
        } else {
            for (std::size_t i = 0; i < rb->nodes.size(); ++i) {
                if (node_type_of(rb->nodes[i]) == "Fault") {
                    faults.push_back(rb->nodes[i]);
                    conf.push_back(i < rb->confidence.size() ? rb->confidence[i] : 0.0);
                }
            }
        }
        st.answer_nodes = faults;
        st.answer_confidence = conf;
        if (faults.empty()) {
            st.phase = "done";
            return;
        }
        const NodeId top = faults.front();
        static const std::set<std::string> kFollowUp = {"addressed_by", "requires_part",
                                                        "has_safety_protocol"};
        std::set<std::string> via;
        for (const std::string& t : out_edge_types(store_.current(), top))
            if (kFollowUp.count(t)) via.insert(t);
        if (via.empty()) via = edge_map("procedural");

        Message req;
        req.sender = m.receiver;
        req.receiver = agent_with_role("procedural");
        req.performative = Performative::Request;
        req.conversation = m.conversation;
        TraverseOp op;
        op.from = NodeSelector::explicit_ids({top});
        op.via = via;
        op.depth = Depth::bounded(1);
        op.ret = ReturnFormat::Subgraph;
        req.payload = op;
        st.phase = "awaiting_procedure";
        send(req);
        return;
    }

    // Any other grounded result settles the conversation.
    if (st.answer_nodes.empty()) {
        st.answer_nodes = rb->nodes;
        st.answer_confidence = rb->confidence;
    }
    st.phase = "done";
}

void Harness::handle_diagnostic(const Message& m) {
    const VersionId v = store_.head_version();
    const auto* op = std::get_if<TraverseOp>(&m.payload);
    if (!op || (m.performative != Performative::Request &&
                m.performative != Performative::Query)) {
        record_op(m, current_envelope_, m.payload, v, v);
        return;
    }

    TraversalResult details;
    Payload outcome = execute(*op, m.conversation, &details);
    record_op(m, current_envelope_, outcome, v, v);

    Message reply;
    reply.sender = m.receiver;
    reply.receiver = m.sender;
    reply.conversation = m.conversation;

    if (const auto* err = std::get_if<ErrorBody>(&outcome)) {
        reply.performative = Performative::Inform;
        reply.payload = *err;
        send(reply);
        return;
    }
    const ResultBody& rb = std::get<ResultBody>(outcome);

    const bool symptom_preamble = m.performative == Performative::Request &&
                                  op->via == std::set<std::string>{"has_symptom"} &&
                                  op->ret == ReturnFormat::Subgraph;
    if (symptom_preamble) {
        // Second hop: walk the causal edges out of the symptoms just found
        // and rank candidate faults by how many symptoms implicate them.
        std::set<NodeId> sources(details.sources.begin(), details.sources.end());
        std::vector<NodeId> symptoms;
        for (const NodeId& n : rb.nodes)
            if (!sources.count(n) && node_type_of(n) == "Symptom") symptoms.push_back(n);

        if (symptoms.empty()) {
            reply.performative = Performative::Inform;
            reply.payload = rb;
            send(reply);
            return;
        }
        TraverseOp follow;
        follow.from = NodeSelector::explicit_ids(symptoms);
        follow.via = edge_map("diagnostic");
        follow.depth = Depth::bounded(2);
        follow.ret = ReturnFormat::Subgraph;
        TraversalResult d2;
        Payload p2 = execute(follow, m.conversation, &d2);
        if (const auto* err = std::get_if<ErrorBody>(&p2)) {
            reply.performative = Performative::Inform;
            reply.payload = *err;
            send(reply);
            return;
        }
        const ResultBody& rb2 = std::get<ResultBody>(p2);

        std::set<NodeId> explored(rb2.nodes.begin(), rb2.nodes.end());
        std::vector<NodeId> faults;
        for (const NodeId& n : rb2.nodes)
            if (node_type_of(n) == "Fault") faults.push_back(n);
        std::map<NodeId, int> support;
        for (const NodeId& f : faults) {
            int s = 0;
            for (const NodeId& sym : d2.sources)
                if (reachable_within(store_.current(), explored, follow.via, sym, f)) ++s;
            support[f] = s;
        }
        std::sort(faults.begin(), faults.end(), [&](const NodeId& a, const NodeId& b) {
            const auto ka = std::make_tuple(-support[a], -d2.confidence.at(a));
            const auto kb = std::make_tuple(-support[b], -d2.confidence.at(b));
            return std::tie(ka, a) < std::tie(kb, b);
        });

        ResultBody ranked;
        ranked.format = ReturnFormat::Subgraph;
        for (const NodeId& f : faults) {
            ranked.nodes.push_back(f);
            ranked.confidence.push_back(d2.confidence.at(f));
        }
        std::set<NodeId> placed(faults.begin(), faults.end());
        for (const NodeId& n : rb2.nodes) {
            if (placed.count(n)) continue;
            ranked.nodes.push_back(n);
            ranked.confidence.push_back(d2.confidence.at(n));
        }
        ranked.edges = rb2.edges;
        reply.performative = Performative::Inform;
        reply.payload = ranked;
        send(reply);
        return;
    }

    if (m.performative == Performative::Query) {
        reply.performative =
            rb.nodes.empty() ? Performative::Inform : Performative::Confirm;
        reply.payload = rb;
        send(reply);
        return;
    }
    reply.performative = Performative::Inform;
    reply.payload = rb;
    send(reply);
}

void Harness::handle_procedural(const Message& m) {
    const VersionId v = store_.head_version();
    const auto* op = std::get_if<TraverseOp>(&m.payload);
    if (!op || m.performative != Performative::Request) {
        record_op(m, current_envelope_, m.payload, v, v);
        return;
    }

    TraversalResult details;
    Payload outcome = execute(*op, m.conversation, &details);
    record_op(m, current_envelope_, outcome, v, v);

    if (const auto* err = std::get_if<ErrorBody>(&outcome)) {
        Message reply;
        reply.sender = m.receiver;
        reply.receiver = m.sender;
        reply.performative = Performative::Inform;
        reply.conversation = m.conversation;
        reply.payload = *err;
        send(reply);
        return;
    }
    const ResultBody& rb = std::get<ResultBody>(outcome);

    bool has_history = false;
    for (const NodeId& s : details.sources)
        if (has_out_edge_of_type(store_.current(), s, "occurred_in")) has_history = true;

    if (has_history) {
        // Incident history exists: ask the synthesis agent for the record
        // before answering; the grounded answer is assembled from the log.
        std::vector<NodeId> from = details.sources;
        for (const NodeId& id : focus_[m.conversation])
            if (node_type_of(id) == "Component") from.push_back(id);
        std::sort(from.begin(), from.end());
        from.erase(std::unique(from.begin(), from.end()), from.end());

        Message query;
        query.sender = m.receiver;
        query.receiver = agent_with_role("synthesis");
        query.performative = Performative::Query;
        query.conversation = m.conversation;
        TraverseOp q;
        q.from = NodeSelector::explicit_ids(from);
        q.via = {"occurred_in"};
        q.depth = Depth::bounded(2);
        q.ret = ReturnFormat::Leaves;
        query.payload = q;
        send(query);
        return;
    }

    Message reply;
    reply.sender = m.receiver;
    reply.receiver = m.sender;
    reply.performative = Performative::Inform;
    reply.conversation = m.conversation;
    reply.payload = rb;
    send(reply);
}

void Harness::handle_synthesis(const Message& m) {
    const VersionId v = store_.head_version();
    const auto* op = std::get_if<TraverseOp>(&m.payload);
    if (!op || (m.performative != Performative::Request &&
                m.performative != Performative::Query)) {
        record_op(m, current_envelope_, m.payload, v, v);
        return;
    }

    Payload outcome = execute(*op, m.conversation, nullptr);
    record_op(m, current_envelope_, outcome, v, v);

    Message reply;
    reply.sender = m.receiver;
    reply.receiver = m.sender;
    reply.conversation = m.conversation;
    if (const auto* err = std::get_if<ErrorBody>(&outcome)) {
        reply.performative = Performative::Inform;
        reply.payload = *err;
        send(reply);
        return;
    }
    const ResultBody& rb = std::get<ResultBody>(outcome);
    if (m.performative == Performative::Query) {
        // Affirmative answers travel as CONFIRM; an empty record is the
        // negative answer, sent as a plain INFORM.
        reply.performative =
            rb.nodes.empty() ? Performative::Inform : Performative::Confirm;
    } else {
        reply.performative = Performative::Inform;
    }
    reply.payload = rb;
    send(reply);
}

void Harness::handle_ingestion(const Message& m) {
    const auto* ub = std::get_if<UpdateBody>(&m.payload);
    if (!ub || m.performative != Performative::Update) {
        const VersionId v = store_.head_version();
        record_op(m, current_envelope_, m.payload, v, v);
        return;
    }

    GraphDelta delta = delta_from_wire(*ub);
    const VersionId before = store_.head_version();
    const auto violations = store_.validate(delta);

    Message reply;
    reply.sender = m.receiver;
    reply.receiver = m.sender;
    reply.conversation = m.conversation;

    if (!violations.empty()) {
        const ErrorBody err = update_rejection(violations[0]);
        record_op(m, current_envelope_, err, before, before);
        reply.performative = Performative::Reject;
        reply.payload = err;
        send(reply);
        return;
    }

    ProvenanceTag prov;
    prov.author = m.sender;
    prov.source_message = m.conversation + ":" + std::to_string(log_.size() + 1);
    prov.timestamp = clock_.peek();
    store_.apply(delta, prov, before);
    const ResultBody receipt = update_receipt(*ub);
    record_op(m, current_envelope_, receipt, before, store_.head_version());
    reply.performative = Performative::Confirm;
    reply.payload = receipt;
    send(reply);
}

RunReport Harness::run_query(const std::string& query, const ConversationId& conversation,
                             LanguagePort& port) {
    RunReport rep;
    QueryAnalysis qa = port.analyze(query);
    rep.intent = qa.intent;
    RoutedOp routed = translate_query(qa, store_.current());

    ConvState st;
    st.intent = qa.intent;
    for (const LinkedEntity& e : qa.entities) st.focus.insert(e.id);
    st.phase = routed.expect_diagnosis ? "awaiting_diagnosis" : "awaiting_answer";
    conv_[conversation] = st;
    focus_[conversation] = st.focus;

    Message first;
    first.sender = agent_with_role("dispatcher");
    first.receiver = agent_with_role(routed.role);
    first.performative = Performative::Request;
    first.conversation = conversation;
    first.payload = routed.op;
    send(first);
    pump();
    ledger_.finalize();

    // Claim: the union of every verifiable recorded result in this run.
    for (const AuditEntry& e : log_.entries()) {
        if (e.kind != "op") continue;
        if (!starts_with(e.result, "RESULT")) continue;
        rep.trace.push_back(e.seq);
        Payload p = parse_payload_text(e.result);
        if (const auto* rb = std::get_if<ResultBody>(&p))
            add_result_view(*rb, rep.claim.nodes, rep.claim.edges);
    }
    rep.verdict = verify_claim(log_, store_.base(), schema_, ring_, embedder_, rep.claim,
                               rep.trace, limits_);

    rep.transcript = transcript_;
    rep.envelopes = envelopes_;
    rep.message_count = static_cast<int>(transcript_.size());
    for (const Message& m : transcript_) rep.protocol_tokens += token_count(serialize(m));
    rep.final_version = store_.head_version();
    rep.commitments = ledger_.all();
    rep.log = log_;

    const ConvState& done = conv_[conversation];
    rep.answer_nodes = done.answer_nodes;
    rep.answer_confidence = done.answer_confidence;
    rep.answer_text = port.render_response(rep.intent, rep.answer_nodes,
                                           rep.answer_confidence);
    return rep;
}

// ---------------------------------------------------------------------------
// Scenarios

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.graph_file = j.at("graph").get<std::string>();
    s.schema_file = j.at("schema").get<std::string>();
    s.roster_file = j.value("roster", "roster.json");
    s.query = j.at("query").get<std::string>();
    s.conversation_id = j.at("conversation_id").get<std::string>();
    s.ftma_file = j.at("ftma_transcript").get<std::string>();
    const auto& e = j.at("expected");
    s.expected_message_count = e.at("message_count").get<int>();
    for (const auto& n : e.value("claim_nodes", nlohmann::json::array()))
        s.expected_claim_nodes.push_back(n.get<std::string>());
    for (const auto& n : e.value("claim_edges", nlohmann::json::array()))
        s.expected_claim_edges.push_back(n.get<std::string>());
    s.expected_verdict = e.at("verdict").get<std::string>();
    const auto slash = path.find_last_of('/');
    s.dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return s;
}

long long ftma_token_total(const std::string& text) {
    long long total = 0;
    std::string message;
    auto flush = [&] {
        total += token_count(message);
        message.clear();
    };
    for (const std::string& line : split_lines(text)) {
        const std::string t = trim(line);
        if (t.size() >= 3 && t.find_first_not_of('-') == std::string::npos) {
            flush();
            continue;
        }
        message += line + "\n";
    }
    flush();
    return total;
}

RunReport run_scenario(const Scenario& s, const EmbeddingProvider& embedder,
                       const ExecutionLimits& limits) {
    const GraphSchema schema = load_schema_file(s.dir + "/" + s.schema_file);
    const KnowledgeGraph graph =
        load_graph_file(s.dir + "/" + s.graph_file, schema, embedder);
    const Roster roster = load_roster_file(s.dir + "/" + s.roster_file);
    Harness h(graph, schema, roster, embedder, limits);
    StubLanguagePort port(graph);
    return h.run_query(s.query, s.conversation_id, port);
}

void assert_scenario(const Scenario& s, const RunReport& r) {
    auto fail = [&](const std::string& why) {
        throw AssertionFailure("scenario '" + s.name + "': " + why);
    };
    if (r.message_count != s.expected_message_count)
        fail("expected " + std::to_string(s.expected_message_count) + " messages, saw " +
             std::to_string(r.message_count));
    for (const NodeId& n : s.expected_claim_nodes)
        if (!r.claim.nodes.count(n)) fail("claim is missing node " + n);
    for (const std::string& e : s.expected_claim_edges) {
        const auto a = e.find(" -[");
        const auto b = e.find("]-> ");
        if (a == std::string::npos || b == std::string::npos) fail("bad edge spec " + e);
        const auto key = std::make_tuple(e.substr(0, a), e.substr(a + 3, b - a - 3),
                                         e.substr(b + 4));
        if (!r.claim.edges.count(key)) fail("claim is missing edge " + e);
    }
    const char* verdict = r.verdict.kind == ClaimKind::Grounded     ? "Grounded"
                          : r.verdict.kind == ClaimKind::Fabricated ? "Fabricated"
                                                                    : "FalsifiedTrace";
    if (verdict != s.expected_verdict)
        fail("expected verdict " + s.expected_verdict + ", got " + verdict);
}

}  // namespace g2cp
