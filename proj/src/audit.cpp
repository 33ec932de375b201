#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "g2cp/audit.hpp"
#include "g2cp/errors.hpp"
#include "g2cp/strutil.hpp"

namespace g2cp {

const AuditEntry& AuditLog::append(std::string kind, std::string envelope, std::string result,
                                   VersionId before, VersionId after, Timestamp ts) {
    AuditEntry e;
    e.seq = entries_.size() + 1;
    e.kind = std::move(kind);
    e.envelope = std::move(envelope);
    e.result = std::move(result);
    e.digest = sha256_hex(e.result);
    e.version_before = before;
    e.version_after = after;
    e.ts = ts;
    entries_.push_back(std::move(e));
    return entries_.back();
}

void AuditLog::save(std::ostream& out) const {
    for (const AuditEntry& e : entries_) {
        nlohmann::json j{{"seq", e.seq},
                         {"kind", e.kind},
                         {"envelope", e.envelope},
                         {"result", e.result},
                         {"digest", e.digest},
                         {"version_before", e.version_before},
                         {"version_after", e.version_after},
                         {"ts", e.ts}};
        out << j.dump() << "\n";
    }
}

void AuditLog::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write audit log: " + path);
    save(out);
}

AuditLog AuditLog::load(std::istream& in) {
    AuditLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw CorruptEntry("audit log line " + std::to_string(line_no) +
                               " is not valid JSON");
        }
        AuditEntry e;
        try {
            e.seq = j.at("seq").get<std::uint64_t>();
            e.kind = j.at("kind").get<std::string>();
            e.envelope = j.at("envelope").get<std::string>();
            e.result = j.at("result").get<std::string>();
            e.digest = j.at("digest").get<std::string>();
            e.version_before = j.at("version_before").get<VersionId>();
            e.version_after = j.at("version_after").get<VersionId>();
            e.ts = j.at("ts").get<Timestamp>();
        } catch (const nlohmann::json::exception&) {
            throw CorruptEntry("audit log line " + std::to_string(line_no) +
                               " is missing required fields");
        }
        if (e.seq != log.entries_.size() + 1)
            throw BrokenChain("audit log sequence break at line " + std::to_string(line_no));
        log.entries_.push_back(std::move(e));
    }
    return log;
}

AuditLog AuditLog::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open audit log: " + path);
    return load(in);
}

void add_result_view(const ResultBody& body, std::set<NodeId>& nodes,
                     std::set<std::tuple<NodeId, std::string, NodeId>>& edges) {
    for (const NodeId& n : body.nodes) nodes.insert(n);
    for (const WireEdge& e : body.edges) edges.insert({e.from, e.type, e.to});
    for (const WirePath& p : body.paths)
        for (const WireEdge& e : p.steps) {
            nodes.insert(e.from);
            nodes.insert(e.to);
            edges.insert({e.from, e.type, e.to});
        }
}

bool result_grounded(const ResultBody& body, const KnowledgeGraph& g, std::string* why) {
    std::set<NodeId> nodes;
    std::set<std::tuple<NodeId, std::string, NodeId>> edges;
    add_result_view(body, nodes, edges);
    for (const NodeId& n : nodes) {
        if (!g.has_node(n)) {
            if (why) *why = "node " + n + " not present in cited graph version";
            return false;
        }
    }
    for (const auto& [from, type, to] : edges) {
        bool found = false;
        for (const EdgeId& eid : g.out_edges(from)) {
            const Edge& e = g.edge(eid);
            if (e.type == type && e.to == to) {
                found = true;
                break;
            }
        }
        if (!found) {
            if (why) *why = "edge " + from + " -[" + type + "]-> " + to +
                            " not present in cited graph version";
            return false;
        }
    }
    return true;
}

namespace {

void view_of(const ResultBody& body, EntryVerdict& v) {
    add_result_view(body, v.nodes, v.edges);
}

bool grounded_in(const ResultBody& body, const KnowledgeGraph& g, std::string& why) {
    return result_grounded(body, g, &why);
}

}  // namespace

ReplayReport replay(const AuditLog& log, const KnowledgeGraph& base, const GraphSchema& schema,
                    const KeyRing& ring, const EmbeddingProvider& embedder,
                    const ExecutionLimits& limits) {
    ReplayReport report;
    GraphStore store(base, schema, embedder);
    bool chain_broken = false;

    for (const AuditEntry& entry : log.entries()) {
        EntryVerdict v;
        v.seq = entry.seq;
        auto mismatch = [&](const std::string& note) {
            v.status = ReplayStatus::Mismatch;
            v.note = note;
        };

        if (chain_broken) {
            mismatch("cascaded from earlier version chain break");
            report.entries.push_back(std::move(v));
            report.all_match = false;
            continue;
        }
        if (sha256_hex(entry.result) != entry.digest) {
            mismatch("digest does not match stored result");
            report.entries.push_back(std::move(v));
            report.all_match = false;
            continue;
        }
        if (entry.version_before != store.head_version()) {
            mismatch("version chain break");
            chain_broken = true;
            report.entries.push_back(std::move(v));
            report.all_match = false;
            continue;
        }

        if (entry.kind == "error") {
            if (entry.version_after != entry.version_before)
                mismatch("error entry must not advance the version");
            else if (!starts_with(trim(entry.result), "ERROR"))
                mismatch("error entry does not record an error payload");
            report.entries.push_back(std::move(v));
            report.all_match &= v.status == ReplayStatus::Match;
            continue;
        }

        Opened opened = open_envelope(entry.envelope, ring);
        if (!opened.ok) {
            mismatch("envelope: " + opened.reason);
            report.entries.push_back(std::move(v));
            report.all_match = false;
            continue;
        }
        Message m;
        try {
            m = parse(opened.body);
        } catch (const ParseError& e) {
            mismatch(std::string("unparseable body: ") + e.what());
            report.entries.push_back(std::move(v));
            report.all_match = false;
            continue;
        }

        if (const auto* op = std::get_if<TraverseOp>(&m.payload)) {
            ConversationContext ctx;
            ctx.id = m.conversation;
            Payload recomputed =
                run_traverse(store.current(), schema, *op, ctx, embedder, limits);
            const std::string text = payload_text(recomputed);
            if (entry.version_after != entry.version_before)
                mismatch("traversal entry must not advance the version");
            else if (sha256_hex(text) != entry.digest)
                mismatch("recomputed result differs from recorded result");
            else if (const auto* rb = std::get_if<ResultBody>(&recomputed))
                view_of(*rb, v);
        } else if (const auto* rb = std::get_if<ResultBody>(&m.payload)) {
            std::string why;
            if (entry.result != payload_text(m.payload))
                mismatch("recorded result differs from message payload");
            else if (entry.version_after != entry.version_before)
                mismatch("result entry must not advance the version");
            else if (!grounded_in(*rb, store.current(), why))
                mismatch(why);
            else
                view_of(*rb, v);
        } else if (const auto* ub = std::get_if<UpdateBody>(&m.payload)) {
            GraphDelta delta = delta_from_wire(*ub);
            auto violations = store.validate(delta);
            if (violations.empty()) {
                ProvenanceTag prov;
                prov.author = m.sender;
                prov.source_message = m.conversation + ":" + std::to_string(entry.seq);
                prov.timestamp = entry.ts;
                store.apply(delta, prov, store.head_version());
                const std::string text = payload_text(Payload{update_receipt(*ub)});
                if (entry.version_after != store.head_version())
                    mismatch("version after update does not match recorded value");
                else if (sha256_hex(text) != entry.digest)
                    mismatch("recomputed update receipt differs");
                else
                    view_of(update_receipt(*ub), v);
            } else {
                const std::string text = payload_text(Payload{update_rejection(violations[0])});
                if (entry.version_after != entry.version_before)
                    mismatch("rejected update must not advance the version");
                else if (sha256_hex(text) != entry.digest)
                    mismatch("recomputed rejection differs");
            }
        } else {
            // Error payload on the wire (REJECT or negative INFORM).
            if (entry.result != payload_text(m.payload))
                mismatch("recorded result differs from message payload");
            else if (entry.version_after != entry.version_before)
                mismatch("error result must not advance the version");
        }

        report.all_match &= v.status == ReplayStatus::Match;
        report.entries.push_back(std::move(v));
    }

    report.final_version = store.head_version();
    return report;
}

ClaimVerdict verify_claim(const AuditLog& log, const KnowledgeGraph& base,
                          const GraphSchema& schema, const KeyRing& ring,
                          const EmbeddingProvider& embedder, const ClaimSpec& claim,
                          const std::vector<std::uint64_t>& trace,
                          const ExecutionLimits& limits) {
    ClaimVerdict out;
    ReplayReport report = replay(log, base, schema, ring, embedder, limits);

    std::set<NodeId> nodes;
    std::set<std::tuple<NodeId, std::string, NodeId>> edges;
    for (std::uint64_t seq : trace) {
        const EntryVerdict* found = nullptr;
        for (const EntryVerdict& v : report.entries)
            if (v.seq == seq) found = &v;
        if (!found || found->status != ReplayStatus::Match) {
            out.kind = ClaimKind::FalsifiedTrace;
            out.falsified_seq = seq;
            return out;
        }
        nodes.insert(found->nodes.begin(), found->nodes.end());
        edges.insert(found->edges.begin(), found->edges.end());
    }

    for (const NodeId& n : claim.nodes)
        if (!nodes.count(n)) out.missing.push_back(n);
    for (const auto& [from, type, to] : claim.edges)
        if (!edges.count({from, type, to}))
            out.missing.push_back(from + " -[" + type + "]-> " + to);
    out.kind = out.missing.empty() ? ClaimKind::Grounded : ClaimKind::Fabricated;
    return out;
}

}  // namespace g2cp
