// Operator entry point: load fixtures, run scenarios, replay and verify audit
// logs, run the traversal bench. Output is line-oriented; --format=table adds
// aligned columns for human eyes.
//
// Exit codes: 0 success, 1 usage, 2 input parse failure, 3 verification
// failure, 4 scenario assertion failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>

#include "g2cp/agents.hpp"
#include "g2cp/audit.hpp"
#include "g2cp/commitment.hpp"
#include "g2cp/stats.hpp"
#include "g2cp/strutil.hpp"

namespace fs = std::filesystem;
using namespace g2cp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitVerify = 3;
constexpr int kExitAssert = 4;

// Relative paths fall back to $G2CP_FIXTURE_DIR when they do not resolve
// from the working directory.
std::string resolve_path(const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute() || fs::exists(p)) return p;
    if (const char* root = std::getenv("G2CP_FIXTURE_DIR")) {
        const fs::path candidate = fs::path(root) / p;
        if (fs::exists(candidate)) return candidate.string();
    }
    return p;
}

std::string sibling(const std::string& anchor, const std::string& name) {
    return (fs::path(anchor).parent_path() / name).string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct LimitFlags {
    long timeout_ms = -1;
    long max_nodes = -1;
    long frontier_cap = -1;

    ExecutionLimits apply() const {
        ExecutionLimits l;
        if (timeout_ms >= 0) l.timeout_ms = timeout_ms;
        if (max_nodes >= 0) l.max_result_nodes = static_cast<std::size_t>(max_nodes);
        if (frontier_cap >= 0) l.frontier_cap = static_cast<std::size_t>(frontier_cap);
        return l;
    }
};

void add_limit_flags(CLI::App* cmd, LimitFlags& f) {
    cmd->add_option("--limits-timeout-ms", f.timeout_ms, "traversal time budget");
    cmd->add_option("--limits-max-nodes", f.max_nodes, "explored-node ceiling");
    cmd->add_option("--limits-frontier-cap", f.frontier_cap, "per-layer frontier cap");
}

const char* verdict_name(ClaimKind k) {
    switch (k) {
        case ClaimKind::Grounded: return "Grounded";
        case ClaimKind::Fabricated: return "Fabricated";
        case ClaimKind::FalsifiedTrace: return "FalsifiedTrace";
    }
    return "?";
}

// ---------------------------------------------------------------------------

int cmd_load(const std::string& graph_path, const std::string& schema_path,
             const std::string& format) {
    const TrigramEmbedder embedder;
    GraphSchema schema;
    KnowledgeGraph graph;
    try {
        schema = load_schema_file(resolve_path(schema_path));
        graph = load_graph_file(resolve_path(graph_path), schema, embedder);
    } catch (const Error& e) {
        std::cerr << "parse failure: " << e.what() << "\n";
        return kExitParse;
    }
    const GraphStats s = compute_stats(graph);
    if (format == "table") {
        std::cout << std::left << std::setw(18) << "nodes" << s.node_count << "\n"
                  << std::setw(18) << "edges" << s.edge_count << "\n"
                  << std::setw(18) << "density" << s.density << "\n"
                  << std::setw(18) << "avg_out_degree" << s.avg_out_degree << "\n"
                  << std::setw(18) << "avg_total_degree" << s.avg_total_degree << "\n"
                  << std::setw(18) << "diameter" << s.diameter
                  << (s.fully_connected ? "" : " (largest finite; graph not strongly connected)")
                  << "\n";
    } else {
        std::cout << "NODES " << s.node_count << "\n"
                  << "EDGES " << s.edge_count << "\n"
                  << "DENSITY " << format_double(s.density) << "\n"
                  << "AVG_OUT_DEGREE " << format_double(s.avg_out_degree) << "\n"
                  << "AVG_TOTAL_DEGREE " << format_double(s.avg_total_degree) << "\n"
                  << "DIAMETER " << s.diameter << (s.fully_connected ? "" : " UNREACHED")
                  << "\n";
    }
    return kExitOk;
}

int cmd_run(const std::string& scenario_path, const LimitFlags& limits,
            bool print_transcript, const std::string& log_out,
            const std::string& claim_out) {
    const TrigramEmbedder embedder;
    Scenario sc;
    RunReport rep;
    try {
        sc = load_scenario_file(resolve_path(scenario_path));
        rep = run_scenario(sc, embedder, limits.apply());
    } catch (const AssertionFailure& e) {
        std::cerr << "assertion failure: " << e.what() << "\n";
        return kExitAssert;
    } catch (const Error& e) {
        std::cerr << "parse failure: " << e.what() << "\n";
        return kExitParse;
    }

    if (!log_out.empty()) rep.log.save_file(log_out);
    if (!claim_out.empty()) {
        nlohmann::json j;
        j["nodes"] = nlohmann::json::array();
        for (const NodeId& n : rep.claim.nodes) j["nodes"].push_back(n);
        j["edges"] = nlohmann::json::array();
        for (const auto& [f, t, to] : rep.claim.edges)
            j["edges"].push_back(f + " -[" + t + "]-> " + to);
        j["trace"] = rep.trace;
        std::ofstream out(claim_out);
        out << j.dump(2) << "\n";
    }

    if (print_transcript) {
        for (std::size_t i = 0; i < rep.transcript.size(); ++i) {
            std::cout << "MESSAGE " << (i + 1) << "\n"
                      << serialize(rep.transcript[i]) << "END\n";
        }
    }
    std::cout << "SCENARIO " << sc.name << "\n"
              << "INTENT " << rep.intent << "\n"
              << "MESSAGES " << rep.message_count << "\n"
              << "TOKENS_G2CP " << rep.protocol_tokens << "\n";
    try {
        const long long baseline =
            ftma_token_total(read_file(sc.dir + "/" + sc.ftma_file));
        std::cout << "TOKENS_BASELINE " << baseline << "\n";
        if (baseline > 0)
            std::cout << "TOKEN_RATIO "
                      << format_double(static_cast<double>(rep.protocol_tokens) / baseline)
                      << "\n";
    } catch (const Error&) {
        std::cout << "TOKENS_BASELINE unavailable\n";
    }
    for (std::size_t i = 0; i < rep.answer_nodes.size(); ++i) {
        std::cout << "ANSWER " << rep.answer_nodes[i];
        if (i < rep.answer_confidence.size())
            std::cout << " " << format_double(rep.answer_confidence[i]);
        std::cout << "\n";
    }
    std::cout << "VERDICT " << verdict_name(rep.verdict.kind) << "\n";
    std::size_t pending = 0;
    for (const Commitment& c : rep.commitments) {
        std::cout << "COMMITMENT " << c.id << " " << to_string(c.kind) << " " << c.debtor
                  << " -> " << c.creditor << " " << to_string(c.state) << "\n";
        if (c.state == CommitmentState::Pending) ++pending;
    }
    std::cout << "PENDING " << pending << "\n"
              << "ANSWER_TEXT " << rep.answer_text << "\n";

    try {
        assert_scenario(sc, rep);
    } catch (const AssertionFailure& e) {
        std::cerr << "assertion failure: " << e.what() << "\n";
        return kExitAssert;
    }
    std::cout << "ASSERT OK\n";
    return rep.verdict.kind == ClaimKind::Grounded ? kExitOk : kExitVerify;
}

KeyRing ring_for(const Roster& roster) {
    KeyRing ring;
    for (const auto& [id, spec] : roster.agents) ring.add_agent(id);
    return ring;
}

int cmd_replay(const std::string& log_path, const std::string& graph_path,
               const std::string& schema_path, std::string roster_path,
               const LimitFlags& limits) {
    const TrigramEmbedder embedder;
    AuditLog log;
    GraphSchema schema;
    KnowledgeGraph graph;
    Roster roster;
    try {
        log = AuditLog::load_file(resolve_path(log_path));
        schema = load_schema_file(resolve_path(schema_path));
        graph = load_graph_file(resolve_path(graph_path), schema, embedder);
        if (roster_path.empty()) roster_path = sibling(resolve_path(graph_path), "roster.json");
        roster = load_roster_file(resolve_path(roster_path));
    } catch (const Error& e) {
        std::cerr << "parse failure: " << e.what() << "\n";
        return kExitParse;
    }
    const KeyRing ring = ring_for(roster);
    const ReplayReport rep = replay(log, graph, schema, ring, embedder, limits.apply());
    for (const EntryVerdict& v : rep.entries) {
        std::cout << "ENTRY " << v.seq << " "
                  << (v.status == ReplayStatus::Match ? "MATCH" : "MISMATCH");
        if (!v.note.empty()) std::cout << " " << v.note;
        std::cout << "\n";
    }
    std::cout << "FINAL_VERSION " << rep.final_version << "\n"
              << "REPLAY " << (rep.all_match ? "OK" : "FAIL") << "\n";
    return rep.all_match ? kExitOk : kExitVerify;
}

int cmd_verify(const std::string& claim_path, const std::string& log_path,
               const std::string& graph_path, const std::string& schema_path,
               std::string roster_path, const LimitFlags& limits) {
    const TrigramEmbedder embedder;
    AuditLog log;
    GraphSchema schema;
    KnowledgeGraph graph;
    Roster roster;
    ClaimSpec claim;
    std::vector<std::uint64_t> trace;
    try {
        log = AuditLog::load_file(resolve_path(log_path));
        schema = load_schema_file(resolve_path(schema_path));
        graph = load_graph_file(resolve_path(graph_path), schema, embedder);
        if (roster_path.empty()) roster_path = sibling(resolve_path(graph_path), "roster.json");
        roster = load_roster_file(resolve_path(roster_path));

        const nlohmann::json j = nlohmann::json::parse(read_file(resolve_path(claim_path)));
        for (const auto& n : j.value("nodes", nlohmann::json::array()))
            claim.nodes.insert(n.get<std::string>());
        for (const auto& e : j.value("edges", nlohmann::json::array())) {
            const std::string s = e.get<std::string>();
            const auto a = s.find(" -[");
            const auto b = s.find("]-> ");
            if (a == std::string::npos || b == std::string::npos)
                throw Error("bad edge spec in claim: " + s);
            claim.edges.insert({s.substr(0, a), s.substr(a + 3, b - a - 3), s.substr(b + 4)});
        }
        for (const auto& t : j.value("trace", nlohmann::json::array()))
            trace.push_back(t.get<std::uint64_t>());
    } catch (const Error& e) {
        std::cerr << "parse failure: " << e.what() << "\n";
        return kExitParse;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse failure: " << e.what() << "\n";
        return kExitParse;
    }
    const KeyRing ring = ring_for(roster);
    const ClaimVerdict v =
        verify_claim(log, graph, schema, ring, embedder, claim, trace, limits.apply());
    std::cout << "VERDICT " << verdict_name(v.kind) << "\n";
    for (const std::string& item : v.missing) std::cout << "MISSING " << item << "\n";
    if (v.kind == ClaimKind::FalsifiedTrace)
        std::cout << "FALSIFIED_ENTRY " << v.falsified_seq << "\n";
    return v.kind == ClaimKind::Grounded ? kExitOk : kExitVerify;
}

int cmd_bench(const std::vector<std::size_t>& sizes, const std::vector<int>& branchings,
              const std::vector<int>& depths, std::uint64_t seed, const std::string& format) {
    const TrigramEmbedder embedder;
    const std::vector<BenchRow> rows =
        bench_traversal(sizes, branchings, depths, embedder, seed);
    bool all_ok = true;
    if (format == "table") {
        std::cout << std::left << std::setw(9) << "n" << std::setw(4) << "r" << std::setw(4)
                  << "h" << std::setw(10) << "expanded" << std::setw(10) << "bound"
                  << std::setw(12) << "elapsed_ms" << "order\n";
        for (const BenchRow& row : rows)
            std::cout << std::setw(9) << row.n << std::setw(4) << row.r << std::setw(4)
                      << row.h << std::setw(10) << row.expanded_nodes << std::setw(10)
                      << row.bound << std::setw(12) << row.elapsed_ms
                      << (row.order_independent ? "stable" : "UNSTABLE") << "\n";
    } else {
        for (const BenchRow& row : rows)
            std::cout << "ROW " << row.n << " " << row.r << " " << row.h << " "
                      << row.expanded_nodes << " " << row.bound << " " << row.elapsed_ms
                      << " " << (row.order_independent ? "stable" : "UNSTABLE") << "\n";
    }
    for (const BenchRow& row : rows)
        if (row.expanded_nodes > row.bound || !row.order_independent) all_ok = false;
    std::cout << "BENCH " << (all_ok ? "OK" : "FAIL") << "\n";
    return all_ok ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-grounded agent communication runtime"};
    app.require_subcommand(1);
    std::string format = "plain";
    app.add_option("--format", format, "plain or table")
        ->check(CLI::IsMember({"plain", "table"}));

    auto* load = app.add_subcommand("load", "load a graph fixture and print statistics");
    std::string load_graph_path, load_schema_path;
    load->add_option("graph", load_graph_path, "graph jsonl file")->required();
    load->add_option("--schema", load_schema_path, "schema json file")->required();

    auto* run = app.add_subcommand("run", "run a scenario end to end");
    std::string run_scenario_path, run_log_out, run_claim_out;
    bool run_transcript = false;
    LimitFlags run_limits;
    run->add_option("scenario", run_scenario_path, "scenario json file")->required();
    run->add_flag("--transcript", run_transcript, "print every sealed message body");
    run->add_option("--log-out", run_log_out, "write the run's audit log here");
    run->add_option("--claim-out", run_claim_out, "write the run's claim json here");
    add_limit_flags(run, run_limits);

    auto* rep = app.add_subcommand("replay", "re-execute an audit log against a base graph");
    std::string rep_log, rep_graph, rep_schema, rep_roster;
    LimitFlags rep_limits;
    rep->add_option("log", rep_log, "audit log jsonl")->required();
    rep->add_option("--graph", rep_graph, "base graph jsonl")->required();
    rep->add_option("--schema", rep_schema, "schema json")->required();
    rep->add_option("--roster", rep_roster, "roster json (default: sibling of graph)");
    add_limit_flags(rep, rep_limits);

    auto* ver = app.add_subcommand("verify", "check a claim file against an audit log");
    std::string ver_claim, ver_log, ver_graph, ver_schema, ver_roster;
    LimitFlags ver_limits;
    ver->add_option("claim", ver_claim, "claim json file")->required();
    ver->add_option("--log", ver_log, "audit log jsonl")->required();
    ver->add_option("--graph", ver_graph, "base graph jsonl")->required();
    ver->add_option("--schema", ver_schema, "schema json")->required();
    ver->add_option("--roster", ver_roster, "roster json (default: sibling of graph)");
    add_limit_flags(ver, ver_limits);

    auto* bench = app.add_subcommand("bench", "expansion-bound bench over synthetic trees");
    std::vector<std::size_t> bench_sizes = {1000, 10000, 100000};
    std::vector<int> bench_branchings = {2, 4, 8};
    std::vector<int> bench_depths = {1, 2, 3};
    std::uint64_t bench_seed = 0;
    bench->add_option("--sizes", bench_sizes, "graph sizes");
    bench->add_option("--branchings", bench_branchings, "branching factors");
    bench->add_option("--depths", bench_depths, "traversal depths");
    bench->add_option("--seed", bench_seed, "insertion-order shuffle seed (0 disables)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (load->parsed()) return cmd_load(load_graph_path, load_schema_path, format);
        if (run->parsed())
            return cmd_run(run_scenario_path, run_limits, run_transcript, run_log_out,
                           run_claim_out);
        if (rep->parsed())
            return cmd_replay(rep_log, rep_graph, rep_schema, rep_roster, rep_limits);
        if (ver->parsed())
            return cmd_verify(ver_claim, ver_log, ver_graph, ver_schema, ver_roster,
                              ver_limits);
        if (bench->parsed())
            return cmd_bench(bench_sizes, bench_branchings, bench_depths, bench_seed, format);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitUsage;
}
