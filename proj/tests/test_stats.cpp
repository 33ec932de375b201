#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "g2cp/errors.hpp"
#include "g2cp/stats.hpp"
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

}  // namespace

TEST_CASE("summary statistics match the all-pairs oracle on random graphs") {
    std::mt19937_64 rng(5551);
    for (int iter = 0; iter < 80; ++iter) {
        std::uniform_int_distribution<std::size_t> nd(1, 24);
        const std::size_t n = nd(rng);
        std::uniform_int_distribution<std::size_t> md(0, n * (n - 1) / 2);
        const oracle::PlainGraph pg = n < 2
                                          ? oracle::PlainGraph{{oracle::node_name(0)}, {}}
                                          : oracle::random_graph(rng, n, md(rng), {"link"});
        const KnowledgeGraph g = oracle::to_graph(pg, embedder());
        const oracle::SummaryOracle want = oracle::summarize(pg);
        const GraphStats got = compute_stats(g);

        CAPTURE(iter);
        CHECK(got.node_count == pg.node_ids.size());
        CHECK(got.edge_count == pg.edges.size());
        CHECK(got.density == doctest::Approx(want.density).epsilon(1e-12));
        CHECK(got.avg_out_degree == doctest::Approx(want.avg_out).epsilon(1e-12));
        CHECK(got.avg_total_degree == doctest::Approx(want.avg_total).epsilon(1e-12));
        CHECK(got.diameter == want.diameter);
        CHECK(got.fully_connected == want.fully_connected);
    }
}

TEST_CASE("an empty graph has no statistics") {
    CHECK_THROWS_AS(compute_stats(KnowledgeGraph{}), EmptyGraph);
}

TEST_CASE("a single node is trivially connected with diameter zero") {
    KnowledgeGraph g;
    Node n;
    n.id = "N:only";
    n.type = "N";
    n.display_name = "only";
    g.add_node(std::move(n));
    const GraphStats s = compute_stats(g);
    CHECK(s.node_count == 1);
    CHECK(s.edge_count == 0);
    CHECK(s.density == 0);
    CHECK(s.diameter == 0);
    CHECK(s.fully_connected);
}

TEST_CASE("the plant fixture reports its documented shape") {
    const GraphSchema schema = load_schema_file(fx("turbomatic_core.schema.json"));
    const KnowledgeGraph g =
        load_graph_file(fx("turbomatic_core.graph.jsonl"), schema, embedder());
    const GraphStats s = compute_stats(g);
    CHECK(s.node_count == 36);
    CHECK(s.edge_count == 53);
    CHECK(s.density == doctest::Approx(53.0 / (36.0 * 35.0)).epsilon(1e-12));
    CHECK(s.avg_out_degree == doctest::Approx(53.0 / 36.0).epsilon(1e-12));
    CHECK(s.avg_total_degree == doctest::Approx(2.0 * 53.0 / 36.0).epsilon(1e-12));
    CHECK(s.diameter == 4);
    CHECK(!s.fully_connected);  // directed reachability is partial by design
}

TEST_CASE("regular trees have the advertised child layout") {
    const KnowledgeGraph g = make_regular_tree(13, 3, embedder());
    CHECK(g.nodes().size() == 13);
    CHECK(g.edges().size() == 12);  // every node but the root has one parent
    // Node 0 points to 1, 2, 3; node 1 to 4, 5, 6; node 4 has none (13 nodes).
    CHECK(g.out_edges(oracle::node_name(0)).size() == 3);
    CHECK(g.out_edges(oracle::node_name(1)).size() == 3);
    CHECK(g.out_edges(oracle::node_name(4)).size() == 0);
    bool found = false;
    for (const EdgeId& eid : g.out_edges(oracle::node_name(1)))
        if (g.edge(eid).to == oracle::node_name(5)) found = true;
    CHECK(found);

    const GraphStats s = compute_stats(g);
    CHECK(s.diameter == 2);  // longest root-to-leaf run in this small tree
    CHECK(!s.fully_connected);
}

TEST_CASE("synthetic random graphs are deterministic in the seed") {
    const KnowledgeGraph a = make_random_graph(30, 60, 42, embedder());
    const KnowledgeGraph b = make_random_graph(30, 60, 42, embedder());
    const KnowledgeGraph c = make_random_graph(30, 60, 43, embedder());
    CHECK(a.structurally_equal(b));
    CHECK(!a.structurally_equal(c));
    CHECK(a.nodes().size() == 30);
    CHECK(a.edges().size() == 60);
    for (const auto& [id, e] : a.edges()) CHECK(e.from != e.to);
}

TEST_CASE("shuffled trees hold the same content as their canonical twin") {
    const KnowledgeGraph plain = make_regular_tree(40, 2, embedder());
    const KnowledgeGraph shuffled = make_shuffled_tree(40, 2, 7, embedder());
    CHECK(plain.structurally_equal(shuffled));
    const GraphStats a = compute_stats(plain);
    const GraphStats b = compute_stats(shuffled);
    CHECK(a.node_count == b.node_count);
    CHECK(a.edge_count == b.edge_count);
    CHECK(a.diameter == b.diameter);
}

TEST_CASE("the expansion bench observes the exact layer bound") {
    const std::vector<std::size_t> sizes = {1000, 10000};
    const std::vector<int> branchings = {2, 4};
    const std::vector<int> depths = {1, 2, 3};
    const auto rows = bench_traversal(sizes, branchings, depths, embedder(), 99);
    REQUIRE(rows.size() == sizes.size() * branchings.size() * depths.size());

    for (const BenchRow& row : rows) {
        CAPTURE(row.n);
        CAPTURE(row.r);
        CAPTURE(row.h);
        // One source, one via type: the bound collapses to r^h.
        std::size_t want = 1;
        for (int i = 0; i < row.h; ++i) want *= static_cast<std::size_t>(row.r);
        CHECK(row.bound == want);
        CHECK(row.expanded_nodes == want);
        CHECK(row.order_independent);
    }

    // The expansion count depends on r and h only, never on n.
    for (const BenchRow& a : rows)
        for (const BenchRow& b : rows)
            if (a.r == b.r && a.h == b.h) CHECK(a.expanded_nodes == b.expanded_nodes);
}
