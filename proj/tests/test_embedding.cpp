#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "g2cp/embedding.hpp"

using namespace g2cp;

namespace {
double norm(const Embedding& e) {
    double s = 0;
    for (double v : e) s += v * v;
    return std::sqrt(s);
}
}  // namespace

TEST_CASE("embeddings are deterministic and unit length") {
    const TrigramEmbedder emb;
    const Embedding a = emb.embed("pressure drop");
    const Embedding b = emb.embed("pressure drop");
    CHECK(a == b);
    CHECK(norm(a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm(emb.embed("x")) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the zero-trigram input embeds to the zero vector") {
    const TrigramEmbedder emb;
    CHECK(norm(emb.embed("")) == 0.0);
}

TEST_CASE("normalization collapses case, whitespace runs and underscores") {
    const TrigramEmbedder emb;
    CHECK(TrigramEmbedder::normalize("Pressure   Drop") == "pressure drop");
    CHECK(TrigramEmbedder::normalize("pressure_drop") == "pressure drop");
    CHECK(emb.embed("Pressure_Drop") == emb.embed("pressure drop"));
    CHECK(emb.embed("  padded  ") == emb.embed("padded"));
}

TEST_CASE("cosine behaves as an inner product on unit vectors") {
    const TrigramEmbedder emb;
    const Embedding a = emb.embed("bearing wear");
    CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const Embedding b = emb.embed("hydraulic circuit");
    CHECK(cosine(a, b) == cosine(b, a));
    CHECK(cosine(a, b) <= 1.0 + 1e-12);
    CHECK(cosine(a, b) >= -1.0 - 1e-12);
}

TEST_CASE("near-identical names score far above unrelated ones") {
    const TrigramEmbedder emb;
    const double close = cosine(emb.embed("seal replacement procedure"),
                                emb.embed("seal replacement procedures"));
    const double far = cosine(emb.embed("seal replacement procedure"),
                              emb.embed("quarterly budget meeting"));
    CHECK(close > 0.9);
    CHECK(far < close);
    CHECK(far < 0.85);
}
