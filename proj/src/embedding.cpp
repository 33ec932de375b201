#include "g2cp/embedding.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>

namespace g2cp {
namespace {

std::uint64_t fnv1a(const char* data, std::size_t len) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::string TrigramEmbedder::normalize(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (c == '_' || std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

Embedding TrigramEmbedder::embed(const std::string& text) const {
    Embedding v{};
    const std::string norm = normalize(text);
    if (norm.empty()) return v;
    if (norm.size() < 3) {
        v[fnv1a(norm.data(), norm.size()) % kEmbeddingDim] += 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= norm.size(); ++i)
            v[fnv1a(norm.data() + i, 3) % kEmbeddingDim] += 1.0;
    }
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (double& x : v) x *= inv;
    }
    return v;
}

double cosine(const Embedding& a, const Embedding& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < kEmbeddingDim; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace g2cp
