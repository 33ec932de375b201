#pragma once

#include <array>
#include <string>

#include "g2cp/config.hpp"

namespace g2cp {

using Embedding = std::array<double, kEmbeddingDim>;

// Produces fixed-width vectors for fuzzy name matching. Implementations must
// be deterministic: equal inputs yield equal vectors.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual Embedding embed(const std::string& text) const = 0;
};

// Default provider: hashed character-trigram bag, L2-normalised.
// Text is lowercased and runs of whitespace/underscores collapse to a single
// space before trigram extraction, so "pressure_drop" and "Pressure drop"
// embed identically.
class TrigramEmbedder final : public EmbeddingProvider {
public:
    Embedding embed(const std::string& text) const override;

    static std::string normalize(const std::string& text);
};

double cosine(const Embedding& a, const Embedding& b);

}  // namespace g2cp
