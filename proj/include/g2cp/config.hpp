#pragma once

#include <cstdint>

namespace g2cp {

// Embedding space for fuzzy name resolution.
inline constexpr int kEmbeddingDim = 64;
inline constexpr double kSimilarityThreshold = 0.85;

// Trust recurrence: score' = alpha * score + (1 - alpha) * [verified].
inline constexpr double kTrustAlpha = 0.9;
inline constexpr double kTrustInitial = 1.0;
inline constexpr double kReviewThreshold = 0.5;

// Co-occurrence pattern mining over work-order timestamps.
inline constexpr std::int64_t kCooccurrenceWindowSecs = 48 * 3600;
inline constexpr int kDefaultMinSupport = 10;
inline constexpr double kDefaultMinRatio = 0.6;

// Path enumeration cap for PATHS results.
inline constexpr int kMaxPathsPerResult = 64;

}  // namespace g2cp
