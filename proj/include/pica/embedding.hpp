#pragma once
// Embedding-space primitives: cosine similarity, batch z-normalization,
// interpolated quantiles, and the quantile tier partition used by the
// curriculum sampler.

#include <span>
#include <vector>

#include "pica/matrix.hpp"

namespace pica {

// Norms at or below this count as degenerate input.
inline constexpr double kZeroNormEps = 1e-300;

// Standard deviations at or below this are treated as zero variance:
// z_normalize then returns all zeros instead of dividing.
inline constexpr double kZeroVarianceEps = 1e-12;

// cos(a, b). Errors on dimension mismatch, empty input, or zero-norm input.
double cosine_sim(std::span<const double> a, std::span<const double> b);

// (x - mean) / std with the population standard deviation (divide by n).
// Zero-variance input maps to all zeros. Errors on empty input.
Vec z_normalize(std::span<const double> values);

// Linear-interpolation quantile of an ascending-sorted sample, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

// Quantile partition of scores into `tier_count` tiers. Tier 1 holds the
// highest scores (hardest), tier K the lowest. Edges are the interpolated
// quantiles at 0, 1/K, ..., 1; index i lands in the largest interval j with
// scores[i] >= edges[j-1], i.e. ties on an edge go to the harder tier.
struct TierPartition {
  Vec edges;                             // tier_count + 1 ascending values
  std::vector<int> tier_of;              // per input index, 1..tier_count
  std::vector<std::vector<int>> members; // members[t-1], input order preserved
};

TierPartition partition_tiers(std::span<const double> scores, int tier_count);

}  // namespace pica
