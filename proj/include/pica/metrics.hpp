#pragma once
// Evaluation metrics: retrieval quality, per-domain aggregation, the
// alignment-invariance gap between clean and shifted logit vectors, gradient
// conflict between consecutive steps, and ambiguity stability under shift.

#include <optional>
#include <span>
#include <vector>

#include "pica/matrix.hpp"
#include "pica/negatives.hpp"
#include "pica/projection.hpp"
#include "pica/world.hpp"

namespace pica {

// |delta h| below this counts a region as shift-stable.
inline constexpr double kStableDeltaH = 0.05;

// Mean over the severity levels of one shifted domain. Errors on empty input.
double domain_mean(std::span<const double> severity_scores);

// Mean over shifted-domain means. Errors on empty input.
double overall_mean(std::span<const double> domain_means);

// 1 - cos between a region's clean and shifted logit vectors. Zero for
// identical vectors; errors on mismatch or zero-norm input.
double ai_gap(std::span<const double> logits_clean,
              std::span<const double> logits_shifted);

// Cosine between consecutive gradient vectors; nullopt when either gradient
// is (near-)zero, in which case the value is recorded as undefined rather
// than fabricated.
std::optional<double> gradient_conflict_score(std::span<const double> g_now,
                                              std::span<const double> g_prev);

struct StabilityRecord {
  int region_id = 0;
  double q_clean = 0.0;
  double h_clean = 0.0;
  double h_shifted = 0.0;
  double delta_h = 0.0;  // h_shifted - h_clean
};

// Pairs clean and shifted proxy scores by region id (inputs must list the
// same ids in the same order; anything else is an error).
std::vector<StabilityRecord> stability_records(
    std::span<const int> ids_clean, std::span<const ProxyScores> clean,
    std::span<const int> ids_shifted, std::span<const ProxyScores> shifted);

enum class SplitFilter { base, novel, all };

// Percentage of filtered regions whose argmax cosine against the prototypes
// (all categories, ties to the lowest id) matches their label. Regions must
// be labeled (evaluation mode); empty filtered set is an error.
double retrieval_score(const std::vector<RegionSample>& regions,
                       const ProjectionHead& head, const Matrix& prototypes,
                       SplitFilter filter);

}  // namespace pica
