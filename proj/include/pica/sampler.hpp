#pragma once
// Curriculum sampler. Given per-region ambiguity h and signal strength q it
// z-normalizes both, splits regions into three quantile tiers of normalized
// ambiguity (tier 1 = most ambiguous), flags the weakest-signal members of
// each tier (bottom quality_percentile of normalized q inside the tier), and
// draws a budget of regions per tier with ratios that shift from easy toward
// hard as training progresses.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pica {

inline constexpr int kCurriculumTiers = 3;

struct CurriculumConfig {
  double quality_percentile = 0.05;  // p_q; 0 disables the gate
  double penalty = 2.0;              // added to normalized ambiguity when flagged
  // Selection shares in (easy, medium, hard) order, before scheduling.
  std::array<double, kCurriculumTiers> base_ratios{0.33, 0.33, 0.33};
  int sample_budget = 128;           // regions drawn per step
  double schedule_slope = 2.0 / 3.0; // alpha = slope * rho
  // Optional replacement for the linear schedule; must map [0,1] -> [0,1].
  std::function<double(double)> schedule;

  enum class WithinTier { random, q_ranked };
  WithinTier within_tier = WithinTier::q_ranked;
};

// alpha(rho): progression-controlled shift from easy to hard mass.
// Errors if rho is outside [0, 1] or the result leaves [0, 1].
double schedule_alpha(double rho, const CurriculumConfig& cfg);

// (easy, medium, hard) after shifting alpha mass from easy to hard and
// renormalizing; shares are clamped at zero before normalization.
// Errors if base ratios are negative or sum to zero.
std::array<double, kCurriculumTiers> target_ratios(
    const std::array<double, kCurriculumTiers>& base, double alpha);

struct SamplerOutput {
  std::vector<int> selected;                    // region indices, easy block first
  std::array<int, kCurriculumTiers> per_tier_counts{};   // (easy, medium, hard)
  std::array<double, kCurriculumTiers> ratios_used{};    // (easy, medium, hard)
  double alpha = 0.0;
  int penalized_selected = 0;
  std::vector<char> penalized;                  // per input index
};

// One curriculum draw. h and q must have equal size >= 3; rho in [0, 1].
// Deterministic in (inputs, seed).
SamplerOutput sample_curriculum(std::span<const double> h,
                                std::span<const double> q, double rho,
                                const CurriculumConfig& cfg, std::uint64_t seed);

}  // namespace pica
