#include "pica/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pica/embedding.hpp"
#include "pica/rng.hpp"

namespace pica {

double schedule_alpha(double rho, const CurriculumConfig& cfg) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("schedule_alpha: rho outside [0, 1]");
  }
  const double alpha = cfg.schedule ? cfg.schedule(rho) : cfg.schedule_slope * rho;
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("schedule_alpha: schedule left [0, 1]");
  }
  return alpha;
}

std::array<double, kCurriculumTiers> target_ratios(
    const std::array<double, kCurriculumTiers>& base, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("target_ratios: alpha outside [0, 1]");
  }
  double base_sum = 0.0;
  for (double r : base) {
    if (r < 0.0) throw std::invalid_argument("target_ratios: negative base ratio");
    base_sum += r;
  }
  if (base_sum <= 0.0) {
    throw std::invalid_argument("target_ratios: base ratios sum to zero");
  }
  // Shift alpha mass from the easy share to the hard share, clamp, normalize.
  std::array<double, kCurriculumTiers> shifted{
      std::max(0.0, base[0] - alpha), base[1], base[2] + alpha};
  double sum = shifted[0] + shifted[1] + shifted[2];
  for (double& r : shifted) r /= sum;
  return shifted;
}

SamplerOutput sample_curriculum(std::span<const double> h,
                                std::span<const double> q, double rho,
                                const CurriculumConfig& cfg, std::uint64_t seed) {
  if (h.size() != q.size()) {
    throw std::invalid_argument("sample_curriculum: h/q size mismatch");
  }
  if (h.size() < kCurriculumTiers) {
    throw std::invalid_argument("sample_curriculum: fewer regions than tiers");
  }
  if (cfg.sample_budget < 1) {
    throw std::invalid_argument("sample_curriculum: budget < 1");
  }
  if (cfg.quality_percentile < 0.0 || cfg.quality_percentile > 1.0) {
    throw std::invalid_argument("sample_curriculum: quality percentile outside [0, 1]");
  }
  if (cfg.penalty < 0.0) {
    throw std::invalid_argument("sample_curriculum: negative penalty");
  }

  const std::size_t n = h.size();
  const Vec h_hat = z_normalize(h);
  const Vec q_hat = z_normalize(q);

  SamplerOutput out;
  out.alpha = schedule_alpha(rho, cfg);
  out.ratios_used = target_ratios(cfg.base_ratios, out.alpha);
  out.penalized.assign(n, 0);

  // Tier 1 = most ambiguous. Quality gate runs within each tier after the
  // partition, so flags never move a region across tiers.
  TierPartition part = partition_tiers(h_hat, kCurriculumTiers);
  if (cfg.quality_percentile > 0.0) {
    for (const auto& members : part.members) {
      if (members.empty()) continue;
      Vec tier_q;
      tier_q.reserve(members.size());
      for (int idx : members) tier_q.push_back(q_hat[idx]);
      std::sort(tier_q.begin(), tier_q.end());
      const double thr = quantile_sorted(tier_q, cfg.quality_percentile);
      for (int idx : members) {
        if (q_hat[idx] < thr) out.penalized[idx] = 1;
      }
    }
  }

  // Ratio order is (easy, medium, hard); tier order is (hard .. easy).
  auto pool_of = [&](int ratio_idx) -> const std::vector<int>& {
    return part.members[kCurriculumTiers - 1 - ratio_idx];
  };

  std::array<int, kCurriculumTiers> want{};
  int assigned = 0;
  for (int r = 0; r < kCurriculumTiers; ++r) {
    want[r] = static_cast<int>(std::floor(cfg.sample_budget * out.ratios_used[r]));
    assigned += want[r];
  }
  // Leftover budget goes to the hardest tier that still has unclaimed members.
  int remainder = cfg.sample_budget - assigned;
  while (remainder > 0) {
    bool placed = false;
    for (int r = kCurriculumTiers - 1; r >= 0; --r) {
      if (static_cast<int>(pool_of(r).size()) > want[r]) {
        ++want[r];
        --remainder;
        placed = true;
        break;
      }
    }
    if (!placed) break;
  }

  // Cap by pool size, then refill any shortfall hardest-first so the draw
  // degrades to "take everything" when the budget exceeds the region count.
  std::array<int, kCurriculumTiers> take{};
  int total = 0;
  for (int r = 0; r < kCurriculumTiers; ++r) {
    take[r] = std::min(want[r], static_cast<int>(pool_of(r).size()));
    total += take[r];
  }
  int deficit = std::min<int>(cfg.sample_budget, static_cast<int>(n)) - total;
  while (deficit > 0) {
    bool placed = false;
    for (int r = kCurriculumTiers - 1; r >= 0; --r) {
      const int spare = static_cast<int>(pool_of(r).size()) - take[r];
      if (spare > 0) {
        const int add = std::min(spare, deficit);
        take[r] += add;
        deficit -= add;
        placed = true;
        if (deficit == 0) break;
      }
    }
    if (!placed) break;
  }

  for (int r = 0; r < kCurriculumTiers; ++r) {
    const std::vector<int>& pool = pool_of(r);
    std::vector<int> clear, flagged;
    for (int idx : pool) {
      (out.penalized[idx] ? flagged : clear).push_back(idx);
    }
    const int tier = kCurriculumTiers - r;  // engine keyed by tier number
    if (cfg.within_tier == CurriculumConfig::WithinTier::random) {
      Engine rng = make_engine(derive_seed(seed, stream::sampler, tier));
      shuffle_values(rng, clear);
      shuffle_values(rng, flagged);
    } else {
      auto by_quality = [&](int a, int b) {
        if (q_hat[a] != q_hat[b]) return q_hat[a] > q_hat[b];
        return a < b;
      };
      std::sort(clear.begin(), clear.end(), by_quality);
      std::sort(flagged.begin(), flagged.end(), by_quality);
    }
    // Flagged members only fill seats the unflagged pool cannot.
    for (int k = 0; k < take[r]; ++k) {
      const int idx = k < static_cast<int>(clear.size())
                          ? clear[k]
                          : flagged[k - clear.size()];
      out.selected.push_back(idx);
      if (out.penalized[idx]) ++out.penalized_selected;
    }
    out.per_tier_counts[r] = take[r];
  }
  return out;
}

}  // namespace pica
