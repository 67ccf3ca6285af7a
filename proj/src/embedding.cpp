#include "pica/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pica/kernels.hpp"

namespace pica {

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("cosine_sim: empty input");
  }
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_sim: dimension mismatch");
  }
  const double na = std::sqrt(kernels::dot(a.data(), a.data(), a.size()));
  const double nb = std::sqrt(kernels::dot(b.data(), b.data(), b.size()));
  if (na <= kZeroNormEps || nb <= kZeroNormEps) {
    throw std::invalid_argument("cosine_sim: zero-norm input");
  }
  return kernels::dot(a.data(), b.data(), a.size()) / (na * nb);
}

Vec z_normalize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("z_normalize: empty input");
  const std::size_t n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  Vec out(n, 0.0);
  if (sd > kZeroVarianceEps) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (values[i] - mean) / sd;
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile_sorted: p outside [0, 1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

TierPartition partition_tiers(std::span<const double> scores, int tier_count) {
  if (tier_count < 1) throw std::invalid_argument("partition_tiers: tier_count < 1");
  const std::size_t n = scores.size();
  if (n < static_cast<std::size_t>(tier_count)) {
    throw std::invalid_argument("partition_tiers: fewer scores than tiers");
  }
  Vec sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());

  TierPartition part;
  part.edges.resize(tier_count + 1);
  for (int j = 0; j <= tier_count; ++j) {
    part.edges[j] = quantile_sorted(sorted, static_cast<double>(j) / tier_count);
  }
  part.tier_of.resize(n);
  part.members.assign(tier_count, {});
  for (std::size_t i = 0; i < n; ++i) {
    int interval = tier_count;
    while (interval > 1 && scores[i] < part.edges[interval - 1]) --interval;
    const int tier = tier_count + 1 - interval;
    part.tier_of[i] = tier;
    part.members[tier - 1].push_back(static_cast<int>(i));
  }
  return part;
}

}  // namespace pica
