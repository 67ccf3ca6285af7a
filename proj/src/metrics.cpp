#include "pica/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "pica/embedding.hpp"
#include "pica/kernels.hpp"

namespace pica {

double domain_mean(std::span<const double> severity_scores) {
  if (severity_scores.empty()) {
    throw std::invalid_argument("domain_mean: empty input");
  }
  double acc = 0.0;
  for (double s : severity_scores) acc += s;
  return acc / static_cast<double>(severity_scores.size());
}

double overall_mean(std::span<const double> domain_means) {
  if (domain_means.empty()) {
    throw std::invalid_argument("overall_mean: empty input");
  }
  double acc = 0.0;
  for (double s : domain_means) acc += s;
  return acc / static_cast<double>(domain_means.size());
}

double ai_gap(std::span<const double> logits_clean,
              std::span<const double> logits_shifted) {
  return 1.0 - cosine_sim(logits_clean, logits_shifted);
}

std::optional<double> gradient_conflict_score(std::span<const double> g_now,
                                              std::span<const double> g_prev) {
  if (g_now.size() != g_prev.size()) {
    throw std::invalid_argument("gradient_conflict_score: size mismatch");
  }
  if (g_now.empty()) {
    throw std::invalid_argument("gradient_conflict_score: empty input");
  }
  const double n_now = std::sqrt(kernels::dot(g_now.data(), g_now.data(), g_now.size()));
  const double n_prev =
      std::sqrt(kernels::dot(g_prev.data(), g_prev.data(), g_prev.size()));
  if (n_now <= kZeroNormEps || n_prev <= kZeroNormEps) return std::nullopt;
  return kernels::dot(g_now.data(), g_prev.data(), g_now.size()) / (n_now * n_prev);
}

std::vector<StabilityRecord> stability_records(
    std::span<const int> ids_clean, std::span<const ProxyScores> clean,
    std::span<const int> ids_shifted, std::span<const ProxyScores> shifted) {
  if (ids_clean.size() != clean.size() || ids_shifted.size() != shifted.size()) {
    throw std::invalid_argument("stability_records: id/score size mismatch");
  }
  if (ids_clean.size() != ids_shifted.size()) {
    throw std::invalid_argument("stability_records: set size mismatch");
  }
  std::vector<StabilityRecord> out(ids_clean.size());
  for (std::size_t i = 0; i < ids_clean.size(); ++i) {
    if (ids_clean[i] != ids_shifted[i]) {
      throw std::invalid_argument("stability_records: region id mismatch");
    }
    StabilityRecord& r = out[i];
    r.region_id = ids_clean[i];
    r.q_clean = clean[i].q;
    r.h_clean = clean[i].h;
    r.h_shifted = shifted[i].h;
    r.delta_h = shifted[i].h - clean[i].h;
  }
  return out;
}

double retrieval_score(const std::vector<RegionSample>& regions,
                       const ProjectionHead& head, const Matrix& prototypes,
                       SplitFilter filter) {
  if (prototypes.rows == 0) {
    throw std::invalid_argument("retrieval_score: no prototypes");
  }
  Vec proto_norms;
  kernels::row_norms(prototypes, proto_norms);
  for (std::size_t c = 0; c < prototypes.rows; ++c) {
    if (proto_norms[c] <= kZeroNormEps) {
      throw std::invalid_argument("retrieval_score: zero-norm prototype");
    }
  }

  std::size_t considered = 0, correct = 0;
  for (const RegionSample& r : regions) {
    if (filter == SplitFilter::base && r.split != Split::base) continue;
    if (filter == SplitFilter::novel && r.split != Split::novel) continue;
    if (!r.category) {
      throw std::invalid_argument("retrieval_score: unlabeled region");
    }
    const Vec w = project(head, r.feature);
    const double wn = std::sqrt(kernels::dot(w.data(), w.data(), w.size()));
    if (wn <= kZeroNormEps) {
      throw std::invalid_argument("retrieval_score: zero-norm pseudo-word");
    }
    // Strictly-greater scan: ties resolve to the lowest category id.
    int arg = 0;
    double best = -2.0;
    for (std::size_t c = 0; c < prototypes.rows; ++c) {
      const double cos =
          kernels::dot(w.data(), prototypes.row(c), w.size()) / (wn * proto_norms[c]);
      if (cos > best) {
        best = cos;
        arg = static_cast<int>(c);
      }
    }
    ++considered;
    if (arg == *r.category) ++correct;
  }
  if (considered == 0) {
    throw std::invalid_argument("retrieval_score: empty filtered set");
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(considered);
}

}  // namespace pica
