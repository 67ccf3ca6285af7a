#pragma once
// Learnable projection head: w = W f + b maps visual features to text-space
// pseudo-words. The softmax temperature lives here too; it is optimized
// through its logarithm and clamped to [kTauMin, kTauMax] after each update.

#include <cstdint>
#include <string>

#include "pica/matrix.hpp"

namespace pica {

inline constexpr double kTauMin = 0.01;
inline constexpr double kTauMax = 1.0;
inline constexpr double kTauInit = 0.07;

struct ProjectionHead {
  Matrix W;        // d_t x d_v
  Vec b;           // d_t
  double log_tau = 0.0;

  int d_v() const { return static_cast<int>(W.cols); }
  int d_t() const { return static_cast<int>(W.rows); }
  double tau() const;
  void clamp_tau();
};

// Gaussian init scaled by 1/sqrt(d_v), zero bias, tau = kTauInit.
ProjectionHead init_head(int d_v, int d_t, std::uint64_t seed);

// Single-feature projection. Errors on dimension mismatch.
Vec project(const ProjectionHead& head, const Vec& f);

// Pseudo-words for a clean/augmented feature pair.
std::pair<Vec, Vec> project_pair(const ProjectionHead& head, const Vec& f_clean,
                                 const Vec& f_aug);

// Batched projection: one row per row of F.
Matrix project_batch(const ProjectionHead& head, const Matrix& F);

// Text round-trip, bit-exact.
std::string head_to_text(const ProjectionHead& head);
ProjectionHead head_from_text(const std::string& text);

}  // namespace pica
