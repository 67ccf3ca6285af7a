#pragma once
// Contrastive losses and their analytic gradients.
//
// Everything reduces to one block: softmax cross-entropy over cosine logits
// cos(anchor_i, candidate_j) / tau with one positive candidate per anchor.
// The curriculum loss runs the block twice (augmented text-space anchors vs
// pseudo-word candidates, then pseudo-word anchors vs text-space candidates),
// optionally appending the memory queue as extra non-learnable candidates.
// The grounding loss runs it once with base-category prototypes as candidates.
//
// Gradients flow to the projection head (W, b) through the pseudo-words and
// to log(tau); anchors derived from the frozen world map are constants.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pica/matrix.hpp"
#include "pica/negatives.hpp"
#include "pica/projection.hpp"

namespace pica {

// Symmetric-shape InfoNCE: n anchors vs n candidates, positive on the
// diagonal, mean over anchors. Errors on fewer than 2 pairs, shape mismatch,
// non-positive tau, or zero-norm rows.
double info_nce(const Matrix& anchors, const Matrix& candidates, double tau);

// Bidirectional curriculum loss over a selected set:
//   term 1: anchors = mapped_aug (frozen), candidates = pseudo + memory
//   term 2: anchors = pseudo_aug, candidates = mapped_aug (+ memory if
//           memory_in_second_term)
// Returns the sum of the two mean cross-entropies.
double curriculum_loss(const Matrix& mapped_aug, const Matrix& pseudo,
                       const Matrix& pseudo_aug, double tau,
                       const FeatureQueue* memory, bool memory_in_second_term);

// Mean cross-entropy of labeled pseudo-words against base prototypes.
// No labeled rows or a single prototype is degenerate: returns 0 and sets the
// flag instead of erroring.
double grounding_loss(const Matrix& pseudo_labeled,
                      std::span<const int> label_proto, const Matrix& protos,
                      double tau, bool* degenerate);

struct LossBreakdown {
  double l_ground = 0.0;
  double l_curr = 0.0;
  double lambda_curr = 1.0;
  double l_total = 0.0;
  bool grounding_degenerate = false;
};

LossBreakdown total_loss(double l_ground, double l_curr, double lambda_curr);

struct GradientSet {
  Matrix dW;          // d_t x d_v
  Vec db;             // d_t
  double d_log_tau = 0.0;

  Vec flatten() const;
  double norm() const;
  void scale(double s);
};

// Which pseudo-words feed the curriculum terms. `both` is the reference
// behavior (clean pseudo-words as term-1 candidates, augmented pseudo-words
// as term-2 anchors); the other two are ablation arms.
enum class PseudoWordMode { clean_only, aug_only, both };

// One training step's fixed inputs. Mixup, selection, and the frozen-map
// images are applied before this point, so loss evaluation is a pure function
// of the head parameters given this struct.
struct StepBatch {
  Matrix f_sel_clean;   // selected regions, visual space
  Matrix f_sel_aug;     // selected regions, augmented (mixup applied)
  Matrix mapped_aug;    // frozen-map images of f_sel_aug, text space
  Matrix f_labeled;     // labeled batch regions, visual space
  std::vector<int> label_proto;           // prototype row per labeled region
  const Matrix* base_protos = nullptr;    // base-category prototypes
  const FeatureQueue* memory = nullptr;   // may be null or empty
  double lambda_curr = 1.0;
  PseudoWordMode mode = PseudoWordMode::both;
  bool memory_in_second_term = false;
};

// Loss at the given head parameters (no gradients).
LossBreakdown step_forward(const StepBatch& batch, const ProjectionHead& head);

// Loss plus exact analytic gradients for W, b, and log(tau).
std::pair<LossBreakdown, GradientSet> step_forward_backward(
    const StepBatch& batch, const ProjectionHead& head);

// SGD with classical momentum; clamps tau to its bounds after each step.
struct SgdMomentum {
  double momentum = 0.9;
  Matrix vW;
  Vec vb;
  double v_log_tau = 0.0;

  void init(const ProjectionHead& head);
  void step(ProjectionHead& head, const GradientSet& g, double lr);
};

// Half-cosine decay from lr0 to 0 across `total` iterations.
double cosine_lr(double lr0, int iter, int total);

}  // namespace pica
