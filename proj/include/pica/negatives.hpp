#pragma once
// Negative-pool machinery for the alignment proxies: a fixed-capacity FIFO
// memory of past pseudo-words plus per-region scores.
//
// For a region with text-space anchor phi and pseudo-word w:
//   s_pos = cos(phi, w)                       signal strength q
//   s_neg = max cos(phi, z) over the pool     (in-batch pseudo-words minus
//                                              self, then the memory queue)
//   h     = s_neg - s_pos                     ambiguity
// High h means some negative explains the region almost as well as its own
// pseudo-word; low q means even the positive match is weak.

#include <cstdint>
#include <span>
#include <vector>

#include "pica/matrix.hpp"

namespace pica {

class FeatureQueue {
 public:
  FeatureQueue(std::size_t capacity, std::size_t dim);

  // Appends rows in order; evicts oldest entries beyond capacity.
  void push(const Matrix& rows);
  void push_one(std::span<const double> item);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }

  // Backing storage; rows [0, size) are valid, in unspecified order.
  const Matrix& storage() const { return store_; }

  // Entries oldest-to-newest (introspection / tests).
  std::vector<Vec> snapshot_fifo() const;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  Matrix store_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // index of the oldest entry
};

struct NegativePool {
  const Matrix* in_batch = nullptr;        // pseudo-words of the current batch
  const FeatureQueue* memory = nullptr;    // optional cross-batch queue
};

struct ProxyScores {
  double s_pos = 0.0;
  double s_neg = 0.0;
  double q = 0.0;  // = s_pos
  double h = 0.0;  // = s_neg - s_pos
};

// cos(anchor, w); thin wrapper that keeps the score definitions in one place.
double positive_score(std::span<const double> anchor, std::span<const double> w);

// Max cosine over the pool, skipping in-batch row `exclude_id` (-1 for none).
// Errors if the pool is empty after exclusion or any participant is
// zero-norm / dimension-mismatched.
double hardest_negative(std::span<const double> anchor, const NegativePool& pool,
                        std::int64_t exclude_id);

// Batched proxies for a set of regions: anchors (n x d) are the text-space
// images, pseudo_words (n x d) the head outputs; region i's own pseudo-word is
// excluded from its negative pool. Output order matches input order.
std::vector<ProxyScores> compute_proxies(const Matrix& anchors,
                                         const Matrix& pseudo_words,
                                         const FeatureQueue* memory);

}  // namespace pica
