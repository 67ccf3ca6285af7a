#include "pica/negatives.hpp"

#include <limits>
#include <stdexcept>

#include "pica/embedding.hpp"
#include "pica/kernels.hpp"

namespace pica {

FeatureQueue::FeatureQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), store_(capacity, dim) {
  if (capacity == 0) throw std::invalid_argument("FeatureQueue: zero capacity");
  if (dim == 0) throw std::invalid_argument("FeatureQueue: zero dim");
}

void FeatureQueue::push_one(std::span<const double> item) {
  if (item.size() != dim_) {
    throw std::invalid_argument("FeatureQueue: dimension mismatch");
  }
  if (size_ < capacity_) {
    store_.set_row((head_ + size_) % capacity_, item);
    ++size_;
  } else {
    store_.set_row(head_, item);
    head_ = (head_ + 1) % capacity_;
  }
}

void FeatureQueue::push(const Matrix& rows) {
  if (rows.rows > 0 && rows.cols != dim_) {
    throw std::invalid_argument("FeatureQueue: dimension mismatch");
  }
  for (std::size_t i = 0; i < rows.rows; ++i) push_one(rows.row_span(i));
}

std::vector<Vec> FeatureQueue::snapshot_fifo() const {
  std::vector<Vec> out;
  out.reserve(size_);
  for (std::size_t k = 0; k < size_; ++k) {
    const auto r = store_.row_span((head_ + k) % capacity_);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

double positive_score(std::span<const double> anchor, std::span<const double> w) {
  return cosine_sim(anchor, w);
}

double hardest_negative(std::span<const double> anchor, const NegativePool& pool,
                        std::int64_t exclude_id) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  if (pool.in_batch != nullptr) {
    for (std::size_t k = 0; k < pool.in_batch->rows; ++k) {
      if (static_cast<std::int64_t>(k) == exclude_id) continue;
      const double c = cosine_sim(anchor, pool.in_batch->row_span(k));
      if (c > best) best = c;
      any = true;
    }
  }
  if (pool.memory != nullptr) {
    const Matrix& store = pool.memory->storage();
    for (std::size_t k = 0; k < pool.memory->size(); ++k) {
      const double c = cosine_sim(anchor, store.row_span(k));
      if (c > best) best = c;
      any = true;
    }
  }
  if (!any) {
    throw std::invalid_argument("hardest_negative: empty pool after exclusion");
  }
  return best;
}

std::vector<ProxyScores> compute_proxies(const Matrix& anchors,
                                         const Matrix& pseudo_words,
                                         const FeatureQueue* memory) {
  const std::size_t n = anchors.rows;
  if (pseudo_words.rows != n) {
    throw std::invalid_argument("compute_proxies: row count mismatch");
  }
  if (anchors.cols != pseudo_words.cols) {
    throw std::invalid_argument("compute_proxies: dimension mismatch");
  }
  if (n < 2 && (memory == nullptr || memory->size() == 0)) {
    throw std::invalid_argument("compute_proxies: empty negative pool");
  }

  Vec anchor_norms, word_norms;
  kernels::row_norms(anchors, anchor_norms);
  kernels::row_norms(pseudo_words, word_norms);
  for (std::size_t i = 0; i < n; ++i) {
    if (anchor_norms[i] <= kZeroNormEps || word_norms[i] <= kZeroNormEps) {
      throw std::invalid_argument("compute_proxies: zero-norm input");
    }
  }

  Vec best(n, -std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> exclude(n);
  for (std::size_t i = 0; i < n; ++i) exclude[i] = static_cast<std::int64_t>(i);
  kernels::hardest_scan(anchors, anchor_norms, pseudo_words, n, word_norms,
                        exclude, best);
  if (memory != nullptr && memory->size() > 0) {
    const Matrix& store = memory->storage();
    Vec mem_norms;
    kernels::row_norms(store, mem_norms);
    for (std::size_t k = 0; k < memory->size(); ++k) {
      if (mem_norms[k] <= kZeroNormEps) {
        throw std::invalid_argument("compute_proxies: zero-norm queue entry");
      }
    }
    kernels::hardest_scan(anchors, anchor_norms, store, memory->size(),
                          mem_norms, {}, best);
  }

  std::vector<ProxyScores> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s_pos =
        kernels::dot(anchors.row(i), pseudo_words.row(i), anchors.cols) /
        (anchor_norms[i] * word_norms[i]);
    out[i].s_pos = s_pos;
    out[i].s_neg = best[i];
    out[i].q = s_pos;
    out[i].h = best[i] - s_pos;
  }
  return out;
}

}  // namespace pica
