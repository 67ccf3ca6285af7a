#include "pica/kernels.hpp"

#include <cmath>
#include <limits>

namespace pica::kernels {

// Shared element-level helpers. Both the parallel kernels and the serial ref
// twins go through these, so the two paths are bit-identical by construction
// (fixed accumulation order, no cross-element reductions).
namespace {

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

inline void affine_row(const Matrix& W, const Vec& b, const double* f,
                       double* out) {
  for (std::size_t t = 0; t < W.rows; ++t) {
    out[t] = dot(W.row(t), f, W.cols) + b[t];
  }
}

inline void matmul_nt_row(const Matrix& A, const Matrix& B, std::size_t i,
                          double* out) {
  const double* a = A.row(i);
  for (std::size_t j = 0; j < B.rows; ++j) out[j] = dot(a, B.row(j), A.cols);
}

inline void matmul_nn_row(const Matrix& A, const Matrix& B, std::size_t i,
                          double* out) {
  for (std::size_t k = 0; k < B.cols; ++k) out[k] = 0.0;
  const double* a = A.row(i);
  for (std::size_t j = 0; j < A.cols; ++j) axpy(a[j], B.row(j), out, B.cols);
}

inline void matmul_tn_row(const Matrix& A, const Matrix& B, std::size_t a_col,
                          double* out) {
  for (std::size_t k = 0; k < B.cols; ++k) out[k] = 0.0;
  for (std::size_t i = 0; i < A.rows; ++i) {
    axpy(A.at(i, a_col), B.row(i), out, B.cols);
  }
}

inline void cosine_row(const Matrix& A, const Vec& a_norms, const Matrix& B,
                       const Vec& b_norms, std::size_t i, double* out) {
  const double* a = A.row(i);
  const double na = a_norms[i];
  for (std::size_t j = 0; j < B.rows; ++j) {
    out[j] = dot(a, B.row(j), A.cols) / (na * b_norms[j]);
  }
}

inline void hardest_row(const Matrix& A, const Vec& a_norms, const Matrix& P,
                        std::size_t pool_rows, const Vec& p_norms,
                        std::int64_t skip, std::size_t i, double* best) {
  const double* a = A.row(i);
  const double na = a_norms[i];
  double m = best[i];
  for (std::size_t k = 0; k < pool_rows; ++k) {
    if (static_cast<std::int64_t>(k) == skip) continue;
    const double c = dot(a, P.row(k), A.cols) / (na * p_norms[k]);
    if (c > m) m = c;
  }
  best[i] = m;
}

}  // namespace

void affine_batch(const Matrix& W, const Vec& b, const Matrix& F, Matrix& out) {
  out = Matrix(F.rows, W.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(F.rows); ++i) {
    affine_row(W, b, F.row(i), out.row(i));
  }
}

void matmul_nt(const Matrix& A, const Matrix& B, Matrix& out) {
  out = Matrix(A.rows, B.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(A.rows); ++i) {
    matmul_nt_row(A, B, i, out.row(i));
  }
}

void matmul_nn(const Matrix& A, const Matrix& B, Matrix& out) {
  out = Matrix(A.rows, B.cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(A.rows); ++i) {
    matmul_nn_row(A, B, i, out.row(i));
  }
}

void matmul_tn_prefix(const Matrix& A, const Matrix& B, std::size_t prefix,
                      Matrix& out) {
  out = Matrix(prefix, B.cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t a = 0; a < static_cast<std::int64_t>(prefix); ++a) {
    matmul_tn_row(A, B, a, out.row(a));
  }
}

void row_norms(const Matrix& A, Vec& out) {
  out.assign(A.rows, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(A.rows); ++i) {
    out[i] = std::sqrt(dot(A.row(i), A.row(i), A.cols));
  }
}

void cosine_block(const Matrix& A, const Vec& a_norms, const Matrix& B,
                  const Vec& b_norms, Matrix& out) {
  out = Matrix(A.rows, B.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(A.rows); ++i) {
    cosine_row(A, a_norms, B, b_norms, i, out.row(i));
  }
}

void hardest_scan(const Matrix& A, const Vec& a_norms, const Matrix& P,
                  std::size_t pool_rows, const Vec& p_norms,
                  const std::vector<std::int64_t>& exclude, Vec& best) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(A.rows); ++i) {
    hardest_row(A, a_norms, P, pool_rows, p_norms,
                exclude.empty() ? -1 : exclude[i], i, best.data());
  }
}

namespace ref {

void affine_batch(const Matrix& W, const Vec& b, const Matrix& F, Matrix& out) {
  out = Matrix(F.rows, W.rows);
  for (std::size_t i = 0; i < F.rows; ++i) affine_row(W, b, F.row(i), out.row(i));
}

void matmul_nt(const Matrix& A, const Matrix& B, Matrix& out) {
  out = Matrix(A.rows, B.rows);
  for (std::size_t i = 0; i < A.rows; ++i) matmul_nt_row(A, B, i, out.row(i));
}

void matmul_nn(const Matrix& A, const Matrix& B, Matrix& out) {
  out = Matrix(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) matmul_nn_row(A, B, i, out.row(i));
}

void matmul_tn_prefix(const Matrix& A, const Matrix& B, std::size_t prefix,
                      Matrix& out) {
  out = Matrix(prefix, B.cols);
  for (std::size_t a = 0; a < prefix; ++a) matmul_tn_row(A, B, a, out.row(a));
}

void row_norms(const Matrix& A, Vec& out) {
  out.assign(A.rows, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    out[i] = std::sqrt(dot(A.row(i), A.row(i), A.cols));
  }
}

void cosine_block(const Matrix& A, const Vec& a_norms, const Matrix& B,
                  const Vec& b_norms, Matrix& out) {
  out = Matrix(A.rows, B.rows);
  for (std::size_t i = 0; i < A.rows; ++i) {
    cosine_row(A, a_norms, B, b_norms, i, out.row(i));
  }
}

void hardest_scan(const Matrix& A, const Vec& a_norms, const Matrix& P,
                  std::size_t pool_rows, const Vec& p_norms,
                  const std::vector<std::int64_t>& exclude, Vec& best) {
  for (std::size_t i = 0; i < A.rows; ++i) {
    hardest_row(A, a_norms, P, pool_rows, p_norms,
                exclude.empty() ? -1 : exclude[i], i, best.data());
  }
}

}  // namespace ref

}  // namespace pica::kernels
