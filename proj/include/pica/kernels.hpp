#pragma once
// Data-parallel numeric kernels. Each kernel writes every output element from
// exactly one thread and keeps reductions serial inside that element, so
// results are bit-identical for any OMP thread count. pica::kernels::ref holds
// plain serial twins used as the correctness oracle and benchmark baseline.

#include <cstdint>

#include "pica/matrix.hpp"

namespace pica::kernels {

// Serial dot product with a fixed 4-lane accumulation order; the element-level
// primitive every kernel (and cosine_sim) builds on, so all similarity paths
// agree bit-for-bit.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

// out[i] = W * F_i + b.  W is (p x d), F is (n x d), out is resized to (n x p).
void affine_batch(const Matrix& W, const Vec& b, const Matrix& F, Matrix& out);

// out = A * B^T.  A is (n x d), B is (m x d), out resized to (n x m).
void matmul_nt(const Matrix& A, const Matrix& B, Matrix& out);

// out = A * B.  A is (n x m), B is (m x d), out resized to (n x d).
void matmul_nn(const Matrix& A, const Matrix& B, Matrix& out);

// First `prefix` rows of A^T * B.  A is (n x m), B is (n x d),
// out resized to (prefix x d) with prefix <= m.
void matmul_tn_prefix(const Matrix& A, const Matrix& B, std::size_t prefix,
                      Matrix& out);

// Euclidean norm of every row.
void row_norms(const Matrix& A, Vec& out);

// out[i][j] = cos(A_i, B_j) given precomputed row norms (all nonzero).
void cosine_block(const Matrix& A, const Vec& a_norms, const Matrix& B,
                  const Vec& b_norms, Matrix& out);

// Row-wise running max of cos(A_i, P_k) over all pool rows k, skipping
// k == exclude[i] (pass -1 to keep every row).  `best` must be preloaded
// (e.g. with -inf) and is updated in place, so pools can be chained.
void hardest_scan(const Matrix& A, const Vec& a_norms, const Matrix& P,
                  std::size_t pool_rows, const Vec& p_norms,
                  const std::vector<std::int64_t>& exclude, Vec& best);

namespace ref {
void affine_batch(const Matrix& W, const Vec& b, const Matrix& F, Matrix& out);
void matmul_nt(const Matrix& A, const Matrix& B, Matrix& out);
void matmul_nn(const Matrix& A, const Matrix& B, Matrix& out);
void matmul_tn_prefix(const Matrix& A, const Matrix& B, std::size_t prefix,
                      Matrix& out);
void row_norms(const Matrix& A, Vec& out);
void cosine_block(const Matrix& A, const Vec& a_norms, const Matrix& B,
                  const Vec& b_norms, Matrix& out);
void hardest_scan(const Matrix& A, const Vec& a_norms, const Matrix& P,
                  std::size_t pool_rows, const Vec& p_norms,
                  const std::vector<std::int64_t>& exclude, Vec& best);
}  // namespace ref

}  // namespace pica::kernels
