#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "pica/embedding.hpp"
#include "pica/kernels.hpp"
#include "pica/rng.hpp"

using namespace pica;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Matrix m(r, c);
  Engine rng = make_engine(seed);
  for (double& x : m.data) x = gaussian(rng);
  return m;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("parallel kernels match serial reference bit for bit") {
  const Matrix W = random_matrix(16, 24, 11);
  const Vec b(16, 0.5);
  const Matrix F = random_matrix(37, 24, 12);
  const Matrix A = random_matrix(19, 16, 13);
  const Matrix B = random_matrix(41, 16, 14);
  const Matrix M = random_matrix(19, 41, 15);

  Matrix r1, r2;
  kernels::ref::affine_batch(W, b, F, r1);
  kernels::affine_batch(W, b, F, r2);
  CHECK(same_bits(r1.data, r2.data));

  kernels::ref::matmul_nt(A, B, r1);
  kernels::matmul_nt(A, B, r2);
  CHECK(same_bits(r1.data, r2.data));

  kernels::ref::matmul_nn(M, B, r1);
  kernels::matmul_nn(M, B, r2);
  CHECK(same_bits(r1.data, r2.data));

  kernels::ref::matmul_tn_prefix(M, A, 17, r1);
  kernels::matmul_tn_prefix(M, A, 17, r2);
  CHECK(same_bits(r1.data, r2.data));

  Vec n1, n2;
  kernels::ref::row_norms(B, n1);
  kernels::row_norms(B, n2);
  CHECK(same_bits(n1, n2));

  Vec an, bn;
  kernels::row_norms(A, an);
  kernels::row_norms(B, bn);
  kernels::ref::cosine_block(A, an, B, bn, r1);
  kernels::cosine_block(A, an, B, bn, r2);
  CHECK(same_bits(r1.data, r2.data));

  Vec best1(A.rows, -std::numeric_limits<double>::infinity());
  Vec best2 = best1;
  std::vector<std::int64_t> exclude(A.rows, -1);
  for (std::size_t i = 0; i < A.rows; ++i) exclude[i] = std::int64_t(i % B.rows);
  kernels::ref::hardest_scan(A, an, B, B.rows, bn, exclude, best1);
  kernels::hardest_scan(A, an, B, B.rows, bn, exclude, best2);
  CHECK(same_bits(best1, best2));
}

TEST_CASE("affine_batch computes W f + b") {
  Matrix W(2, 3);
  W.at(0, 0) = 1; W.at(0, 1) = 2; W.at(0, 2) = 3;
  W.at(1, 0) = -1; W.at(1, 1) = 0; W.at(1, 2) = 1;
  const Vec b{10, 20};
  Matrix F(1, 3);
  F.at(0, 0) = 1; F.at(0, 1) = 1; F.at(0, 2) = 1;
  Matrix out;
  kernels::affine_batch(W, b, F, out);
  CHECK(out.at(0, 0) == doctest::Approx(16.0).epsilon(1e-15));
  CHECK(out.at(0, 1) == doctest::Approx(20.0).epsilon(1e-15));
}

TEST_CASE("matmul shapes and values against naive loops") {
  const Matrix A = random_matrix(7, 5, 21);
  const Matrix B = random_matrix(9, 5, 22);
  Matrix out;
  kernels::matmul_nt(A, B, out);
  REQUIRE(out.rows == 7);
  REQUIRE(out.cols == 9);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 5; ++k) acc += A.at(i, k) * B.at(j, k);
      CHECK(out.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
  }

  const Matrix M = random_matrix(7, 9, 23);
  kernels::matmul_nn(M, B, out);
  REQUIRE(out.rows == 7);
  REQUIRE(out.cols == 5);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t k = 0; k < out.cols; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 9; ++j) acc += M.at(i, j) * B.at(j, k);
      CHECK(out.at(i, k) == doctest::Approx(acc).epsilon(1e-12));
    }
  }

  kernels::matmul_tn_prefix(M, A, 4, out);
  REQUIRE(out.rows == 4);
  REQUIRE(out.cols == 5);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t k = 0; k < 5; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < 7; ++i) acc += M.at(i, a) * A.at(i, k);
      CHECK(out.at(a, k) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("hardest_scan equals a brute-force cosine_sim scan exactly") {
  const Matrix A = random_matrix(12, 8, 31);
  const Matrix P = random_matrix(20, 8, 32);
  Vec an, pn;
  kernels::row_norms(A, an);
  kernels::row_norms(P, pn);

  Vec best(A.rows, -std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> exclude(A.rows);
  for (std::size_t i = 0; i < A.rows; ++i) exclude[i] = std::int64_t(i);
  kernels::hardest_scan(A, an, P, P.rows, pn, exclude, best);

  for (std::size_t i = 0; i < A.rows; ++i) {
    double expect = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < P.rows; ++k) {
      if (k == i) continue;
      const double c = cosine_sim(A.row_span(i), P.row_span(k));
      if (c > expect) expect = c;
    }
    CHECK(best[i] == expect);  // bit-exact: same dot, same division
  }
}

TEST_CASE("hardest_scan chains pools through the running max") {
  const Matrix A = random_matrix(6, 8, 41);
  const Matrix P1 = random_matrix(9, 8, 42);
  const Matrix P2 = random_matrix(11, 8, 43);
  Vec an, p1n, p2n;
  kernels::row_norms(A, an);
  kernels::row_norms(P1, p1n);
  kernels::row_norms(P2, p2n);

  Vec best(A.rows, -std::numeric_limits<double>::infinity());
  kernels::hardest_scan(A, an, P1, P1.rows, p1n, {}, best);
  kernels::hardest_scan(A, an, P2, P2.rows, p2n, {}, best);

  Matrix joined(P1.rows + P2.rows, 8);
  for (std::size_t k = 0; k < P1.rows; ++k) joined.set_row(k, P1.row_span(k));
  for (std::size_t k = 0; k < P2.rows; ++k) {
    joined.set_row(P1.rows + k, P2.row_span(k));
  }
  Vec jn;
  kernels::row_norms(joined, jn);
  Vec expect(A.rows, -std::numeric_limits<double>::infinity());
  kernels::hardest_scan(A, an, joined, joined.rows, jn, {}, expect);
  CHECK(same_bits(best, expect));
}
