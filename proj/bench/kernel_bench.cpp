// Compares the OpenMP kernels against their serial reference twins at
// training-shaped sizes and verifies bit-identical outputs while timing.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>

#include <omp.h>

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

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

bool same_bits(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void report(const char* name, double t_ref, double t_omp, bool identical) {
  std::printf("%-18s ref %9.3f ms   omp %9.3f ms   speedup %5.2fx   %s\n", name,
              1e3 * t_ref, 1e3 * t_omp, t_ref / t_omp,
              identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("kernel benchmark, omp threads = %d\n", omp_get_max_threads());

  const std::size_t batch = 256, d_v = 64, d_t = 32, pool = 4096, sel = 128;
  const Matrix W = random_matrix(d_t, d_v, 1);
  const Vec b(d_t, 0.25);
  const Matrix F = random_matrix(batch, d_v, 2);
  const Matrix A = random_matrix(sel, d_t, 3);
  const Matrix P = random_matrix(pool + batch, d_t, 4);
  const Matrix M = random_matrix(sel, pool + sel, 5);
  const Matrix C = random_matrix(pool + sel, d_t, 6);

  Vec a_norms, p_norms;
  kernels::row_norms(A, a_norms);
  kernels::row_norms(P, p_norms);

  Matrix out_ref, out_omp;
  int reps = 50;

  report("affine_batch",
         time_of([&] { kernels::ref::affine_batch(W, b, F, out_ref); }, reps),
         time_of([&] { kernels::affine_batch(W, b, F, out_omp); }, reps),
         same_bits(out_ref.data, out_omp.data));

  report("cosine_block",
         time_of([&] { kernels::ref::cosine_block(A, a_norms, P, p_norms, out_ref); }, reps),
         time_of([&] { kernels::cosine_block(A, a_norms, P, p_norms, out_omp); }, reps),
         same_bits(out_ref.data, out_omp.data));

  Vec best_ref(A.rows, -1e300), best_omp(A.rows, -1e300);
  report("hardest_scan",
         time_of([&] {
           std::fill(best_ref.begin(), best_ref.end(), -1e300);
           kernels::ref::hardest_scan(A, a_norms, P, P.rows, p_norms, {}, best_ref);
         }, reps),
         time_of([&] {
           std::fill(best_omp.begin(), best_omp.end(), -1e300);
           kernels::hardest_scan(A, a_norms, P, P.rows, p_norms, {}, best_omp);
         }, reps),
         same_bits(best_ref, best_omp));

  report("matmul_nn",
         time_of([&] { kernels::ref::matmul_nn(M, C, out_ref); }, reps),
         time_of([&] { kernels::matmul_nn(M, C, out_omp); }, reps),
         same_bits(out_ref.data, out_omp.data));

  report("matmul_tn_prefix",
         time_of([&] { kernels::ref::matmul_tn_prefix(M, A, sel, out_ref); }, reps),
         time_of([&] { kernels::matmul_tn_prefix(M, A, sel, out_omp); }, reps),
         same_bits(out_ref.data, out_omp.data));

  return 0;
}
