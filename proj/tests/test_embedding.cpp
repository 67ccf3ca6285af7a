#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pica/embedding.hpp"
#include "pica/rng.hpp"

using namespace pica;

TEST_CASE("cosine similarity hand value") {
  const Vec a{3.0, 4.0};
  const Vec b{4.0, 3.0};
  // (3*4 + 4*3) / (5 * 5) = 24/25
  CHECK(cosine_sim(a, b) == doctest::Approx(0.96).epsilon(1e-15));
  CHECK(cosine_sim(a, a) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cosine similarity is scale invariant and symmetric") {
  Engine rng = make_engine(5);
  for (int trial = 0; trial < 50; ++trial) {
    Vec a = gaussian_vector(rng, 16);
    Vec b = gaussian_vector(rng, 16);
    const double base = cosine_sim(a, b);
    CHECK(base == doctest::Approx(cosine_sim(b, a)).epsilon(1e-12));
    Vec a3 = a;
    for (double& x : a3) x *= 7.25;
    CHECK(cosine_sim(a3, b) == doctest::Approx(base).epsilon(1e-12));
    CHECK(base >= -1.0 - 1e-12);
    CHECK(base <= 1.0 + 1e-12);
  }
}

TEST_CASE("cosine similarity rejects bad input") {
  CHECK_THROWS_AS((void)cosine_sim(Vec{}, Vec{}), std::invalid_argument);
  CHECK_THROWS_AS((void)cosine_sim(Vec{1.0}, Vec{1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)cosine_sim(Vec{0.0, 0.0}, Vec{1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("z-normalization hand value and moments") {
  const Vec scores{1.0, 2.0, 3.0};
  const Vec z = z_normalize(scores);
  // population std of (1,2,3) is sqrt(2/3); (1-2)/sqrt(2/3) = -sqrt(3/2)
  const double expect = std::sqrt(1.5);
  CHECK(z[0] == doctest::Approx(-expect).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z[2] == doctest::Approx(expect).epsilon(1e-12));

  Engine rng = make_engine(6);
  Vec raw = gaussian_vector(rng, 257);
  for (double& x : raw) x = 3.0 * x + 11.0;
  const Vec zz = z_normalize(raw);
  const double mean = std::accumulate(zz.begin(), zz.end(), 0.0) / zz.size();
  double var = 0.0;
  for (double x : zz) var += (x - mean) * (x - mean);
  var /= zz.size();
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(mean) < 1e-9);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("z-normalization is idempotent and safe on constants") {
  Engine rng = make_engine(7);
  const Vec raw = gaussian_vector(rng, 64);
  const Vec once = z_normalize(raw);
  const Vec twice = z_normalize(once);
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(std::abs(once[i] - twice[i]) < 1e-9);
  }

  const Vec constant(10, 4.2);
  const Vec z = z_normalize(constant);
  for (double x : z) CHECK(x == 0.0);

  CHECK_THROWS_AS((void)z_normalize(Vec{}), std::invalid_argument);
}

TEST_CASE("sorted quantile interpolation") {
  const Vec sorted{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile_sorted(sorted, 0.0) == doctest::Approx(1.0));
  CHECK(quantile_sorted(sorted, 1.0) == doctest::Approx(4.0));
  CHECK(quantile_sorted(sorted, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_sorted(sorted, 1.0 / 3.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS((void)quantile_sorted(Vec{}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS((void)quantile_sorted(sorted, -0.1), std::invalid_argument);
  CHECK_THROWS_AS((void)quantile_sorted(sorted, 1.1), std::invalid_argument);
}

TEST_CASE("tier partition splits scores into quantile bands") {
  const Vec scores{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const TierPartition part = partition_tiers(scores, 3);
  // tier 1 holds the highest scores, tier K the lowest
  CHECK(part.tier_of[0] == 3);
  CHECK(part.tier_of[1] == 3);
  CHECK(part.tier_of[2] == 2);
  CHECK(part.tier_of[3] == 2);
  CHECK(part.tier_of[4] == 1);
  CHECK(part.tier_of[5] == 1);
  REQUIRE(part.members.size() == 3);
  CHECK(part.members[0] == std::vector<int>{4, 5});
  CHECK(part.members[1] == std::vector<int>{2, 3});
  CHECK(part.members[2] == std::vector<int>{0, 1});
}

TEST_CASE("tier partition covers every index exactly once") {
  Engine rng = make_engine(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + uniform_index(rng, 200);
    const Vec scores = gaussian_vector(rng, n);
    const TierPartition part = partition_tiers(scores, 3);
    std::vector<int> seen(n, 0);
    for (const auto& tier : part.members) {
      for (int idx : tier) seen[std::size_t(idx)] += 1;
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    // every member of a harder tier has score >= every member of a softer one
    for (std::size_t t = 0; t + 1 < part.members.size(); ++t) {
      double lo = std::numeric_limits<double>::infinity();
      for (int idx : part.members[t]) {
        lo = std::min(lo, scores[std::size_t(idx)]);
      }
      for (int idx : part.members[t + 1]) {
        CHECK(scores[std::size_t(idx)] <= lo + 1e-12);
      }
    }
  }
}

TEST_CASE("tier partition sends boundary ties to the harder tier") {
  const Vec scores{1.0, 1.0, 1.0, 1.0};
  const TierPartition part = partition_tiers(scores, 2);
  CHECK(part.members[0].size() == 4);
  CHECK(part.members[1].empty());
  for (int t : part.tier_of) CHECK(t == 1);
}

TEST_CASE("tier partition rejects degenerate requests") {
  CHECK_THROWS_AS((void)partition_tiers(Vec{1.0, 2.0}, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)partition_tiers(Vec{1.0, 2.0}, 0),
                  std::invalid_argument);
}
