#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pica/metrics.hpp"
#include "pica/rng.hpp"
#include "pica/world.hpp"

using namespace pica;

namespace {

ProjectionHead identity_head(int d) {
  ProjectionHead head;
  head.W = Matrix(std::size_t(d), std::size_t(d));
  for (int i = 0; i < d; ++i) head.W.at(std::size_t(i), std::size_t(i)) = 1.0;
  head.b.assign(std::size_t(d), 0.0);
  head.log_tau = std::log(0.07);
  return head;
}

RegionSample make_region(int id, Split split, int category, Vec feature) {
  RegionSample r;
  r.id = id;
  r.split = split;
  r.category = category;
  r.feature = std::move(feature);
  r.feature_aug = r.feature;
  return r;
}

}  // namespace

TEST_CASE("domain and overall means") {
  CHECK(domain_mean(Vec{1.0, 2.0, 3.0}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(overall_mean(Vec{2.0, 4.0}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)domain_mean(Vec{}), std::invalid_argument);
  CHECK_THROWS_AS((void)overall_mean(Vec{}), std::invalid_argument);
}

TEST_CASE("benchmark-style aggregation: unweighted mean of domain means") {
  // Three methods' per-cell scores across a 15-cell severity grid; the
  // aggregate must equal the plain mean when each cell is its own domain.
  const Vec method_a{17.8, 17.8, 13.8, 19.6, 12.5, 17.4, 11.0, 19.8,
                     22.8, 31.3, 33.6, 24.7, 25.6, 19.5, 22.6};
  const Vec method_b{17.8, 17.3, 13.6, 18.3, 12.2, 17.0, 10.7, 17.6,
                     21.4, 29.2, 30.8, 23.0, 23.6, 17.3, 19.9};
  const Vec method_c{17.7, 17.5, 14.4, 18.9, 12.1, 16.8, 10.7, 18.9,
                     22.3, 30.1, 31.3, 24.3, 23.7, 17.8, 20.6};
  auto aggregate = [](const Vec& cells) {
    Vec per_domain;
    for (double cell : cells) per_domain.push_back(domain_mean(Vec{cell}));
    return overall_mean(per_domain);
  };
  CHECK(std::abs(aggregate(method_a) - 20.6533) < 5e-3);
  CHECK(std::abs(aggregate(method_b) - 19.3133) < 5e-3);
  CHECK(std::abs(aggregate(method_c) - 19.8067) < 5e-3);
  CHECK(aggregate(method_a) > aggregate(method_c));
  CHECK(aggregate(method_c) > aggregate(method_b));

  // multi-severity domains average severity-first, then across domains
  const double two_domain = overall_mean(
      Vec{domain_mean(Vec{10.0, 20.0}), domain_mean(Vec{30.0, 50.0})});
  CHECK(two_domain == doctest::Approx((15.0 + 40.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("alignment-invariance gap") {
  const Vec a{1.0, 2.0, 3.0};
  CHECK(ai_gap(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  Vec scaled = a;
  for (double& x : scaled) x *= 4.0;
  CHECK(ai_gap(a, scaled) == doctest::Approx(0.0).epsilon(1e-12));
  const Vec orth{2.0, -1.0, 0.0};
  CHECK(ai_gap(a, orth) == doctest::Approx(1.0).epsilon(1e-12));
  const Vec flipped{-1.0, -2.0, -3.0};
  CHECK(ai_gap(a, flipped) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)ai_gap(a, Vec{1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)ai_gap(a, Vec{0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("gradient conflict score") {
  const Vec g{1.0, 0.0, 2.0};
  Vec same = g;
  for (double& x : same) x *= 3.0;
  auto s = gradient_conflict_score(g, same);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(1.0).epsilon(1e-12));

  Vec anti = g;
  for (double& x : anti) x = -x;
  s = gradient_conflict_score(g, anti);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK(!gradient_conflict_score(g, Vec{0.0, 0.0, 0.0}).has_value());
  CHECK(!gradient_conflict_score(Vec{0.0, 0.0, 0.0}, g).has_value());
  CHECK_THROWS_AS((void)gradient_conflict_score(g, Vec{1.0}),
                  std::invalid_argument);
}

TEST_CASE("stability records pair clean and shifted proxies by id") {
  const std::vector<int> ids{4, 7, 9};
  std::vector<ProxyScores> clean(3), shifted(3);
  for (int i = 0; i < 3; ++i) {
    clean[std::size_t(i)].q = 0.5 + 0.1 * i;
    clean[std::size_t(i)].h = 0.2 * i;
    shifted[std::size_t(i)].h = 0.2 * i + 0.05 * (i + 1);
  }
  const auto records = stability_records(ids, clean, ids, shifted);
  REQUIRE(records.size() == 3);
  CHECK(records[0].region_id == 4);
  CHECK(records[1].q_clean == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(records[2].delta_h == doctest::Approx(0.15).epsilon(1e-9));

  const std::vector<int> wrong{4, 9, 7};
  CHECK_THROWS_AS((void)stability_records(ids, clean, wrong, shifted),
                  std::invalid_argument);
  const std::vector<int> shorter{4, 7};
  CHECK_THROWS_AS(
      (void)stability_records(ids, clean, shorter,
                              std::vector<ProxyScores>(2)),
      std::invalid_argument);
}

TEST_CASE("retrieval score on a hand-built two-category world") {
  Matrix protos(2, 2);
  protos.at(0, 0) = 1.0;
  protos.at(1, 1) = 1.0;
  const ProjectionHead head = identity_head(2);

  std::vector<RegionSample> regions;
  regions.push_back(make_region(0, Split::base, 0, Vec{0.9, 0.1}));
  regions.push_back(make_region(1, Split::base, 1, Vec{0.1, 0.8}));
  regions.push_back(make_region(2, Split::novel, 1, Vec{0.2, 0.9}));
  CHECK(retrieval_score(regions, head, protos, SplitFilter::all) ==
        doctest::Approx(100.0).epsilon(1e-12));
  CHECK(retrieval_score(regions, head, protos, SplitFilter::novel) ==
        doctest::Approx(100.0).epsilon(1e-12));

  regions[1].category = 0;  // now the second base region is mislabeled
  CHECK(retrieval_score(regions, head, protos, SplitFilter::base) ==
        doctest::Approx(50.0).epsilon(1e-12));

  // exact ties resolve to the lowest category id
  std::vector<RegionSample> tied;
  tied.push_back(make_region(0, Split::base, 0, Vec{1.0, 1.0}));
  CHECK(retrieval_score(tied, head, protos, SplitFilter::base) ==
        doctest::Approx(100.0).epsilon(1e-12));
  tied[0].category = 1;
  CHECK(retrieval_score(tied, head, protos, SplitFilter::base) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("retrieval score validates its input") {
  Matrix protos(2, 2);
  protos.at(0, 0) = 1.0;
  protos.at(1, 1) = 1.0;
  const ProjectionHead head = identity_head(2);

  std::vector<RegionSample> regions;
  regions.push_back(make_region(0, Split::base, 0, Vec{0.9, 0.1}));
  CHECK_THROWS_AS(
      (void)retrieval_score(regions, head, protos, SplitFilter::novel),
      std::invalid_argument);  // empty filtered set
  regions[0].category.reset();
  CHECK_THROWS_AS(
      (void)retrieval_score(regions, head, protos, SplitFilter::base),
      std::invalid_argument);  // unlabeled region
  CHECK_THROWS_AS(
      (void)retrieval_score({}, head, protos, SplitFilter::all),
      std::invalid_argument);
}

TEST_CASE("ground-truth head retrieves nearly everything on a clean world") {
  const WorldSpec w = generate_world(8, 4, 32, 16, 0.05, 57);
  const auto regions =
      sample_regions(w, 400, std::nullopt, 0, 58, LabelMode::eval, 0.05);
  ProjectionHead head;
  head.W = w.ground_truth_map;
  head.b.assign(std::size_t(w.d_t), 0.0);
  head.log_tau = std::log(0.07);
  const Matrix protos = all_prototypes(w);
  CHECK(retrieval_score(regions, head, protos, SplitFilter::all) > 95.0);
  CHECK(retrieval_score(regions, head, protos, SplitFilter::novel) > 95.0);
}

TEST_CASE("random heads sit near chance retrieval on average") {
  const WorldSpec w = generate_world(8, 4, 32, 16, 0.1, 67);
  const auto regions =
      sample_regions(w, 400, std::nullopt, 0, 68, LabelMode::eval, 0.05);
  const Matrix protos = all_prototypes(w);
  double acc = 0.0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    const ProjectionHead head = init_head(w.d_v, w.d_t, 700 + trial);
    acc += retrieval_score(regions, head, protos, SplitFilter::all);
  }
  acc /= trials;
  // chance is 100 / 12 = 8.33; category-level granularity leaves wide noise
  CHECK(acc > 0.5);
  CHECK(acc < 30.0);
}
