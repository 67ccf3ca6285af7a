#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "pica/embedding.hpp"
#include "pica/kernels.hpp"
#include "pica/rng.hpp"
#include "pica/world.hpp"

using namespace pica;

namespace {

double norm_of(const Vec& v) {
  return std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
}

double mean_pair_cos(const std::vector<RegionSample>& a,
                     const std::vector<RegionSample>& b) {
  REQUIRE(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += cosine_sim(a[i].feature, b[i].feature);
  }
  return acc / double(a.size());
}

}  // namespace

TEST_CASE("world generation is deterministic in the seed") {
  const WorldSpec w1 = generate_world(6, 3, 24, 12, 0.1, 42);
  const WorldSpec w2 = generate_world(6, 3, 24, 12, 0.1, 42);
  const WorldSpec w3 = generate_world(6, 3, 24, 12, 0.1, 43);
  CHECK(world_to_text(w1) == world_to_text(w2));
  CHECK(world_to_text(w1) != world_to_text(w3));
}

TEST_CASE("world invariants: prototypes, splits, orthonormal map") {
  const WorldSpec w = generate_world(8, 4, 32, 16, 0.1, 7);
  REQUIRE(int(w.categories.size()) == 12);
  for (int c = 0; c < 12; ++c) {
    const CategorySpec& cat = w.categories[std::size_t(c)];
    CHECK(cat.id == c);
    CHECK((cat.split == (c < 8 ? Split::base : Split::novel)));
    CHECK(norm_of(cat.text_proto) == doctest::Approx(1.0).epsilon(1e-12));
  }
  // rows of the ground-truth map are orthonormal: G G^T = I
  const Matrix& G = w.ground_truth_map;
  REQUIRE(G.rows == 16);
  REQUIRE(G.cols == 32);
  for (std::size_t i = 0; i < G.rows; ++i) {
    for (std::size_t j = 0; j < G.rows; ++j) {
      const double d = kernels::dot(G.row(i), G.row(j), G.cols);
      CHECK(d == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
    }
  }
  // the map recovers category prototypes from anchors up to anchor noise
  for (const CategorySpec& cat : w.categories) {
    const Vec back = map_to_text(w, cat.visual_anchor);
    CHECK(cosine_sim(back, cat.text_proto) > 0.9);
  }
}

TEST_CASE("world generation rejects bad dimensions") {
  CHECK_THROWS_AS((void)generate_world(0, 3, 24, 12, 0.1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)generate_world(4, -1, 24, 12, 0.1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)generate_world(4, 2, 8, 12, 0.1, 1),
                  std::invalid_argument);  // d_v < d_t
  CHECK_THROWS_AS((void)generate_world(4, 2, 24, 1, 0.1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)generate_world(4, 2, 24, 12, -0.5, 1),
                  std::invalid_argument);
}

TEST_CASE("world serialization round-trips bit-exactly") {
  const WorldSpec w = generate_world(5, 2, 20, 10, 0.15, 99);
  const std::string text = world_to_text(w);
  const WorldSpec parsed = world_from_text(text);
  CHECK(world_to_text(parsed) == text);
  CHECK(parsed.seed == w.seed);
  CHECK(parsed.categories.size() == w.categories.size());
  CHECK_THROWS_AS((void)world_from_text("nonsense"), std::runtime_error);
}

TEST_CASE("region sampling: determinism, labels, metadata") {
  const WorldSpec w = generate_world(6, 3, 24, 12, 0.1, 11);
  const auto train = sample_regions(w, 200, std::nullopt, 0, 5, LabelMode::train,
                                    0.05);
  const auto again = sample_regions(w, 200, std::nullopt, 0, 5, LabelMode::train,
                                    0.05);
  REQUIRE(train.size() == 200);
  CHECK(regions_to_text(train, w.d_v, 5, LabelMode::train) ==
        regions_to_text(again, w.d_v, 5, LabelMode::train));

  bool saw_base = false, saw_novel = false;
  for (const RegionSample& r : train) {
    CHECK(r.domain_id == 0);
    CHECK(r.severity == 0);
    CHECK(int(r.feature.size()) == w.d_v);
    CHECK(int(r.feature_aug.size()) == w.d_v);
    if (r.split == Split::base) {
      saw_base = true;
      REQUIRE(r.category.has_value());
      CHECK(*r.category < 6);
    } else {
      saw_novel = true;
      CHECK(!r.category.has_value());  // train mode leaves novel unlabeled
    }
  }
  CHECK(saw_base);
  CHECK(saw_novel);

  const auto eval = sample_regions(w, 100, std::nullopt, 0, 5, LabelMode::eval,
                                   0.05);
  for (const RegionSample& r : eval) CHECK(r.category.has_value());
}

TEST_CASE("clean and corrupted draws stay paired by region id") {
  const WorldSpec w = generate_world(6, 3, 24, 12, 0.1, 13);
  const auto clean = sample_regions(w, 150, std::nullopt, 0, 21,
                                    LabelMode::eval, 0.05);
  const CorruptionSpec spec = default_corruption(CorruptionKind::additive_noise);
  const auto shifted = sample_regions(w, 150, spec, 3, 21, LabelMode::eval,
                                      0.05);
  REQUIRE(clean.size() == shifted.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    CHECK(clean[i].id == shifted[i].id);
    CHECK(clean[i].category == shifted[i].category);
    CHECK(shifted[i].domain_id == 1);
    CHECK(shifted[i].severity == 3);
  }
  CHECK(mean_pair_cos(clean, shifted) < 1.0 - 1e-6);
}

TEST_CASE("region sampling validates severity against corruption") {
  const WorldSpec w = generate_world(4, 2, 16, 8, 0.1, 3);
  const CorruptionSpec spec = default_corruption(CorruptionKind::contrast_scale);
  CHECK_THROWS_AS((void)sample_regions(w, 10, spec, 0, 1, LabelMode::eval, 0.05),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)sample_regions(w, 10, spec, 6, 1, LabelMode::eval, 0.05),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      (void)sample_regions(w, 10, std::nullopt, 2, 1, LabelMode::eval, 0.05),
      std::invalid_argument);
  CHECK_THROWS_AS(
      (void)sample_regions(w, 0, std::nullopt, 0, 1, LabelMode::eval, 0.05),
      std::invalid_argument);
}

TEST_CASE("every corruption degrades monotonically along the severity ladder") {
  const WorldSpec w = generate_world(8, 4, 64, 32, 0.1, 17);
  const auto clean = sample_regions(w, 1000, std::nullopt, 0, 33,
                                    LabelMode::eval, 0.05);
  for (int k = 0; k < kCorruptionKinds; ++k) {
    const CorruptionSpec spec =
        default_corruption(static_cast<CorruptionKind>(k));
    double prev = 1.0;
    for (int sev = 1; sev <= kSeverityLevels; ++sev) {
      const auto shifted = sample_regions(w, 1000, spec, sev, 33,
                                          LabelMode::eval, 0.05);
      const double mc = mean_pair_cos(clean, shifted);
      INFO("kind ", k, " severity ", sev, " mean cos ", mc);
      CHECK(mc < prev);
      CHECK(mc > 0.0);
      prev = mc;
    }
    CHECK(prev < 0.999);  // severity 5 moved the features measurably
  }
}

TEST_CASE("augmentation stays close to the original feature") {
  const WorldSpec w = generate_world(6, 3, 64, 32, 0.1, 19);
  const auto regions = sample_regions(w, 1000, std::nullopt, 0, 23,
                                      LabelMode::eval, 0.05);
  double acc = 0.0;
  for (const RegionSample& r : regions) {
    acc += cosine_sim(r.feature, r.feature_aug);
  }
  acc /= double(regions.size());
  CHECK(acc > 0.9);
  CHECK(acc < 1.0);

  // standalone augment: deterministic per seed, different across seeds
  const Vec f = regions[0].feature;
  CHECK(augment(f, 0.05, 100) == augment(f, 0.05, 100));
  CHECK(augment(f, 0.05, 100) != augment(f, 0.05, 101));
}

TEST_CASE("region serialization round-trips bit-exactly") {
  const WorldSpec w = generate_world(4, 2, 16, 8, 0.1, 29);
  const CorruptionSpec spec =
      default_corruption(CorruptionKind::coordinate_dropout);
  const auto regions = sample_regions(w, 40, spec, 2, 31, LabelMode::train,
                                      0.05);
  const std::string text = regions_to_text(regions, w.d_v, 31, LabelMode::train);
  const auto parsed = regions_from_text(text);
  CHECK(regions_to_text(parsed, w.d_v, 31, LabelMode::train) == text);
  REQUIRE(parsed.size() == regions.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].id == regions[i].id);
    CHECK(parsed[i].category == regions[i].category);
    CHECK(parsed[i].feature == regions[i].feature);
  }
}

TEST_CASE("corruption names and domain ids") {
  CHECK(corruption_from_name("additive_noise") ==
        CorruptionKind::additive_noise);
  CHECK(corruption_from_name(corruption_name(CorruptionKind::contrast_scale)) ==
        CorruptionKind::contrast_scale);
  CHECK_THROWS_AS((void)corruption_from_name("fog"), std::runtime_error);
  CHECK(domain_id_for(std::nullopt) == 0);
  CHECK(domain_id_for(default_corruption(CorruptionKind::subspace_rotation)) ==
        2);
  CHECK(domain_name(0) == "clean");
  CHECK(domain_name(1) == "additive_noise");
}

TEST_CASE("mismatched pairings: rate, determinism, honest visual side") {
  const WorldSpec w = generate_world(10, 4, 24, 12, 0.12, 23);
  const int n = 4000;
  const auto noisy =
      sample_regions(w, n, std::nullopt, 0, 77, LabelMode::train, 0.05, 0.3);
  const auto clean =
      sample_regions(w, n, std::nullopt, 0, 77, LabelMode::train, 0.05, 0.0);
  REQUIRE(noisy.size() == clean.size());

  int flagged = 0;
  for (int i = 0; i < n; ++i) {
    // The visual side is never touched by a wrong pairing.
    CHECK(noisy[i].feature == clean[i].feature);
    CHECK(noisy[i].feature_aug == clean[i].feature_aug);
    CHECK_FALSE(clean[i].mismatched);
    CHECK(clean[i].wrong_text.empty());
    CHECK(clean[i].confusable.empty());
    // Pairing noise never touches the label.
    CHECK(noisy[i].category == clean[i].category);
    if (noisy[i].mismatched) {
      ++flagged;
      REQUIRE(noisy[i].wrong_text.size() == static_cast<std::size_t>(w.d_t));
      // The flicker pool holds lookalike base categories, never the region's
      // own label.
      REQUIRE(noisy[i].confusable.size() ==
              static_cast<std::size_t>(kConfusablePool));
      for (int c : noisy[i].confusable) {
        CHECK(c >= 0);
        CHECK(c < w.n_base);
        if (noisy[i].category) CHECK(c != *noisy[i].category);
      }
    } else {
      CHECK(noisy[i].wrong_text.empty());
      CHECK(noisy[i].confusable.empty());
    }
  }
  // Empirical rate close to the requested one (binomial, n = 4000).
  CHECK(flagged > n * 0.3 - 4 * std::sqrt(n * 0.3 * 0.7));
  CHECK(flagged < n * 0.3 + 4 * std::sqrt(n * 0.3 * 0.7));

  const auto again =
      sample_regions(w, n, std::nullopt, 0, 77, LabelMode::train, 0.05, 0.3);
  for (int i = 0; i < n; ++i) {
    CHECK(again[i].mismatched == noisy[i].mismatched);
    CHECK(again[i].wrong_text == noisy[i].wrong_text);
    CHECK(again[i].confusable == noisy[i].confusable);
    CHECK(again[i].category == noisy[i].category);
  }
}

TEST_CASE("confusable categories: lookalikes first, base-only, no self") {
  const WorldSpec w = generate_world(10, 4, 24, 12, 0.1, 23);
  for (int c = 0; c < 14; ++c) {
    const std::vector<int> near = confusable_base_categories(w, c, 3);
    REQUIRE(near.size() == 3);
    double prev = 2.0;
    std::vector<bool> seen(w.categories.size(), false);
    for (int o : near) {
      CHECK(o >= 0);
      CHECK(o < w.n_base);
      CHECK(o != c);
      CHECK_FALSE(seen[std::size_t(o)]);
      seen[std::size_t(o)] = true;
      const double cos = cosine_sim(w.categories[std::size_t(o)].text_proto,
                                    w.categories[std::size_t(c)].text_proto);
      CHECK(cos <= prev);
      prev = cos;
    }
  }
  // A sibling pair is each partner's closest lookalike by construction.
  for (int c : {0, 4, 8}) {
    CHECK(confusable_base_categories(w, c, 1)[0] == c + 1);
    CHECK(confusable_base_categories(w, c + 1, 1)[0] == c);
  }
  // k is clamped to the number of other base categories.
  const WorldSpec tiny = generate_world(2, 1, 16, 8, 0.1, 5);
  const std::vector<int> only = confusable_base_categories(tiny, 0, 3);
  REQUIRE(only.size() == 1);
  CHECK(only[0] == 1);
  CHECK_THROWS_AS((void)confusable_base_categories(w, -1, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)confusable_base_categories(w, 14, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)confusable_base_categories(w, 0, 0),
                  std::invalid_argument);
  const WorldSpec single = generate_world(1, 2, 16, 8, 0.1, 5);
  CHECK_THROWS_AS((void)confusable_base_categories(single, 0, 3),
                  std::invalid_argument);
}

TEST_CASE("mismatched pairings: argument validation") {
  const WorldSpec w = generate_world(6, 2, 16, 8, 0.1, 5);
  CHECK_THROWS_AS((void)sample_regions(w, 10, std::nullopt, 0, 1,
                                       LabelMode::eval, 0.05, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)sample_regions(w, 10, std::nullopt, 0, 1,
                                       LabelMode::train, 0.05, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)sample_regions(w, 10, std::nullopt, 0, 1,
                                       LabelMode::train, 0.05, -0.1),
                  std::invalid_argument);
  const WorldSpec single = generate_world(1, 2, 16, 8, 0.1, 5);
  CHECK_THROWS_AS((void)sample_regions(single, 10, std::nullopt, 0, 1,
                                       LabelMode::train, 0.05, 0.2),
                  std::invalid_argument);
  CHECK_NOTHROW((void)sample_regions(single, 10, std::nullopt, 0, 1,
                                     LabelMode::train, 0.05, 0.0));
}
