#pragma once
// Synthetic embedding-space world with a known cross-modal ground truth.
//
// Each category owns a unit text prototype t_c (dimension d_t) and a visual
// anchor a_c (dimension d_v) with a_c ~= A t_c for a column-orthonormal lift
// A. The world's ground_truth_map G = A^T plays the frozen text-side encoder:
// G a_c recovers t_c up to small anchor noise, so a linear projection head can
// in principle align the modalities, but region features carry cluster noise,
// augmentation jitter, and (for shifted domains) a corruption operator.
//
// Corruption operators draw their per-region randomness from streams that do
// not depend on severity, so the same region degrades monotonically along the
// severity ladder and clean/corrupted sets sampled from one seed stay paired
// by region id.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pica/matrix.hpp"

namespace pica {

enum class Split { base, novel };

enum class LabelMode { train, eval };

enum class CorruptionKind {
  additive_noise = 0,
  subspace_rotation = 1,
  contrast_scale = 2,
  coordinate_dropout = 3,
};

inline constexpr int kCorruptionKinds = 4;
inline constexpr int kSeverityLevels = 5;

struct CategorySpec {
  int id = 0;
  Split split = Split::base;
  Vec text_proto;     // d_t, unit norm
  Vec visual_anchor;  // d_v
};

struct WorldSpec {
  int d_v = 0;
  int d_t = 0;
  int n_base = 0;
  int n_novel = 0;
  double cluster_noise = 0.1;
  std::uint64_t seed = 0;
  std::vector<CategorySpec> categories;  // ids 0..C-1, base block first
  Matrix ground_truth_map;               // d_t x d_v, rows orthonormal
};

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::additive_noise;
  std::array<double, kSeverityLevels> severity_scale{};  // strictly increasing
};

// Built-in severity ladder for each kind.
CorruptionSpec default_corruption(CorruptionKind kind);

const char* corruption_name(CorruptionKind kind);
CorruptionKind corruption_from_name(const std::string& name);

// Domain ids: 0 = clean, 1 + kind for shifted domains.
int domain_id_for(const std::optional<CorruptionSpec>& corruption);
std::string domain_name(int domain_id);

struct RegionSample {
  int id = 0;
  Split split = Split::base;
  std::optional<int> category;  // absent for unlabeled regions
  int domain_id = 0;
  int severity = 0;             // 0 iff domain_id == 0
  Vec feature;                  // region feature in the visual space
  Vec feature_aug;              // augmented view of the same region
  bool mismatched = false;      // training pairing noise: the text side of
                                // this region is a wrong category's anchor
  Vec wrong_text;               // that wrong text anchor; set iff mismatched
  std::vector<int> confusable;  // set iff mismatched: the lookalike categories
                                // the wrong pairing flickers between
};

// Build a world. Requires n_base >= 1, n_novel >= 0, d_t >= 2 and
// d_v >= d_t (the lift needs d_t orthonormal columns in d_v dimensions).
// sibling_blend sets how far a sibling prototype departs from its partner
// (smaller = more confusable pairs); must lie in [0.05, 2].
WorldSpec generate_world(int n_base, int n_novel, int d_v, int d_t,
                         double cluster_noise, double sibling_blend,
                         std::uint64_t seed);

// Same, with the default sibling separation.
WorldSpec generate_world(int n_base, int n_novel, int d_v, int d_t,
                         double cluster_noise, std::uint64_t seed);

// Additive jitter plus a small random gain; one engine per call.
Vec augment(const Vec& f, double jitter_scale, std::uint64_t seed);

// Draw n regions. Severity must be 0 without corruption and in 1..5 with it.
// LabelMode::train labels base regions only; LabelMode::eval labels all.
// Identical (world, n, seed) share category assignments and latent noise
// across corruption settings, pairing regions by id.
//
// mismatch_rate (train mode only, needs n_base >= 2) is the probability that
// a region's text pairing is wrong: its anchor is drawn around another base
// category's prototype. The region's visual feature stays an honest draw
// from its true category, and its label (when present) stays correct —
// pairing noise corrupts the cross-modal association, not the annotation.
std::vector<RegionSample> sample_regions(
    const WorldSpec& world, int n,
    const std::optional<CorruptionSpec>& corruption, int severity,
    std::uint64_t seed, LabelMode mode, double jitter_scale,
    double mismatch_rate = 0.0);

// G f: the frozen-encoder image of a visual feature in text space.
Vec map_to_text(const WorldSpec& world, const Vec& feature);

// How many lookalike base categories a mismatched pairing can flicker
// between. Pairing noise confuses a region with categories that *resemble*
// its own — a matcher does not pair a region with an arbitrary category.
inline constexpr int kConfusablePool = 3;

// The k base categories most similar to `category` by prototype cosine,
// excluding the category itself, most similar first. k is clamped to the
// number of other base categories; requires n_base >= 2.
std::vector<int> confusable_base_categories(const WorldSpec& world,
                                            int category, int k);

// Prototype matrices in ascending category-id order.
Matrix base_prototypes(const WorldSpec& world);
Matrix all_prototypes(const WorldSpec& world);

// Text round-trip. Bit-exact: parse(serialize(w)) reproduces every value.
std::string world_to_text(const WorldSpec& world);
WorldSpec world_from_text(const std::string& text);

std::string regions_to_text(const std::vector<RegionSample>& regions, int d_v,
                            std::uint64_t seed, LabelMode mode);
std::vector<RegionSample> regions_from_text(const std::string& text);

}  // namespace pica
