#include "pica/world.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <algorithm>

#include "pica/embedding.hpp"
#include "pica/kernels.hpp"
#include "pica/rng.hpp"
#include "pica/text_io.hpp"

namespace pica {

namespace {

// Rotation planes are fixed per (kind, d_v): a shifted domain is the same
// transformation for every world and every severity, only the angle grows.
std::vector<int> rotation_pairing(int d_v) {
  std::vector<int> perm(d_v);
  for (int i = 0; i < d_v; ++i) perm[i] = i;
  Engine rng = make_engine(derive_seed(
      0xC0DE5EEDull, stream::corruption,
      (static_cast<std::uint64_t>(CorruptionKind::subspace_rotation) << 16) ^
          static_cast<std::uint64_t>(d_v)));
  shuffle_values(rng, perm);
  return perm;
}

struct CorruptionContext {
  CorruptionSpec spec;
  std::vector<int> planes;     // rotation pairing

  CorruptionContext(const WorldSpec& world, const CorruptionSpec& s) : spec(s) {
    if (spec.kind == CorruptionKind::subspace_rotation) {
      planes = rotation_pairing(world.d_v);
    }
  }

  void apply(Vec& f, int severity, Engine& region_rng) const {
    const double scale = spec.severity_scale[severity - 1];
    const int d = static_cast<int>(f.size());
    switch (spec.kind) {
      case CorruptionKind::additive_noise: {
        const double unit = scale / std::sqrt(static_cast<double>(d));
        for (int k = 0; k < d; ++k) f[k] += unit * gaussian(region_rng);
        break;
      }
      case CorruptionKind::subspace_rotation: {
        const double c = std::cos(scale), s = std::sin(scale);
        for (int j = 0; j + 1 < d; j += 2) {
          const int a = planes[j], b = planes[j + 1];
          const double fa = f[a], fb = f[b];
          f[a] = c * fa - s * fb;
          f[b] = s * fa + c * fb;
        }
        break;
      }
      case CorruptionKind::contrast_scale: {
        // Gain reduction in feature space: the signal attenuates while a
        // severity-proportional sensor-noise floor stays behind, so the
        // signal-to-noise ratio genuinely collapses instead of the feature
        // being affinely reparameterized.
        const double floor_unit =
            0.6 * scale / std::sqrt(static_cast<double>(d));
        for (int k = 0; k < d; ++k) {
          f[k] = (1.0 - scale) * f[k] + floor_unit * gaussian(region_rng);
        }
        break;
      }
      case CorruptionKind::coordinate_dropout: {
        std::vector<int> order(d);
        for (int k = 0; k < d; ++k) order[k] = k;
        shuffle_values(region_rng, order);
        const int drop = static_cast<int>(std::lround(scale * d));
        for (int k = 0; k < drop && k < d; ++k) f[order[k]] = 0.0;
        break;
      }
    }
  }
};

std::vector<std::string> tokenize(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : tokens_(tokenize(text)) {}

  const std::string& next(const char* what) {
    if (pos_ >= tokens_.size()) {
      throw std::runtime_error(std::string(what) + ": unexpected end of input");
    }
    return tokens_[pos_++];
  }

  void expect(const char* literal) {
    const std::string& tok = next(literal);
    if (tok != literal) {
      throw std::runtime_error(std::string("expected '") + literal +
                               "', found '" + tok + "'");
    }
  }

  double number(const char* what) { return parse_double(next(what), what); }
  long long integer(const char* what) { return parse_int(next(what), what); }

 private:
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

Vec read_vec(TokenReader& r, int n, const char* what) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = r.number(what);
  return v;
}

const char* split_name(Split s) { return s == Split::base ? "base" : "novel"; }

Split split_from_name(const std::string& s) {
  if (s == "base") return Split::base;
  if (s == "novel") return Split::novel;
  throw std::runtime_error("unknown split '" + s + "'");
}

}  // namespace

CorruptionSpec default_corruption(CorruptionKind kind) {
  CorruptionSpec spec;
  spec.kind = kind;
  switch (kind) {
    case CorruptionKind::additive_noise:
      spec.severity_scale = {0.2, 0.45, 0.75, 1.1, 1.5};
      break;
    case CorruptionKind::subspace_rotation:
      spec.severity_scale = {0.15, 0.3, 0.5, 0.75, 1.05};
      break;
    case CorruptionKind::contrast_scale:
      spec.severity_scale = {0.15, 0.3, 0.45, 0.6, 0.75};
      break;
    case CorruptionKind::coordinate_dropout:
      spec.severity_scale = {0.1, 0.2, 0.3, 0.45, 0.6};
      break;
  }
  return spec;
}

const char* corruption_name(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::additive_noise: return "additive_noise";
    case CorruptionKind::subspace_rotation: return "subspace_rotation";
    case CorruptionKind::contrast_scale: return "contrast_scale";
    case CorruptionKind::coordinate_dropout: return "coordinate_dropout";
  }
  throw std::logic_error("corruption_name: bad kind");
}

CorruptionKind corruption_from_name(const std::string& name) {
  for (int k = 0; k < kCorruptionKinds; ++k) {
    const auto kind = static_cast<CorruptionKind>(k);
    if (name == corruption_name(kind)) return kind;
  }
  throw std::runtime_error("unknown corruption kind '" + name + "'");
}

int domain_id_for(const std::optional<CorruptionSpec>& corruption) {
  return corruption ? 1 + static_cast<int>(corruption->kind) : 0;
}

std::string domain_name(int domain_id) {
  if (domain_id == 0) return "clean";
  if (domain_id >= 1 && domain_id <= kCorruptionKinds) {
    return corruption_name(static_cast<CorruptionKind>(domain_id - 1));
  }
  throw std::invalid_argument("domain_name: unknown domain id");
}

WorldSpec generate_world(int n_base, int n_novel, int d_v, int d_t,
                         double cluster_noise, double sibling_blend,
                         std::uint64_t seed) {
  if (n_base < 1) throw std::invalid_argument("generate_world: n_base < 1");
  if (n_novel < 0) throw std::invalid_argument("generate_world: n_novel < 0");
  if (d_t < 2) throw std::invalid_argument("generate_world: d_t < 2");
  if (d_v < d_t) {
    throw std::invalid_argument(
        "generate_world: d_v must be >= d_t for an orthonormal lift");
  }
  if (cluster_noise < 0.0) {
    throw std::invalid_argument("generate_world: negative cluster_noise");
  }
  if (sibling_blend < 0.05 || sibling_blend > 2.0) {
    throw std::invalid_argument(
        "generate_world: sibling_blend must lie in [0.05, 2]");
  }

  WorldSpec world;
  world.d_v = d_v;
  world.d_t = d_t;
  world.n_base = n_base;
  world.n_novel = n_novel;
  world.cluster_noise = cluster_noise;
  world.seed = seed;

  Engine rng = make_engine(derive_seed(seed, stream::world));
  const int n_cat = n_base + n_novel;

  // Unit text prototypes. Every fourth prototype is redrawn as a blend of
  // its predecessor and a fresh direction scaled by sibling_blend, so a fixed
  // share of the category population forms confusable sibling pairs (cos of
  // roughly 1/sqrt(1 + blend^2)) while the rest stays well separated. Region
  // hardness is then a persistent property of the category neighborhood, not
  // an accident of sample noise.
  std::vector<Vec> protos;
  protos.reserve(n_cat);
  while (static_cast<int>(protos.size()) < n_cat) {
    Vec t = gaussian_vector(rng, d_t);
    double norm = std::sqrt(kernels::dot(t.data(), t.data(), t.size()));
    if (norm < 1e-8) continue;
    for (double& x : t) x /= norm;
    const std::size_t c = protos.size();
    if (c % 4 == 1) {
      const Vec& prev = protos[c - 1];
      for (int k = 0; k < d_t; ++k) t[k] = prev[k] + sibling_blend * t[k];
      norm = std::sqrt(kernels::dot(t.data(), t.data(), t.size()));
      if (norm < 1e-8) continue;
      for (double& x : t) x /= norm;
    }
    protos.push_back(std::move(t));
  }

  // Column-orthonormal lift A (d_v x d_t) by modified Gram-Schmidt.
  Matrix lift(d_v, d_t);
  for (int j = 0; j < d_t; ++j) {
    for (;;) {
      Vec v = gaussian_vector(rng, d_v);
      for (int k = 0; k < j; ++k) {
        double proj = 0.0;
        for (int i = 0; i < d_v; ++i) proj += v[i] * lift.at(i, k);
        for (int i = 0; i < d_v; ++i) v[i] -= proj * lift.at(i, k);
      }
      double norm = std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
      if (norm < 1e-8) continue;
      for (int i = 0; i < d_v; ++i) lift.at(i, j) = v[i] / norm;
      break;
    }
  }

  world.ground_truth_map = Matrix(d_t, d_v);
  for (int t = 0; t < d_t; ++t) {
    for (int i = 0; i < d_v; ++i) world.ground_truth_map.at(t, i) = lift.at(i, t);
  }

  const double anchor_noise = 0.5 * cluster_noise / std::sqrt(double(d_v));
  world.categories.resize(n_cat);
  for (int c = 0; c < n_cat; ++c) {
    CategorySpec& cat = world.categories[c];
    cat.id = c;
    cat.split = c < n_base ? Split::base : Split::novel;
    cat.text_proto = protos[c];
    cat.visual_anchor.assign(d_v, 0.0);
    for (int i = 0; i < d_v; ++i) {
      double acc = 0.0;
      for (int t = 0; t < d_t; ++t) acc += lift.at(i, t) * protos[c][t];
      cat.visual_anchor[i] = acc + anchor_noise * gaussian(rng);
    }
  }
  return world;
}

WorldSpec generate_world(int n_base, int n_novel, int d_v, int d_t,
                         double cluster_noise, std::uint64_t seed) {
  return generate_world(n_base, n_novel, d_v, d_t, cluster_noise, 0.55, seed);
}

Vec augment(const Vec& f, double jitter_scale, std::uint64_t seed) {
  if (jitter_scale < 0.0) throw std::invalid_argument("augment: negative jitter");
  Engine rng = make_engine(seed);
  const double gain = uniform_in(rng, 0.9, 1.1);
  Vec out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    out[k] = gain * f[k] + jitter_scale * gaussian(rng);
  }
  return out;
}

std::vector<RegionSample> sample_regions(
    const WorldSpec& world, int n,
    const std::optional<CorruptionSpec>& corruption, int severity,
    std::uint64_t seed, LabelMode mode, double jitter_scale,
    double mismatch_rate) {
  if (n < 1) throw std::invalid_argument("sample_regions: n < 1");
  if (world.categories.empty()) {
    throw std::invalid_argument("sample_regions: empty world");
  }
  if (mismatch_rate < 0.0 || mismatch_rate >= 1.0) {
    throw std::invalid_argument("sample_regions: mismatch_rate outside [0, 1)");
  }
  if (mismatch_rate > 0.0) {
    if (mode == LabelMode::eval) {
      throw std::invalid_argument(
          "sample_regions: mismatch applies to training draws only");
    }
    if (world.n_base < 2) {
      throw std::invalid_argument(
          "sample_regions: mismatch needs at least two base categories");
    }
  }
  if (corruption) {
    if (severity < 1 || severity > kSeverityLevels) {
      throw std::invalid_argument("sample_regions: severity outside 1..5");
    }
    for (int s = 1; s < kSeverityLevels; ++s) {
      if (!(corruption->severity_scale[s] > corruption->severity_scale[s - 1])) {
        throw std::invalid_argument(
            "sample_regions: severity scale not strictly increasing");
      }
    }
  } else if (severity != 0) {
    throw std::invalid_argument("sample_regions: severity without corruption");
  }

  const int domain = domain_id_for(corruption);
  std::optional<CorruptionContext> ctx;
  if (corruption) ctx.emplace(world, *corruption);

  std::vector<std::vector<int>> confusable;
  if (mismatch_rate > 0.0) {
    confusable.resize(world.categories.size());
    for (std::size_t c = 0; c < world.categories.size(); ++c) {
      confusable[c] = confusable_base_categories(world, static_cast<int>(c),
                                                 kConfusablePool);
    }
  }

  Engine cat_rng = make_engine(derive_seed(seed, stream::category));
  std::vector<RegionSample> regions(n);
  for (int i = 0; i < n; ++i) {
    const std::size_t c = uniform_index(cat_rng, world.categories.size());
    const CategorySpec& cat = world.categories[c];

    RegionSample& r = regions[i];
    r.id = i;
    r.split = cat.split;
    r.domain_id = domain;
    r.severity = severity;
    if (mode == LabelMode::eval || cat.split == Split::base) r.category = cat.id;

    Engine noise_rng = make_engine(derive_seed(seed, stream::region_noise, i));
    r.feature.resize(world.d_v);
    for (int k = 0; k < world.d_v; ++k) {
      r.feature[k] = cat.visual_anchor[k] + world.cluster_noise * gaussian(noise_rng);
    }
    if (ctx) {
      Engine corrupt_rng = make_engine(derive_seed(seed, stream::corruption, i));
      ctx->apply(r.feature, severity, corrupt_rng);
    }
    r.feature_aug =
        augment(r.feature, jitter_scale, derive_seed(seed, stream::augment, i));

    if (mismatch_rate > 0.0) {
      Engine mis_rng = make_engine(derive_seed(seed, stream::mismatch, i));
      if (uniform_in(mis_rng, 0.0, 1.0) < mismatch_rate) {
        // Wrong pairing: one of the lookalike base categories of the region's
        // own. The wrong anchor gets the same per-coordinate spread a mapped
        // honest feature would have, so mismatched pairs are not separable
        // by scale — only by the association being wrong.
        const std::vector<int>& pool = confusable[c];
        const int wrong = pool[uniform_index(mis_rng, pool.size())];
        r.mismatched = true;
        r.confusable = pool;
        r.wrong_text.resize(world.d_t);
        const Vec& proto = world.categories[wrong].text_proto;
        for (int k = 0; k < world.d_t; ++k) {
          r.wrong_text[k] = proto[k] + world.cluster_noise * gaussian(mis_rng);
        }
        // The label is left correct: annotation quality is a separate matter
        // from pairing quality, and the supervised signal stays clean.
      }
    }
  }
  return regions;
}

Vec map_to_text(const WorldSpec& world, const Vec& feature) {
  if (static_cast<int>(feature.size()) != world.d_v) {
    throw std::invalid_argument("map_to_text: dimension mismatch");
  }
  Vec out(world.d_t);
  for (int t = 0; t < world.d_t; ++t) {
    out[t] = kernels::dot(world.ground_truth_map.row(t), feature.data(), world.d_v);
  }
  return out;
}

std::vector<int> confusable_base_categories(const WorldSpec& world,
                                            int category, int k) {
  if (world.n_base < 2) {
    throw std::invalid_argument(
        "confusable_base_categories: needs at least two base categories");
  }
  if (category < 0 || category >= static_cast<int>(world.categories.size())) {
    throw std::invalid_argument("confusable_base_categories: bad category id");
  }
  if (k < 1) {
    throw std::invalid_argument("confusable_base_categories: k must be >= 1");
  }
  const Vec& own = world.categories[category].text_proto;
  std::vector<std::pair<double, int>> scored;
  scored.reserve(static_cast<std::size_t>(world.n_base));
  for (int c = 0; c < world.n_base; ++c) {
    if (c == category) continue;
    scored.emplace_back(cosine_sim(world.categories[c].text_proto, own), c);
  }
  // Descending similarity; ties broken by category id so the list is stable.
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
  std::vector<int> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = scored[i].second;
  return out;
}

Matrix base_prototypes(const WorldSpec& world) {
  Matrix protos(world.n_base, world.d_t);
  for (int c = 0; c < world.n_base; ++c) {
    protos.set_row(c, world.categories[c].text_proto);
  }
  return protos;
}

Matrix all_prototypes(const WorldSpec& world) {
  Matrix protos(world.categories.size(), world.d_t);
  for (std::size_t c = 0; c < world.categories.size(); ++c) {
    protos.set_row(c, world.categories[c].text_proto);
  }
  return protos;
}

std::string world_to_text(const WorldSpec& world) {
  std::string out = "pica-world 1\n";
  out += "seed " + std::to_string(world.seed) + "\n";
  out += "dims " + std::to_string(world.d_v) + " " + std::to_string(world.d_t) + "\n";
  out += "counts " + std::to_string(world.n_base) + " " + std::to_string(world.n_novel) + "\n";
  out += "cluster_noise " + g17(world.cluster_noise) + "\n";
  for (const auto& cat : world.categories) {
    out += "category " + std::to_string(cat.id) + " " + split_name(cat.split);
    append_values(out, cat.text_proto);
    append_values(out, cat.visual_anchor);
    out.push_back('\n');
  }
  for (int t = 0; t < world.d_t; ++t) {
    out += "map_row";
    append_values(out, world.ground_truth_map.row_span(t));
    out.push_back('\n');
  }
  out += "end\n";
  return out;
}

WorldSpec world_from_text(const std::string& text) {
  TokenReader r(text);
  r.expect("pica-world");
  if (r.integer("world version") != 1) {
    throw std::runtime_error("world_from_text: unsupported version");
  }
  WorldSpec w;
  r.expect("seed");
  w.seed = static_cast<std::uint64_t>(r.integer("seed"));
  r.expect("dims");
  w.d_v = static_cast<int>(r.integer("d_v"));
  w.d_t = static_cast<int>(r.integer("d_t"));
  r.expect("counts");
  w.n_base = static_cast<int>(r.integer("n_base"));
  w.n_novel = static_cast<int>(r.integer("n_novel"));
  r.expect("cluster_noise");
  w.cluster_noise = r.number("cluster_noise");
  const int n_cat = w.n_base + w.n_novel;
  w.categories.resize(n_cat);
  for (int c = 0; c < n_cat; ++c) {
    r.expect("category");
    CategorySpec& cat = w.categories[c];
    cat.id = static_cast<int>(r.integer("category id"));
    cat.split = split_from_name(r.next("split"));
    cat.text_proto = read_vec(r, w.d_t, "text_proto");
    cat.visual_anchor = read_vec(r, w.d_v, "visual_anchor");
  }
  w.ground_truth_map = Matrix(w.d_t, w.d_v);
  for (int t = 0; t < w.d_t; ++t) {
    r.expect("map_row");
    Vec row = read_vec(r, w.d_v, "map_row");
    w.ground_truth_map.set_row(t, row);
  }
  r.expect("end");
  return w;
}

std::string regions_to_text(const std::vector<RegionSample>& regions, int d_v,
                            std::uint64_t seed, LabelMode mode) {
  std::string out = "pica-regions 1\n";
  out += "seed " + std::to_string(seed) + "\n";
  out += "dim " + std::to_string(d_v) + "\n";
  out += "count " + std::to_string(regions.size()) + "\n";
  out += std::string("labeling ") + (mode == LabelMode::train ? "train" : "eval") + "\n";
  for (const auto& r : regions) {
    out += "region " + std::to_string(r.id) + " " + split_name(r.split) + " " +
           std::to_string(r.domain_id) + " " + std::to_string(r.severity) + " " +
           (r.category ? std::to_string(*r.category) : std::string("-"));
    append_values(out, r.feature);
    append_values(out, r.feature_aug);
    out.push_back('\n');
  }
  out += "end\n";
  return out;
}

std::vector<RegionSample> regions_from_text(const std::string& text) {
  TokenReader r(text);
  r.expect("pica-regions");
  if (r.integer("regions version") != 1) {
    throw std::runtime_error("regions_from_text: unsupported version");
  }
  r.expect("seed");
  r.integer("seed");
  r.expect("dim");
  const int d_v = static_cast<int>(r.integer("dim"));
  r.expect("count");
  const long long n = r.integer("count");
  r.expect("labeling");
  const std::string mode = r.next("labeling");
  if (mode != "train" && mode != "eval") {
    throw std::runtime_error("regions_from_text: bad labeling mode");
  }
  std::vector<RegionSample> regions(n);
  for (long long i = 0; i < n; ++i) {
    r.expect("region");
    RegionSample& reg = regions[i];
    reg.id = static_cast<int>(r.integer("region id"));
    reg.split = split_from_name(r.next("split"));
    reg.domain_id = static_cast<int>(r.integer("domain"));
    reg.severity = static_cast<int>(r.integer("severity"));
    const std::string& label = r.next("label");
    if (label != "-") reg.category = static_cast<int>(parse_int(label, "label"));
    reg.feature = read_vec(r, d_v, "feature");
    reg.feature_aug = read_vec(r, d_v, "feature_aug");
  }
  r.expect("end");
  return regions;
}

}  // namespace pica
