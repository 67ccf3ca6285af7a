#include "pica/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "pica/embedding.hpp"
#include "pica/kernels.hpp"
#include "pica/rng.hpp"

namespace pica {

namespace {

Matrix map_rows_to_text(const WorldSpec& world, const Matrix& features) {
  Matrix out;
  kernels::affine_batch(world.ground_truth_map, Vec(world.d_t, 0.0), features, out);
  return out;
}

Matrix gather_rows(const Matrix& src, std::span<const int> rows) {
  Matrix out(rows.size(), src.cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.set_row(k, src.row_span(rows[k]));
  }
  return out;
}

// Selected indices for one iteration, plus the curriculum bookkeeping that
// goes into the log row.
struct Selection {
  std::vector<int> indices;
  double alpha = 0.0;
  std::array<double, kCurriculumTiers> ratios{};
  std::array<int, kCurriculumTiers> counts{};
  int penalized_selected = 0;
};

Selection select_regions(const ExperimentConfig& cfg,
                         const std::vector<ProxyScores>& proxies, double rho,
                         std::uint64_t iter_seed) {
  const int n = static_cast<int>(proxies.size());
  const int budget = cfg.curriculum.sample_budget;
  Selection sel;
  if (cfg.sampler == SamplerArm::uniform) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    Engine rng = make_engine(derive_seed(iter_seed, stream::sampler));
    shuffle_values(rng, order);
    order.resize(std::min(n, budget));
    sel.indices = std::move(order);
    return sel;
  }

  Vec h(n), q(n);
  for (int i = 0; i < n; ++i) {
    q[i] = proxies[i].q;
    // h_only keeps the ambiguity ordering; q_only replaces it with inverse
    // signal strength so weak-signal regions count as "hard".
    h[i] = cfg.sampler == SamplerArm::q_only ? -proxies[i].q : proxies[i].h;
  }
  CurriculumConfig ccfg = cfg.curriculum;
  if (cfg.sampler != SamplerArm::pica) ccfg.quality_percentile = 0.0;
  SamplerOutput out = sample_curriculum(h, q, rho, ccfg, iter_seed);
  sel.indices = std::move(out.selected);
  sel.alpha = out.alpha;
  sel.ratios = out.ratios_used;
  sel.counts = out.per_tier_counts;
  sel.penalized_selected = out.penalized_selected;
  return sel;
}

// Mixes each selected region's augmented view toward a same-tier partner
// while the clean view stays the alignment target, so the loss demands
// tolerance to feature-space displacement. Partners follow a fixed ring
// inside each tier block: the displacement a region sees persists while it
// keeps being selected; one blend weight per step (the usual per-batch mixing
// weight) rescales the whole displacement field without reshuffling it.
void apply_mixup(Matrix& f_aug_sel,
                 const std::array<int, kCurriculumTiers>& tier_counts,
                 std::uint64_t mix_seed) {
  const std::size_t n = f_aug_sel.rows;
  if (n < 2) return;
  int counted = 0;
  for (int c : tier_counts) counted += c;
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // offset, length
  if (counted == static_cast<int>(n)) {
    std::size_t off = 0;
    for (int c : tier_counts) {
      if (c > 0) blocks.emplace_back(off, static_cast<std::size_t>(c));
      off += static_cast<std::size_t>(c);
    }
  } else {
    blocks.emplace_back(0, n);  // no tier structure: one ring over the batch
  }
  Engine rng = make_engine(mix_seed);
  const double beta = uniform_in(rng, 0.6, 1.0);
  const Matrix original = f_aug_sel;
  for (const auto& [off, len] : blocks) {
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t k = off + i;
      const std::size_t p = off + (i + 1) % len;
      double* dst = f_aug_sel.row(k);
      const double* self = original.row(k);
      const double* other = original.row(p);
      for (std::size_t j = 0; j < f_aug_sel.cols; ++j) {
        dst[j] = beta * self[j] + (1.0 - beta) * other[j];
      }
    }
  }
}

}  // namespace

RunArtifact run_training(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const WorldSpec world = generate_world(cfg.n_base, cfg.n_novel, cfg.d_v,
                                         cfg.d_t, cfg.cluster_noise,
                                         cfg.sibling_blend, cfg.seed);
  const Matrix protos = base_prototypes(world);

  RunArtifact artifact;
  artifact.config = cfg;
  artifact.head = init_head(cfg.d_v, cfg.d_t, cfg.seed);
  artifact.head.log_tau = std::log(cfg.tau_init);
  artifact.log.reserve(cfg.iterations);

  FeatureQueue memory(cfg.queue_capacity, cfg.d_t);
  SgdMomentum opt;
  opt.momentum = cfg.momentum;
  opt.init(artifact.head);

  // The run trains on a fixed pool of regions, as over a finite dataset:
  // the same regions recur across iterations, so the curriculum schedules a
  // persistent population rather than a fresh draw every step.
  const std::vector<RegionSample> pool =
      sample_regions(world, cfg.pool_regions, std::nullopt, 0,
                     derive_seed(cfg.seed, stream::batch), LabelMode::train,
                     cfg.augment_jitter, cfg.mismatch_rate);

  Vec prev_grad;
  const int T = cfg.iterations;
  for (int t = 1; t <= T; ++t) {
    const double rho = static_cast<double>(t) / static_cast<double>(T);
    const std::uint64_t batch_seed = derive_seed(cfg.seed, stream::batch, t);

    // Draw the batch without replacement from the pool; each appearance of a
    // region gets a fresh augmented view.
    Engine batch_rng = make_engine(batch_seed);
    std::vector<int> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    const std::size_t n_batch = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t i = 0; i < n_batch; ++i) {
      const std::size_t j = i + uniform_index(batch_rng, order.size() - i);
      std::swap(order[i], order[j]);
    }

    std::vector<const RegionSample*> batch(n_batch);
    Matrix f_clean(n_batch, cfg.d_v), f_aug(n_batch, cfg.d_v);
    // A mismatched region's association is not even stable: every appearance
    // matches it to a fresh draw from its lookalike categories, the way
    // on-the-fly region-text matching keeps flickering on regions it cannot
    // pin down. One draw per appearance feeds both the proxy anchors and the
    // loss.
    std::vector<Vec> wrong_now(n_batch);
    for (std::size_t i = 0; i < n_batch; ++i) {
      const RegionSample& r = pool[static_cast<std::size_t>(order[i])];
      batch[i] = &r;
      f_clean.set_row(i, r.feature);
      f_aug.set_row(i, augment(r.feature, cfg.augment_jitter,
                               derive_seed(batch_seed, stream::augment,
                                           static_cast<std::uint64_t>(order[i]))));
      if (r.mismatched) {
        Engine mis_rng = make_engine(derive_seed(
            batch_seed, stream::mismatch, static_cast<std::uint64_t>(order[i])));
        const int wrong =
            r.confusable[uniform_index(mis_rng, r.confusable.size())];
        const Vec& proto = world.categories[wrong].text_proto;
        Vec& anchor = wrong_now[i];
        anchor.resize(cfg.d_t);
        for (int k = 0; k < cfg.d_t; ++k) {
          anchor[k] = proto[k] + cfg.cluster_noise * gaussian(mis_rng);
        }
      }
    }

    const Matrix pseudo = project_batch(artifact.head, f_clean);
    // The text side of a region is its pairing, not a function of the view:
    // mismatched regions contribute their wrong anchor wherever text enters.
    Matrix anchors = map_rows_to_text(world, f_clean);
    for (std::size_t i = 0; i < n_batch; ++i) {
      if (!wrong_now[i].empty()) anchors.set_row(i, wrong_now[i]);
    }
    const std::vector<ProxyScores> proxies =
        compute_proxies(anchors, pseudo, &memory);

    Selection sel = select_regions(
        cfg, proxies, rho, derive_seed(cfg.seed, stream::sampler, t));

    StepBatch step;
    step.f_sel_clean = gather_rows(f_clean, sel.indices);
    step.f_sel_aug = gather_rows(f_aug, sel.indices);
    if (cfg.mixup) {
      apply_mixup(step.f_sel_aug, sel.counts,
                  derive_seed(cfg.seed, stream::mixup, t));
    }
    step.mapped_aug = map_rows_to_text(world, step.f_sel_aug);
    for (std::size_t i = 0; i < sel.indices.size(); ++i) {
      const Vec& wrong = wrong_now[static_cast<std::size_t>(sel.indices[i])];
      if (!wrong.empty()) step.mapped_aug.set_row(i, wrong);
    }

    std::vector<int> labeled_rows;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i]->category) labeled_rows.push_back(static_cast<int>(i));
    }
    step.f_labeled = gather_rows(f_clean, labeled_rows);
    step.label_proto.reserve(labeled_rows.size());
    for (int i : labeled_rows) step.label_proto.push_back(*batch[i]->category);
    step.base_protos = &protos;
    step.memory = &memory;
    step.lambda_curr = cfg.lambda_curr;
    step.mode = cfg.pseudo_words;
    step.memory_in_second_term = cfg.memory_in_second_term;

    auto [loss, grads] = step_forward_backward(step, artifact.head);

    IterationRow row;
    row.iteration = t;
    row.rho = rho;
    row.alpha = sel.alpha;
    row.ratios = sel.ratios;
    row.counts = sel.counts;
    row.penalized_selected = sel.penalized_selected;
    row.selected = static_cast<int>(sel.indices.size());
    row.loss_ground = loss.l_ground;
    row.loss_curr = loss.l_curr;
    row.loss_total = loss.l_total;
    row.grad_norm = grads.norm();

    const Vec flat = grads.flatten();
    if (!prev_grad.empty()) {
      row.gcs = gradient_conflict_score(flat, prev_grad);
    }
    prev_grad = flat;

    // TEMP DEBUG: branch-level GCS decomposition, env-gated.
    if (const char* dbg = std::getenv("PICA_DEBUG_BRANCH_GCS")) {
      static Vec prev_ground, prev_curr;
      static std::ofstream dbg_out;
      if (!dbg_out.is_open()) {
        dbg_out.open(dbg);
        dbg_out << "iteration,gcs_ground,gcs_curr,norm_ground,norm_curr\n";
      }
      StepBatch ground_only = step;
      ground_only.lambda_curr = 0.0;
      auto [lg, gg] = step_forward_backward(ground_only, artifact.head);
      const Vec g_ground = gg.flatten();
      Vec g_curr(flat.size());
      for (std::size_t i = 0; i < flat.size(); ++i) {
        g_curr[i] = (flat[i] - g_ground[i]) / cfg.lambda_curr;
      }
      auto nrm = [](const Vec& v) {
        return std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
      };
      dbg_out << t;
      if (!prev_ground.empty() && nrm(prev_ground) > 0 && nrm(g_ground) > 0) {
        dbg_out << ',' << gradient_conflict_score(g_ground, prev_ground);
      } else {
        dbg_out << ',';
      }
      if (!prev_curr.empty() && nrm(prev_curr) > 0 && nrm(g_curr) > 0) {
        dbg_out << ',' << gradient_conflict_score(g_curr, prev_curr);
      } else {
        dbg_out << ',';
      }
      dbg_out << ',' << nrm(g_ground) << ',' << nrm(g_curr) << '\n';
      prev_ground = g_ground;
      prev_curr = g_curr;
    }

    opt.step(artifact.head, grads, cosine_lr(cfg.learning_rate, t - 1, T));
    row.tau = artifact.head.tau();
    artifact.log.push_back(row);

    // The memory holds the pseudo-words that fed this step's negative pools.
    if (cfg.pseudo_words == PseudoWordMode::aug_only) {
      memory.push(project_batch(artifact.head, f_aug));
    } else {
      memory.push(pseudo);
    }
  }

  artifact.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return artifact;
}

namespace {

Matrix logit_rows(const std::vector<RegionSample>& regions,
                        const ProjectionHead& head, const Matrix& protos) {
  Matrix logits(regions.size(), protos.rows);
  Vec proto_norms;
  kernels::row_norms(protos, proto_norms);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Vec w = project(head, regions[i].feature);
    const double wn = std::sqrt(kernels::dot(w.data(), w.data(), w.size()));
    if (wn <= kZeroNormEps) {
      throw std::runtime_error("evaluation: zero-norm pseudo-word");
    }
    double* row = logits.row(i);
    for (std::size_t c = 0; c < protos.rows; ++c) {
      row[c] = kernels::dot(w.data(), protos.row(c), w.size()) /
               (wn * proto_norms[c]);
    }
  }
  return logits;
}

std::vector<ProxyScores> eval_proxies(const WorldSpec& world,
                                      const ProjectionHead& head,
                                      const std::vector<RegionSample>& regions) {
  Matrix features(regions.size(), world.d_v);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    features.set_row(i, regions[i].feature);
  }
  const Matrix pseudo = project_batch(head, features);
  const Matrix anchors = map_rows_to_text(world, features);
  return compute_proxies(anchors, pseudo, nullptr);
}

}  // namespace

MetricReport run_evaluation(const RunArtifact& artifact) {
  const std::array<int, 4> domains{1, 2, 3, 4};
  const std::array<int, 5> severities{1, 2, 3, 4, 5};
  return run_evaluation(artifact, domains, severities);
}

MetricReport run_evaluation(const RunArtifact& artifact,
                            std::span<const int> domain_ids,
                            std::span<const int> severities) {
  const ExperimentConfig& cfg = artifact.config;
  cfg.validate();
  if (domain_ids.empty()) throw std::invalid_argument("evaluation: no domains");
  if (severities.empty()) throw std::invalid_argument("evaluation: no severities");
  for (int d : domain_ids) {
    if (d < 1 || d > kCorruptionKinds) {
      throw std::invalid_argument(
          "evaluation: unknown domain id " + std::to_string(d) +
          " (clean is always evaluated; shifted domains are 1..4)");
    }
  }
  for (int s : severities) {
    if (s < 1 || s > kSeverityLevels) {
      throw std::invalid_argument("evaluation: severity outside 1..5");
    }
  }

  const WorldSpec world = generate_world(cfg.n_base, cfg.n_novel, cfg.d_v,
                                         cfg.d_t, cfg.cluster_noise,
                                         cfg.sibling_blend, cfg.seed);
  const Matrix protos = all_prototypes(world);
  const std::uint64_t eval_seed = derive_seed(cfg.seed, stream::evaluation);

  const std::vector<RegionSample> clean_set =
      sample_regions(world, cfg.eval_regions, std::nullopt, 0, eval_seed,
                     LabelMode::eval, cfg.augment_jitter);
  const Matrix clean_logits = logit_rows(clean_set, artifact.head, protos);

  MetricReport report;
  report.seed = cfg.seed;
  report.retrieval_clean_novel =
      retrieval_score(clean_set, artifact.head, protos, SplitFilter::novel);
  report.retrieval_clean_base =
      retrieval_score(clean_set, artifact.head, protos, SplitFilter::base);

  Vec domain_retrievals, domain_gaps;
  for (int d : domain_ids) {
    const CorruptionSpec spec =
        default_corruption(static_cast<CorruptionKind>(d - 1));
    Vec sev_retrieval, sev_gap;
    for (int s : severities) {
      const std::vector<RegionSample> shifted =
          sample_regions(world, cfg.eval_regions, spec, s, eval_seed,
                         LabelMode::eval, cfg.augment_jitter);
      const Matrix shifted_logits =
          logit_rows(shifted, artifact.head, protos);
      double gap_acc = 0.0;
      for (std::size_t i = 0; i < shifted.size(); ++i) {
        gap_acc += ai_gap(clean_logits.row_span(i), shifted_logits.row_span(i));
      }
      EvalCell cell;
      cell.domain_id = d;
      cell.severity = s;
      cell.retrieval_novel =
          retrieval_score(shifted, artifact.head, protos, SplitFilter::novel);
      cell.ai_gap_mean = gap_acc / static_cast<double>(shifted.size());
      sev_retrieval.push_back(cell.retrieval_novel);
      sev_gap.push_back(cell.ai_gap_mean);
      report.cells.push_back(cell);
    }
    DomainAggregate agg;
    agg.domain_id = d;
    agg.retrieval_mean = domain_mean(sev_retrieval);
    agg.ai_gap_mean = domain_mean(sev_gap);
    report.domains.push_back(agg);
    domain_retrievals.push_back(agg.retrieval_mean);
    domain_gaps.push_back(agg.ai_gap_mean);
  }
  report.overall_retrieval_shifted = overall_mean(domain_retrievals);
  report.overall_ai_gap = overall_mean(domain_gaps);

  // Ambiguity stability against the designated shift.
  const std::vector<RegionSample> stab_set = sample_regions(
      world, cfg.eval_regions, default_corruption(cfg.stability_domain),
      cfg.stability_severity, eval_seed, LabelMode::eval, cfg.augment_jitter);
  const std::vector<ProxyScores> px_clean =
      eval_proxies(world, artifact.head, clean_set);
  const std::vector<ProxyScores> px_shift =
      eval_proxies(world, artifact.head, stab_set);
  std::vector<int> ids(clean_set.size());
  for (std::size_t i = 0; i < clean_set.size(); ++i) ids[i] = clean_set[i].id;
  report.stability = stability_records(ids, px_clean, ids, px_shift);

  Vec q_sorted(px_clean.size());
  for (std::size_t i = 0; i < px_clean.size(); ++i) q_sorted[i] = px_clean[i].q;
  std::sort(q_sorted.begin(), q_sorted.end());
  const double q_median = quantile_sorted(q_sorted, 0.5);
  std::size_t top = 0, stable = 0;
  for (const StabilityRecord& r : report.stability) {
    if (r.q_clean >= q_median) {
      ++top;
      if (std::fabs(r.delta_h) < kStableDeltaH) ++stable;
    }
  }
  report.stable_top_q_fraction =
      top == 0 ? 0.0 : static_cast<double>(stable) / static_cast<double>(top);

  // Gradient-conflict summary over the first half of training.
  double acc = 0.0;
  std::size_t count = 0;
  for (const IterationRow& row : artifact.log) {
    if (row.iteration <= cfg.iterations / 2 && row.gcs) {
      acc += *row.gcs;
      ++count;
    }
  }
  if (count > 0) report.gcs_first_half_mean = acc / static_cast<double>(count);
  return report;
}

SuiteResult run_suite(std::span<const ArmSpec> arms, int seeds,
                      std::uint64_t base_seed) {
  if (arms.empty()) throw std::invalid_argument("run_suite: no arms");
  if (seeds < 1) throw std::invalid_argument("run_suite: seeds < 1");
  for (const ArmSpec& arm : arms) arm.config.validate();

  SuiteResult result;
  result.base_seed = base_seed;
  result.seeds = seeds;
  result.arms.resize(arms.size());
  for (std::size_t a = 0; a < arms.size(); ++a) {
    result.arms[a].name = arms[a].name;
  }

  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t run_seed = derive_seed(base_seed, stream::suite, s);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      ExperimentConfig cfg = arms[a].config;
      cfg.seed = run_seed;
      const RunArtifact artifact = run_training(cfg);
      const MetricReport report = run_evaluation(artifact);
      ArmSeedOutcome outcome;
      outcome.seed = run_seed;
      outcome.retrieval_shifted = report.overall_retrieval_shifted;
      outcome.retrieval_clean = report.retrieval_clean_novel;
      outcome.ai_gap = report.overall_ai_gap;
      outcome.stable_top_q_fraction = report.stable_top_q_fraction;
      outcome.gcs_first_half_mean = report.gcs_first_half_mean;
      result.arms[a].runs.push_back(outcome);
    }
  }

  for (ArmSummary& arm : result.arms) {
    double mean = 0.0;
    for (const auto& r : arm.runs) mean += r.retrieval_shifted;
    mean /= static_cast<double>(arm.runs.size());
    double var = 0.0;
    for (const auto& r : arm.runs) {
      var += (r.retrieval_shifted - mean) * (r.retrieval_shifted - mean);
    }
    var /= static_cast<double>(arm.runs.size());
    arm.retrieval_shifted_mean = mean;
    arm.retrieval_shifted_stddev = std::sqrt(var);
    double clean = 0.0, gap = 0.0, stab = 0.0;
    for (const auto& r : arm.runs) {
      clean += r.retrieval_clean;
      gap += r.ai_gap;
      stab += r.stable_top_q_fraction;
    }
    const double n = static_cast<double>(arm.runs.size());
    arm.retrieval_clean_mean = clean / n;
    arm.ai_gap_mean = gap / n;
    arm.stable_fraction_mean = stab / n;
  }
  return result;
}

}  // namespace pica
