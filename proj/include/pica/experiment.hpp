#pragma once
// Experiment engine: the training loop (per-iteration proxies -> curriculum
// draw -> loss -> SGD update -> memory push), the evaluation pass over the
// corruption grid, and the multi-arm multi-seed suite with paired seeds.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pica/config.hpp"
#include "pica/metrics.hpp"
#include "pica/projection.hpp"

namespace pica {

struct IterationRow {
  int iteration = 0;  // 1-based
  double rho = 0.0;
  double alpha = 0.0;
  std::array<double, kCurriculumTiers> ratios{};  // easy, medium, hard
  std::array<int, kCurriculumTiers> counts{};
  int penalized_selected = 0;
  int selected = 0;
  double loss_ground = 0.0;
  double loss_curr = 0.0;
  double loss_total = 0.0;
  double tau = 0.0;
  double grad_norm = 0.0;
  std::optional<double> gcs;  // undefined on the first step / zero gradients
};

struct RunArtifact {
  ExperimentConfig config;
  ProjectionHead head;
  std::vector<IterationRow> log;
  double duration_seconds = 0.0;  // console-only; never serialized
};

RunArtifact run_training(const ExperimentConfig& cfg);

struct EvalCell {
  int domain_id = 0;
  int severity = 0;
  double retrieval_novel = 0.0;
  double ai_gap_mean = 0.0;
};

struct DomainAggregate {
  int domain_id = 0;
  double retrieval_mean = 0.0;
  double ai_gap_mean = 0.0;
};

struct MetricReport {
  std::uint64_t seed = 0;
  double retrieval_clean_novel = 0.0;
  double retrieval_clean_base = 0.0;
  std::vector<EvalCell> cells;             // shifted domains x severities
  std::vector<DomainAggregate> domains;
  double overall_retrieval_shifted = 0.0;  // mean of domain retrieval means
  double overall_ai_gap = 0.0;             // mean of domain gap means
  std::vector<StabilityRecord> stability;  // designated shift vs clean
  double stable_top_q_fraction = 0.0;      // |dh| < threshold among high-q half
  std::optional<double> gcs_first_half_mean;
};

// Full grid: shifted domains 1..4, severities 1..5.
MetricReport run_evaluation(const RunArtifact& artifact);

// Restricted grid. Domain ids must be shifted domains (1..4); severities
// must lie in 1..5. Unknown ids are errors.
MetricReport run_evaluation(const RunArtifact& artifact,
                            std::span<const int> domain_ids,
                            std::span<const int> severities);

struct ArmSpec {
  std::string name;
  ExperimentConfig config;
};

struct ArmSeedOutcome {
  std::uint64_t seed = 0;
  double retrieval_shifted = 0.0;
  double retrieval_clean = 0.0;
  double ai_gap = 0.0;
  double stable_top_q_fraction = 0.0;
  std::optional<double> gcs_first_half_mean;
};

struct ArmSummary {
  std::string name;
  std::vector<ArmSeedOutcome> runs;
  double retrieval_shifted_mean = 0.0;
  double retrieval_shifted_stddev = 0.0;
  double retrieval_clean_mean = 0.0;
  double ai_gap_mean = 0.0;
  double stable_fraction_mean = 0.0;
};

struct SuiteResult {
  std::uint64_t base_seed = 0;
  int seeds = 0;
  std::vector<ArmSummary> arms;
};

// Runs every arm on the same derived per-seed master seeds (paired worlds,
// batches, and evaluation sets across arms).
SuiteResult run_suite(std::span<const ArmSpec> arms, int seeds,
                      std::uint64_t base_seed);

}  // namespace pica
