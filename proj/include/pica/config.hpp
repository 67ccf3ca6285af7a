#pragma once
// Experiment configuration: one flat struct covering world construction,
// training, curriculum, method switches, and evaluation, plus a strict
// sectioned key = value file format (unknown keys are errors, defaults match
// the reference settings).

#include <cstdint>
#include <string>

#include "pica/losses.hpp"
#include "pica/sampler.hpp"
#include "pica/world.hpp"

namespace pica {

enum class SamplerArm { pica, uniform, h_only, q_only };

const char* sampler_arm_name(SamplerArm arm);
SamplerArm sampler_arm_from_name(const std::string& name);

const char* pseudo_word_mode_name(PseudoWordMode mode);
PseudoWordMode pseudo_word_mode_from_name(const std::string& name);

struct ExperimentConfig {
  // [world]
  int n_base = 48;
  int n_novel = 17;
  int d_v = 64;
  int d_t = 32;
  double cluster_noise = 0.1;
  double sibling_blend = 0.55;  // sibling prototype separation; smaller = closer
  double mismatch_rate = 0.04;  // share of training regions with a wrong text pairing

  // [training]
  int iterations = 2000;
  int batch_size = 256;
  int pool_regions = 8192;  // fixed training pool; batches are drawn from it
  double learning_rate = 0.1;
  double momentum = 0.9;
  double lambda_curr = 1.0;
  int queue_capacity = 4096;
  double augment_jitter = 0.05;
  double tau_init = kTauInit;
  bool memory_in_second_term = false;

  // [curriculum]  (sample_budget doubles as the uniform arm's draw size)
  CurriculumConfig curriculum;

  // [method]
  SamplerArm sampler = SamplerArm::pica;
  bool sas = true;
  bool mixup = true;
  PseudoWordMode pseudo_words = PseudoWordMode::both;

  // [evaluation]
  int eval_regions = 1024;
  CorruptionKind stability_domain = CorruptionKind::additive_noise;
  int stability_severity = 3;

  // [run]
  std::uint64_t seed = 7;

  // Errors on out-of-range values and inconsistent method combinations
  // (the uniform sampler is exactly the sas = off arm; every other sampler
  // requires sas = on).
  void validate() const;
};

// Canonical text form; parse(serialize(c)) == c field-for-field.
std::string config_to_text(const ExperimentConfig& cfg);

// Strict parser: unknown sections/keys, malformed values, and duplicate
// assignments raise errors naming the offending line. Missing keys keep
// their defaults.
ExperimentConfig config_from_text(const std::string& text);

ExperimentConfig config_from_file(const std::string& path);

// Applies one "section.key=value" override (the suite sweep hook).
void apply_override(ExperimentConfig& cfg, const std::string& dotted_key,
                    const std::string& value);

}  // namespace pica
