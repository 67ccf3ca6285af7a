#include "pica/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pica/text_io.hpp"

namespace pica {

const char* sampler_arm_name(SamplerArm arm) {
  switch (arm) {
    case SamplerArm::pica: return "pica";
    case SamplerArm::uniform: return "uniform";
    case SamplerArm::h_only: return "h_only";
    case SamplerArm::q_only: return "q_only";
  }
  throw std::logic_error("sampler_arm_name: bad arm");
}

SamplerArm sampler_arm_from_name(const std::string& name) {
  if (name == "pica") return SamplerArm::pica;
  if (name == "uniform") return SamplerArm::uniform;
  if (name == "h_only") return SamplerArm::h_only;
  if (name == "q_only") return SamplerArm::q_only;
  throw std::runtime_error("unknown sampler arm '" + name + "'");
}

const char* pseudo_word_mode_name(PseudoWordMode mode) {
  switch (mode) {
    case PseudoWordMode::clean_only: return "clean_only";
    case PseudoWordMode::aug_only: return "aug_only";
    case PseudoWordMode::both: return "both";
  }
  throw std::logic_error("pseudo_word_mode_name: bad mode");
}

PseudoWordMode pseudo_word_mode_from_name(const std::string& name) {
  if (name == "clean_only") return PseudoWordMode::clean_only;
  if (name == "aug_only") return PseudoWordMode::aug_only;
  if (name == "both") return PseudoWordMode::both;
  throw std::runtime_error("unknown pseudo-word mode '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "on" || v == "true") return true;
  if (v == "off" || v == "false") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto set_int = [](int ExperimentConfig::*field) {
      return [field](ExperimentConfig& c, const std::string& v) {
        c.*field = static_cast<int>(parse_int(v, "config"));
      };
    };
    auto set_double = [](double ExperimentConfig::*field) {
      return [field](ExperimentConfig& c, const std::string& v) {
        c.*field = parse_double(v, "config");
      };
    };
    t["world.n_base"] = set_int(&ExperimentConfig::n_base);
    t["world.n_novel"] = set_int(&ExperimentConfig::n_novel);
    t["world.d_v"] = set_int(&ExperimentConfig::d_v);
    t["world.d_t"] = set_int(&ExperimentConfig::d_t);
    t["world.cluster_noise"] = set_double(&ExperimentConfig::cluster_noise);
    t["world.sibling_blend"] = set_double(&ExperimentConfig::sibling_blend);
    t["world.mismatch_rate"] = set_double(&ExperimentConfig::mismatch_rate);

    t["training.iterations"] = set_int(&ExperimentConfig::iterations);
    t["training.batch_size"] = set_int(&ExperimentConfig::batch_size);
    t["training.pool_regions"] = set_int(&ExperimentConfig::pool_regions);
    t["training.learning_rate"] = set_double(&ExperimentConfig::learning_rate);
    t["training.momentum"] = set_double(&ExperimentConfig::momentum);
    t["training.lambda_curr"] = set_double(&ExperimentConfig::lambda_curr);
    t["training.queue_capacity"] = set_int(&ExperimentConfig::queue_capacity);
    t["training.augment_jitter"] = set_double(&ExperimentConfig::augment_jitter);
    t["training.tau_init"] = set_double(&ExperimentConfig::tau_init);
    t["training.memory_in_second_term"] = [](ExperimentConfig& c, const std::string& v) {
      c.memory_in_second_term = parse_bool(v, "training.memory_in_second_term");
    };

    t["curriculum.quality_percentile"] = [](ExperimentConfig& c, const std::string& v) {
      c.curriculum.quality_percentile = parse_double(v, "config");
    };
    t["curriculum.penalty"] = [](ExperimentConfig& c, const std::string& v) {
      c.curriculum.penalty = parse_double(v, "config");
    };
    t["curriculum.sample_budget"] = [](ExperimentConfig& c, const std::string& v) {
      c.curriculum.sample_budget = static_cast<int>(parse_int(v, "config"));
    };
    t["curriculum.schedule_slope"] = [](ExperimentConfig& c, const std::string& v) {
      c.curriculum.schedule_slope = parse_double(v, "config");
    };
    t["curriculum.base_ratios"] = [](ExperimentConfig& c, const std::string& v) {
      std::istringstream in(v);
      std::string tok;
      int k = 0;
      while (in >> tok) {
        if (k >= kCurriculumTiers) {
          throw std::runtime_error("config: base_ratios takes exactly 3 values");
        }
        c.curriculum.base_ratios[k++] = parse_double(tok, "base_ratios");
      }
      if (k != kCurriculumTiers) {
        throw std::runtime_error("config: base_ratios takes exactly 3 values");
      }
    };
    t["curriculum.within_tier"] = [](ExperimentConfig& c, const std::string& v) {
      if (v == "random") {
        c.curriculum.within_tier = CurriculumConfig::WithinTier::random;
      } else if (v == "q_ranked") {
        c.curriculum.within_tier = CurriculumConfig::WithinTier::q_ranked;
      } else {
        throw std::runtime_error("config: within_tier must be random or q_ranked");
      }
    };

    t["method.sampler"] = [](ExperimentConfig& c, const std::string& v) {
      c.sampler = sampler_arm_from_name(v);
    };
    t["method.sas"] = [](ExperimentConfig& c, const std::string& v) {
      c.sas = parse_bool(v, "method.sas");
    };
    t["method.mixup"] = [](ExperimentConfig& c, const std::string& v) {
      c.mixup = parse_bool(v, "method.mixup");
    };
    t["method.pseudo_words"] = [](ExperimentConfig& c, const std::string& v) {
      c.pseudo_words = pseudo_word_mode_from_name(v);
    };

    t["evaluation.eval_regions"] = set_int(&ExperimentConfig::eval_regions);
    t["evaluation.stability_domain"] = [](ExperimentConfig& c, const std::string& v) {
      c.stability_domain = corruption_from_name(v);
    };
    t["evaluation.stability_severity"] = set_int(&ExperimentConfig::stability_severity);

    t["run.seed"] = [](ExperimentConfig& c, const std::string& v) {
      c.seed = static_cast<std::uint64_t>(parse_int(v, "run.seed"));
    };
    return t;
  }();
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (n_base < 1) fail("n_base must be >= 1");
  if (n_novel < 1) fail("n_novel must be >= 1 (novel retrieval needs novel categories)");
  if (d_t < 2) fail("d_t must be >= 2");
  if (d_v < d_t) fail("d_v must be >= d_t");
  if (cluster_noise < 0.0) fail("cluster_noise must be >= 0");
  if (sibling_blend < 0.05 || sibling_blend > 2.0) {
    fail("sibling_blend must lie in [0.05, 2]");
  }
  if (mismatch_rate < 0.0 || mismatch_rate > 0.5) {
    fail("mismatch_rate must lie in [0, 0.5]");
  }
  if (mismatch_rate > 0.0 && n_base < 2) {
    fail("mismatch_rate needs at least two base categories");
  }
  if (iterations < 1) fail("iterations must be >= 1");
  if (batch_size < kCurriculumTiers) fail("batch_size must cover the tier count");
  if (pool_regions < batch_size) fail("pool_regions must be >= batch_size");
  if (learning_rate <= 0.0) fail("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) fail("momentum must be in [0, 1)");
  if (lambda_curr < 0.0) fail("lambda_curr must be >= 0");
  if (queue_capacity < 1) fail("queue_capacity must be >= 1");
  if (augment_jitter < 0.0) fail("augment_jitter must be >= 0");
  if (tau_init < kTauMin || tau_init > kTauMax) fail("tau_init outside bounds");
  if (curriculum.sample_budget < 2) fail("sample_budget must be >= 2");
  if (curriculum.quality_percentile < 0.0 || curriculum.quality_percentile > 1.0) {
    fail("quality_percentile outside [0, 1]");
  }
  if (curriculum.penalty < 0.0) fail("penalty must be >= 0");
  if (curriculum.schedule_slope < 0.0 || curriculum.schedule_slope > 1.0) {
    fail("schedule_slope outside [0, 1]");
  }
  for (double r : curriculum.base_ratios) {
    if (r < 0.0) fail("base_ratios must be non-negative");
  }
  if (curriculum.base_ratios[0] + curriculum.base_ratios[1] +
          curriculum.base_ratios[2] <= 0.0) {
    fail("base_ratios sum to zero");
  }
  if (eval_regions < 1) fail("eval_regions must be >= 1");
  if (stability_severity < 1 || stability_severity > kSeverityLevels) {
    fail("stability_severity outside 1..5");
  }
  // The uniform sampler IS the sas-off arm; mixing the flags is contradictory.
  if (sampler == SamplerArm::uniform && sas) {
    fail("uniform sampler requires sas = off");
  }
  if (sampler != SamplerArm::uniform && !sas) {
    fail("ambiguity-scheduled samplers require sas = on");
  }
}

std::string config_to_text(const ExperimentConfig& c) {
  std::string out;
  out += "[world]\n";
  out += "n_base = " + std::to_string(c.n_base) + "\n";
  out += "n_novel = " + std::to_string(c.n_novel) + "\n";
  out += "d_v = " + std::to_string(c.d_v) + "\n";
  out += "d_t = " + std::to_string(c.d_t) + "\n";
  out += "cluster_noise = " + g17(c.cluster_noise) + "\n";
  out += "sibling_blend = " + g17(c.sibling_blend) + "\n";
  out += "mismatch_rate = " + g17(c.mismatch_rate) + "\n";
  out += "\n[training]\n";
  out += "iterations = " + std::to_string(c.iterations) + "\n";
  out += "batch_size = " + std::to_string(c.batch_size) + "\n";
  out += "pool_regions = " + std::to_string(c.pool_regions) + "\n";
  out += "learning_rate = " + g17(c.learning_rate) + "\n";
  out += "momentum = " + g17(c.momentum) + "\n";
  out += "lambda_curr = " + g17(c.lambda_curr) + "\n";
  out += "queue_capacity = " + std::to_string(c.queue_capacity) + "\n";
  out += "augment_jitter = " + g17(c.augment_jitter) + "\n";
  out += "tau_init = " + g17(c.tau_init) + "\n";
  out += std::string("memory_in_second_term = ") +
         (c.memory_in_second_term ? "on" : "off") + "\n";
  out += "\n[curriculum]\n";
  out += "quality_percentile = " + g17(c.curriculum.quality_percentile) + "\n";
  out += "penalty = " + g17(c.curriculum.penalty) + "\n";
  out += "sample_budget = " + std::to_string(c.curriculum.sample_budget) + "\n";
  out += "base_ratios = " + g17(c.curriculum.base_ratios[0]) + " " +
         g17(c.curriculum.base_ratios[1]) + " " +
         g17(c.curriculum.base_ratios[2]) + "\n";
  out += "schedule_slope = " + g17(c.curriculum.schedule_slope) + "\n";
  out += std::string("within_tier = ") +
         (c.curriculum.within_tier == CurriculumConfig::WithinTier::random
              ? "random" : "q_ranked") + "\n";
  out += "\n[method]\n";
  out += std::string("sampler = ") + sampler_arm_name(c.sampler) + "\n";
  out += std::string("sas = ") + (c.sas ? "on" : "off") + "\n";
  out += std::string("mixup = ") + (c.mixup ? "on" : "off") + "\n";
  out += std::string("pseudo_words = ") + pseudo_word_mode_name(c.pseudo_words) + "\n";
  out += "\n[evaluation]\n";
  out += "eval_regions = " + std::to_string(c.eval_regions) + "\n";
  out += std::string("stability_domain = ") + corruption_name(c.stability_domain) + "\n";
  out += "stability_severity = " + std::to_string(c.stability_severity) + "\n";
  out += "\n[run]\n";
  out += "seed = " + std::to_string(c.seed) + "\n";
  return out;
}

ExperimentConfig config_from_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": empty section name");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty key or value");
    }
    if (section.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": assignment outside any section");
    }
    const std::string full = section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": unknown key '" + full + "'");
    }
    if (!seen.insert(full).second) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": duplicate key '" + full + "'");
    }
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_text(buf.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& dotted_key,
                    const std::string& value) {
  const auto it = setters().find(dotted_key);
  if (it == setters().end()) {
    throw std::runtime_error("unknown config key '" + dotted_key + "'");
  }
  it->second(cfg, trim(value));
}

}  // namespace pica
