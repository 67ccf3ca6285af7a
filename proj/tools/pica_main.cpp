// Command-line front end: generate worlds and region sets, train the
// projection head, evaluate a trained artifact over the corruption grid, run
// multi-arm suites, and dump artifact contents.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pica/report.hpp"
#include "pica/rng.hpp"

namespace {

using namespace pica;

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (!path.empty()) cfg = config_from_file(path);
  for (const std::string& kv : overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    }
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

// Named method arms; the first entries mirror the reference method and the
// ablation rows of the experiment plan.
ExperimentConfig arm_config(const ExperimentConfig& base, const std::string& name) {
  ExperimentConfig cfg = base;
  if (name == "pica") {
    cfg.sampler = SamplerArm::pica;
    cfg.sas = true;
    cfg.mixup = true;
    cfg.pseudo_words = PseudoWordMode::both;
  } else if (name == "uniform") {
    cfg.sampler = SamplerArm::uniform;
    cfg.sas = false;
    cfg.mixup = false;
  } else if (name == "uniform_mixup") {
    cfg.sampler = SamplerArm::uniform;
    cfg.sas = false;
    cfg.mixup = true;
  } else if (name == "h_only") {
    cfg.sampler = SamplerArm::h_only;
    cfg.sas = true;
    cfg.mixup = true;
  } else if (name == "q_only") {
    cfg.sampler = SamplerArm::q_only;
    cfg.sas = true;
    cfg.mixup = true;
  } else if (name == "no_mixup") {
    cfg.sampler = SamplerArm::pica;
    cfg.sas = true;
    cfg.mixup = false;
  } else if (name == "clean_only") {
    cfg.sampler = SamplerArm::pica;
    cfg.sas = true;
    cfg.mixup = true;
    cfg.pseudo_words = PseudoWordMode::clean_only;
  } else if (name == "aug_only") {
    cfg.sampler = SamplerArm::pica;
    cfg.sas = true;
    cfg.mixup = true;
    cfg.pseudo_words = PseudoWordMode::aug_only;
  } else {
    throw std::runtime_error(
        "unknown arm '" + name +
        "' (valid: pica, uniform, uniform_mixup, h_only, q_only, no_mixup, "
        "clean_only, aug_only)");
  }
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_generate(const std::string& config_path,
                 const std::vector<std::string>& overrides,
                 const std::string& world_out, int regions,
                 const std::string& regions_out, const std::string& corruption,
                 int severity, const std::string& labeling) {
  const ExperimentConfig cfg = load_config(config_path, overrides);
  const WorldSpec world = generate_world(cfg.n_base, cfg.n_novel, cfg.d_v,
                                         cfg.d_t, cfg.cluster_noise,
                                         cfg.sibling_blend, cfg.seed);
  if (!world_out.empty()) {
    write_file(world_out, world_to_text(world));
    std::printf("world -> %s (%d base + %d novel categories, d_v=%d, d_t=%d)\n",
                world_out.c_str(), cfg.n_base, cfg.n_novel, cfg.d_v, cfg.d_t);
  }
  if (regions > 0) {
    if (regions_out.empty()) {
      throw std::runtime_error("--regions requires --regions-out");
    }
    std::optional<CorruptionSpec> spec;
    if (!corruption.empty()) {
      spec = default_corruption(corruption_from_name(corruption));
    }
    const LabelMode mode = labeling == "train" ? LabelMode::train : LabelMode::eval;
    if (labeling != "train" && labeling != "eval") {
      throw std::runtime_error("--labeling must be train or eval");
    }
    const auto set = sample_regions(world, regions, spec, severity, cfg.seed,
                                    mode, cfg.augment_jitter);
    write_file(regions_out, regions_to_text(set, cfg.d_v, cfg.seed, mode));
    std::printf("regions -> %s (%d regions, domain %s, severity %d)\n",
                regions_out.c_str(), regions,
                domain_name(domain_id_for(spec)).c_str(), severity);
  }
  return 0;
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides,
              const std::string& artifact_out, const std::string& log_out) {
  const ExperimentConfig cfg = load_config(config_path, overrides);
  const RunArtifact artifact = run_training(cfg);
  write_file(artifact_out, artifact_to_text(artifact));
  if (!log_out.empty()) write_file(log_out, train_log_csv(artifact));
  const IterationRow& last = artifact.log.back();
  std::printf("trained %d iterations in %.1fs (seed %llu)\n", cfg.iterations,
              artifact.duration_seconds,
              static_cast<unsigned long long>(cfg.seed));
  std::printf("final: loss_total=%.6f loss_ground=%.6f loss_curr=%.6f tau=%.4f\n",
              last.loss_total, last.loss_ground, last.loss_curr, last.tau);
  std::printf("artifact -> %s\n", artifact_out.c_str());
  return 0;
}

int cmd_evaluate(const std::string& artifact_path, const std::string& out_dir,
                 const std::string& domains_csv, const std::string& severities_csv) {
  const RunArtifact artifact = artifact_from_file(artifact_path);
  std::vector<int> domains{1, 2, 3, 4};
  std::vector<int> severities{1, 2, 3, 4, 5};
  if (!domains_csv.empty()) {
    domains.clear();
    for (const std::string& tok : split_list(domains_csv)) {
      bool numeric = !tok.empty();
      for (char c : tok) numeric = numeric && c >= '0' && c <= '9';
      if (numeric) {
        domains.push_back(std::stoi(tok));
      } else {
        domains.push_back(1 + static_cast<int>(corruption_from_name(tok)));
      }
    }
  }
  if (!severities_csv.empty()) {
    severities.clear();
    for (const std::string& tok : split_list(severities_csv)) {
      severities.push_back(std::stoi(tok));
    }
  }
  const MetricReport report = run_evaluation(artifact, domains, severities);
  const auto dir = ensure_dir(out_dir);
  write_file((dir / "report.txt").string(), evaluation_report_text(report));
  write_file((dir / "metrics.csv").string(), metrics_csv(report));
  write_file((dir / "stability.csv").string(), stability_csv(report));
  std::fputs(evaluation_report_text(report).c_str(), stdout);
  std::printf("reports -> %s\n", dir.string().c_str());
  return 0;
}

int cmd_suite(const std::string& config_path,
              const std::vector<std::string>& overrides,
              const std::string& arms_csv, int seeds, const std::string& out_dir,
              const std::vector<std::string>& grid) {
  const ExperimentConfig base = load_config(config_path, overrides);
  std::vector<ArmSpec> arms;
  for (const std::string& name : split_list(arms_csv)) {
    arms.push_back({name, arm_config(base, name)});
  }
  if (arms.empty()) throw std::runtime_error("no arms requested");

  // Each --grid key=v1|v2 option multiplies every arm by its values.
  for (const std::string& g : grid) {
    const std::size_t eq = g.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("--grid expects key=v1|v2..., got '" + g + "'");
    }
    const std::string key = g.substr(0, eq);
    std::vector<std::string> values;
    std::string cur;
    for (char c : g.substr(eq + 1)) {
      if (c == '|') {
        values.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    values.push_back(cur);
    std::vector<ArmSpec> expanded;
    for (const ArmSpec& arm : arms) {
      for (const std::string& v : values) {
        ArmSpec next = arm;
        apply_override(next.config, key, v);
        next.config.validate();
        std::string tag = v;
        for (char& c : tag) {
          if (c == ' ') c = '_';
        }
        next.name = arm.name + "/" + key + "=" + tag;
        expanded.push_back(std::move(next));
      }
    }
    arms = std::move(expanded);
  }

  const SuiteResult result = run_suite(arms, seeds, base.seed);
  const auto dir = ensure_dir(out_dir);
  write_file((dir / "suite.csv").string(), suite_csv(result));
  write_file((dir / "suite_report.txt").string(), suite_report_text(result));
  std::fputs(suite_report_text(result).c_str(), stdout);
  std::printf("suite outputs -> %s\n", dir.string().c_str());
  return 0;
}

int cmd_report(const std::string& artifact_path, const std::string& out_dir) {
  const RunArtifact artifact = artifact_from_file(artifact_path);
  const auto dir = ensure_dir(out_dir);
  write_file((dir / "config.txt").string(), config_to_text(artifact.config));
  write_file((dir / "head.txt").string(), head_to_text(artifact.head));
  write_file((dir / "train_log.csv").string(), train_log_csv(artifact));
  std::printf("artifact: %zu logged iterations, seed %llu\n",
              artifact.log.size(),
              static_cast<unsigned long long>(artifact.config.seed));
  std::printf("dumps -> %s\n", dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"progressive cross-modal alignment experiment harness"};
  app.require_subcommand(1);

  std::string config_path, world_out, regions_out, corruption, labeling = "eval";
  std::vector<std::string> overrides, grid;
  int regions = 0, severity = 0, seeds = 10;
  std::string artifact_path, log_out, out_dir = ".", domains_csv, severities_csv;
  std::string arms_csv = "pica,uniform";

  auto* gen = app.add_subcommand("generate", "write a world (and optional region set)");
  gen->add_option("--config", config_path, "config file");
  gen->add_option("--set", overrides, "override config key=value")->take_all();
  gen->add_option("--out", world_out, "world output file");
  gen->add_option("--regions", regions, "also sample this many regions");
  gen->add_option("--regions-out", regions_out, "region set output file");
  gen->add_option("--corruption", corruption, "corruption kind for the region set");
  gen->add_option("--severity", severity, "corruption severity 1..5");
  gen->add_option("--labeling", labeling, "train|eval labeling (default eval)");

  auto* train = app.add_subcommand("train", "train a projection head");
  train->add_option("--config", config_path, "config file");
  train->add_option("--set", overrides, "override config key=value")->take_all();
  train->add_option("--artifact", artifact_path, "artifact output file")->required();
  train->add_option("--log", log_out, "training log CSV output");

  auto* eval = app.add_subcommand("evaluate", "evaluate a trained artifact");
  eval->add_option("--artifact", artifact_path, "artifact file")->required();
  eval->add_option("--out-dir", out_dir, "output directory (default .)");
  eval->add_option("--domains", domains_csv, "comma list of shifted domains (ids or names)");
  eval->add_option("--severities", severities_csv, "comma list of severities");

  auto* suite = app.add_subcommand("suite", "run a multi-arm, multi-seed comparison");
  suite->add_option("--config", config_path, "base config file");
  suite->add_option("--set", overrides, "override base config key=value")->take_all();
  suite->add_option("--arms", arms_csv, "comma list of arms (default pica,uniform)");
  suite->add_option("--seeds", seeds, "seeds per arm (default 10)");
  suite->add_option("--grid", grid, "sweep: key=v1|v2 (repeatable)")->take_all();
  suite->add_option("--out-dir", out_dir, "output directory (default .)");

  auto* rep = app.add_subcommand("report", "dump an artifact's config/head/log");
  rep->add_option("--artifact", artifact_path, "artifact file")->required();
  rep->add_option("--out-dir", out_dir, "output directory (default .)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_generate(config_path, overrides, world_out, regions,
                          regions_out, corruption, severity, labeling);
    }
    if (train->parsed()) {
      return cmd_train(config_path, overrides, artifact_path, log_out);
    }
    if (eval->parsed()) {
      return cmd_evaluate(artifact_path, out_dir, domains_csv, severities_csv);
    }
    if (suite->parsed()) {
      return cmd_suite(config_path, overrides, arms_csv, seeds, out_dir, grid);
    }
    if (rep->parsed()) {
      return cmd_report(artifact_path, out_dir);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
