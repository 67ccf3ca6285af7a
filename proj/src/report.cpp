#include "pica/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pica/text_io.hpp"

namespace pica {

namespace {

std::string f4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::vector<std::string> collect_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

std::string artifact_to_text(const RunArtifact& artifact) {
  const auto config_lines = collect_lines(config_to_text(artifact.config));
  const auto head_lines = collect_lines(head_to_text(artifact.head));

  std::string out = "pica-artifact 1\n";
  out += "seed " + std::to_string(artifact.config.seed) + "\n";
  out += "config_lines " + std::to_string(config_lines.size()) + "\n";
  for (const auto& l : config_lines) out += l + "\n";
  out += "head_lines " + std::to_string(head_lines.size()) + "\n";
  for (const auto& l : head_lines) out += l + "\n";
  out += "log_rows " + std::to_string(artifact.log.size()) + "\n";
  for (const IterationRow& r : artifact.log) {
    out += std::to_string(r.iteration);
    out += ' ' + g17(r.rho) + ' ' + g17(r.alpha);
    for (double x : r.ratios) out += ' ' + g17(x);
    for (int c : r.counts) out += ' ' + std::to_string(c);
    out += ' ' + std::to_string(r.penalized_selected);
    out += ' ' + std::to_string(r.selected);
    out += ' ' + g17(r.loss_ground) + ' ' + g17(r.loss_curr) + ' ' +
           g17(r.loss_total) + ' ' + g17(r.tau) + ' ' + g17(r.grad_norm);
    out += ' ';
    out += r.gcs ? g17(*r.gcs) : std::string("-");
    out += '\n';
  }
  out += "end\n";
  return out;
}

RunArtifact artifact_from_text(const std::string& text) {
  const auto lines = collect_lines(text);
  std::size_t pos = 0;
  auto next_line = [&]() -> const std::string& {
    if (pos >= lines.size()) {
      throw std::runtime_error("artifact: unexpected end of input");
    }
    return lines[pos++];
  };
  auto header_count = [&](const std::string& tag) {
    std::istringstream in(next_line());
    std::string word;
    long long n = -1;
    if (!(in >> word >> n) || word != tag || n < 0) {
      throw std::runtime_error("artifact: expected '" + tag + " <count>'");
    }
    return static_cast<std::size_t>(n);
  };

  {
    std::istringstream in(next_line());
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "pica-artifact" || version != 1) {
      throw std::runtime_error("artifact: bad header");
    }
  }
  {
    std::istringstream in(next_line());
    std::string word;
    std::uint64_t seed = 0;
    if (!(in >> word >> seed) || word != "seed") {
      throw std::runtime_error("artifact: expected seed line");
    }
  }

  RunArtifact artifact;
  const std::size_t n_cfg = header_count("config_lines");
  std::string cfg_text;
  for (std::size_t i = 0; i < n_cfg; ++i) cfg_text += next_line() + "\n";
  artifact.config = config_from_text(cfg_text);

  const std::size_t n_head = header_count("head_lines");
  std::string head_text;
  for (std::size_t i = 0; i < n_head; ++i) head_text += next_line() + "\n";
  artifact.head = head_from_text(head_text);

  const std::size_t n_rows = header_count("log_rows");
  artifact.log.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    std::istringstream in(next_line());
    std::vector<std::string> tok;
    std::string t;
    while (in >> t) tok.push_back(t);
    if (tok.size() != 17) {
      throw std::runtime_error("artifact: malformed log row");
    }
    IterationRow r;
    std::size_t k = 0;
    r.iteration = static_cast<int>(parse_int(tok[k++], "iteration"));
    r.rho = parse_double(tok[k++], "rho");
    r.alpha = parse_double(tok[k++], "alpha");
    for (int j = 0; j < kCurriculumTiers; ++j) {
      r.ratios[j] = parse_double(tok[k++], "ratio");
    }
    for (int j = 0; j < kCurriculumTiers; ++j) {
      r.counts[j] = static_cast<int>(parse_int(tok[k++], "count"));
    }
    r.penalized_selected = static_cast<int>(parse_int(tok[k++], "penalized"));
    r.selected = static_cast<int>(parse_int(tok[k++], "selected"));
    r.loss_ground = parse_double(tok[k++], "loss_ground");
    r.loss_curr = parse_double(tok[k++], "loss_curr");
    r.loss_total = parse_double(tok[k++], "loss_total");
    r.tau = parse_double(tok[k++], "tau");
    r.grad_norm = parse_double(tok[k++], "grad_norm");
    if (tok[k] != "-") r.gcs = parse_double(tok[k], "gcs");
    artifact.log.push_back(r);
  }
  if (next_line() != "end") throw std::runtime_error("artifact: missing end");
  return artifact;
}

RunArtifact artifact_from_file(const std::string& path) {
  return artifact_from_text(read_file(path));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string train_log_csv(const RunArtifact& artifact) {
  std::string out = "# pica-train-log\n";
  out += "# seed = " + std::to_string(artifact.config.seed) + "\n";
  out +=
      "iteration,rho,alpha,ratio_easy,ratio_medium,ratio_hard,"
      "count_easy,count_medium,count_hard,penalized_selected,selected,"
      "loss_ground,loss_curr,loss_total,tau,grad_norm,gcs\n";
  for (const IterationRow& r : artifact.log) {
    out += std::to_string(r.iteration);
    out += ',' + g17(r.rho) + ',' + g17(r.alpha);
    for (double x : r.ratios) out += ',' + g17(x);
    for (int c : r.counts) out += ',' + std::to_string(c);
    out += ',' + std::to_string(r.penalized_selected);
    out += ',' + std::to_string(r.selected);
    out += ',' + g17(r.loss_ground) + ',' + g17(r.loss_curr) + ',' +
           g17(r.loss_total) + ',' + g17(r.tau) + ',' + g17(r.grad_norm);
    out += ',';
    if (r.gcs) out += g17(*r.gcs);
    out += '\n';
  }
  return out;
}

std::string metrics_csv(const MetricReport& report) {
  std::string out = "# pica-metrics\n";
  out += "# seed = " + std::to_string(report.seed) + "\n";
  out += "domain_id,domain,severity,retrieval_novel,ai_gap_mean\n";
  out += "0,clean,0," + g17(report.retrieval_clean_novel) + ",\n";
  for (const EvalCell& c : report.cells) {
    out += std::to_string(c.domain_id) + ',' + domain_name(c.domain_id) + ',' +
           std::to_string(c.severity) + ',' + g17(c.retrieval_novel) + ',' +
           g17(c.ai_gap_mean) + '\n';
  }
  return out;
}

std::string stability_csv(const MetricReport& report) {
  std::string out = "# pica-stability\n";
  out += "# seed = " + std::to_string(report.seed) + "\n";
  out += "region_id,q_clean,h_clean,h_shifted,delta_h\n";
  for (const StabilityRecord& r : report.stability) {
    out += std::to_string(r.region_id) + ',' + g17(r.q_clean) + ',' +
           g17(r.h_clean) + ',' + g17(r.h_shifted) + ',' + g17(r.delta_h) + '\n';
  }
  return out;
}

std::string suite_csv(const SuiteResult& suite) {
  std::string out = "# pica-suite\n";
  out += "# base_seed = " + std::to_string(suite.base_seed) + "\n";
  out +=
      "arm,seed,retrieval_shifted,retrieval_clean,ai_gap,"
      "stable_top_q_fraction,gcs_first_half\n";
  for (const ArmSummary& arm : suite.arms) {
    for (const ArmSeedOutcome& r : arm.runs) {
      out += arm.name + ',' + std::to_string(r.seed) + ',' +
             g17(r.retrieval_shifted) + ',' + g17(r.retrieval_clean) + ',' +
             g17(r.ai_gap) + ',' + g17(r.stable_top_q_fraction) + ',';
      if (r.gcs_first_half_mean) out += g17(*r.gcs_first_half_mean);
      out += '\n';
    }
  }
  return out;
}

std::string evaluation_report_text(const MetricReport& report) {
  std::string out = "pica evaluation report\n";
  out += "seed = " + std::to_string(report.seed) + "\n\n";
  out += "clean domain\n";
  out += "  novel retrieval: " + f4(report.retrieval_clean_novel) + "\n";
  out += "  base retrieval:  " + f4(report.retrieval_clean_base) + "\n\n";
  out += "shifted domains (novel retrieval | alignment-invariance gap)\n";
  for (const DomainAggregate& d : report.domains) {
    out += "  " + domain_name(d.domain_id) + ":";
    for (const EvalCell& c : report.cells) {
      if (c.domain_id != d.domain_id) continue;
      out += " s" + std::to_string(c.severity) + "=" + f4(c.retrieval_novel);
    }
    out += " | mean " + f4(d.retrieval_mean) + ", gap " + f4(d.ai_gap_mean) + "\n";
  }
  out += "\noverall shifted novel retrieval: " +
         f4(report.overall_retrieval_shifted) + "\n";
  out += "overall alignment-invariance gap: " + f4(report.overall_ai_gap) + "\n";
  out += "stable fraction (high-signal half, |dh| < " + f4(kStableDeltaH) +
         "): " + f4(report.stable_top_q_fraction) + "\n";
  out += "gradient conflict, first half: ";
  out += report.gcs_first_half_mean ? f4(*report.gcs_first_half_mean)
                                    : std::string("undefined");
  out += "\n";
  return out;
}

std::string suite_report_text(const SuiteResult& suite) {
  std::string out = "pica suite report\n";
  out += "base_seed = " + std::to_string(suite.base_seed) +
         ", seeds = " + std::to_string(suite.seeds) + "\n\n";
  for (const ArmSummary& arm : suite.arms) {
    out += arm.name + ":\n";
    out += "  shifted novel retrieval: " + f4(arm.retrieval_shifted_mean) +
           " +/- " + f4(arm.retrieval_shifted_stddev) + "\n";
    out += "  clean novel retrieval:   " + f4(arm.retrieval_clean_mean) + "\n";
    out += "  alignment gap:           " + f4(arm.ai_gap_mean) + "\n";
    out += "  stable fraction:         " + f4(arm.stable_fraction_mean) + "\n";
  }
  if (suite.arms.size() > 1) {
    const ArmSummary& ref = suite.arms.front();
    out += "\npaired wins vs " + ref.name + " (shifted novel retrieval):\n";
    for (std::size_t a = 1; a < suite.arms.size(); ++a) {
      const ArmSummary& arm = suite.arms[a];
      int wins = 0;
      for (std::size_t s = 0; s < arm.runs.size(); ++s) {
        if (arm.runs[s].retrieval_shifted > ref.runs[s].retrieval_shifted) {
          ++wins;
        }
      }
      out += "  " + arm.name + ": " + std::to_string(wins) + "/" +
             std::to_string(arm.runs.size()) + "\n";
    }
  }
  return out;
}

}  // namespace pica
