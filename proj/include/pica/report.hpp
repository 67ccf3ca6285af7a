#pragma once
// Artifact and report serialization. Every writer stamps the master seed and
// writes doubles with full round-trip precision; nothing time-dependent goes
// into a file, so identical configurations produce byte-identical outputs.

#include <string>

#include "pica/experiment.hpp"

namespace pica {

// Full training artifact (config + head + per-iteration log), bit-exact.
std::string artifact_to_text(const RunArtifact& artifact);
RunArtifact artifact_from_text(const std::string& text);
RunArtifact artifact_from_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// CSV views.
std::string train_log_csv(const RunArtifact& artifact);
std::string metrics_csv(const MetricReport& report);
std::string stability_csv(const MetricReport& report);
std::string suite_csv(const SuiteResult& suite);

// Human-readable summaries.
std::string evaluation_report_text(const MetricReport& report);
std::string suite_report_text(const SuiteResult& suite);

}  // namespace pica
