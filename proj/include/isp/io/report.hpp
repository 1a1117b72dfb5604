#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "isp/eval/evaluation.hpp"

namespace isp::io {

inline constexpr const char* kReportFormat = "isp-report-v1";

// sm, mm, mm_<dim>, sed, mrr, r_at_<K>, the saliency scores, losses and the
// analysis statistics.
bool is_known_metric(std::string_view name);

struct ReportRow {
  std::string variant;
  std::string split;
  std::string metric;
  double value = 0.0;
  std::optional<double> se;  // standard error, when defined

  bool operator==(const ReportRow&) const = default;
};

struct Provenance {
  std::string command;
  std::string version;
  std::string config_hash;
  std::string corpus_hash;
  std::map<std::string, std::uint64_t> seeds;
  std::string timestamp;  // the only field allowed to differ between identical runs
};

struct MetricReport {
  std::vector<ReportRow> rows;
  Provenance provenance;
  nlohmann::json details = nlohmann::json::object();

  // Throws std::invalid_argument for a metric outside the vocabulary.
  void add(std::string variant, std::string split, std::string metric, double value,
           std::optional<double> se = std::nullopt);
  void add_value(const std::string& variant, const std::string& split, const eval::ValueSummary& s);
  void add_ranking(const std::string& variant, const std::string& split, const eval::RankingResult& r);
  void add_saliency(const std::string& variant, const std::string& split, const eval::SaliencyScores& s);
};

std::string fnv1a_hex(std::string_view bytes);
// FNV-1a over the compact dump of `j` (object keys sorted).
std::string config_hash(const nlohmann::json& j);
std::string version_string();
std::string utc_timestamp();

nlohmann::json to_json(const MetricReport& report);

// report.csv (variant,split,metric,value,stderr) and report.json.
void emit_report(const MetricReport& report, const std::filesystem::path& dir);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

}  // namespace isp::io
