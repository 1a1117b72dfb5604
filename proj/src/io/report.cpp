#include "isp/io/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "isp/io/config.hpp"

#ifndef ISP_VERSION
#define ISP_VERSION "0.0.0"
#endif

namespace isp::io {

using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool is_known_metric(std::string_view name) {
  static const std::set<std::string, std::less<>> known{
      "sm",          "mm",           "mm_shape",      "mm_direction", "mm_length",     "mm_position",
      "mm_duration", "sed",          "mrr",           "cc",           "auc",           "nss",
      "sauc",        "kld",          "sim",           "position_loss", "duration_loss", "total_loss",
      "spearman_rho", "spearman_p",  "t_stat",        "perm_p",       "accuracy",      "proportion",
      "latency_ms",  "duration_ms",  "n"};
  if (known.count(name)) return true;
  static const std::regex recall("r_at_[1-9][0-9]*");
  return std::regex_match(name.begin(), name.end(), recall);
}

void MetricReport::add(std::string variant, std::string split, std::string metric, double value,
                       std::optional<double> se) {
  if (!is_known_metric(metric)) throw std::invalid_argument("unknown report metric '" + metric + "'");
  rows.push_back({std::move(variant), std::move(split), std::move(metric), value, se});
}

void MetricReport::add_value(const std::string& variant, const std::string& split, const eval::ValueSummary& s) {
  add(variant, split, "n", static_cast<double>(s.n));
  add(variant, split, "sm", s.sm.mean, s.sm.se);
  add(variant, split, "mm", s.mm.mean, s.mm.se);
  add(variant, split, "mm_shape", s.mm_shape.mean, s.mm_shape.se);
  add(variant, split, "mm_direction", s.mm_direction.mean, s.mm_direction.se);
  add(variant, split, "mm_length", s.mm_length.mean, s.mm_length.se);
  add(variant, split, "mm_position", s.mm_position.mean, s.mm_position.se);
  add(variant, split, "mm_duration", s.mm_duration.mean, s.mm_duration.se);
  add(variant, split, "sed", s.sed.mean, s.sed.se);
}

void MetricReport::add_ranking(const std::string& variant, const std::string& split, const eval::RankingResult& r) {
  add(variant, split, "mrr", r.mrr);
  for (const auto& [k, v] : r.recall_at) add(variant, split, "r_at_" + std::to_string(k), v);
}

void MetricReport::add_saliency(const std::string& variant, const std::string& split, const eval::SaliencyScores& s) {
  add(variant, split, "cc", s.cc);
  add(variant, split, "auc", s.auc);
  add(variant, split, "nss", s.nss);
  add(variant, split, "sauc", s.sauc);
  add(variant, split, "kld", s.kld);
  add(variant, split, "sim", s.sim);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const json& j) { return fnv1a_hex(j.dump()); }

std::string version_string() { return ISP_VERSION; }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const MetricReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"variant", r.variant},
                    {"split", r.split},
                    {"metric", r.metric},
                    {"value", r.value},
                    {"stderr", r.se ? json(*r.se) : json(nullptr)}});
  }
  const auto& p = report.provenance;
  return {{"format", kReportFormat},
          {"provenance",
           {{"command", p.command},
            {"version", p.version},
            {"config_hash", p.config_hash},
            {"corpus_hash", p.corpus_hash},
            {"seeds", p.seeds},
            {"timestamp", p.timestamp}}},
          {"rows", rows},
          {"details", report.details}};
}

void emit_report(const MetricReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto csv_path = dir / "report.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  csv << "variant,split,metric,value,stderr\n";
  for (const auto& r : report.rows) {
    csv << r.variant << ',' << r.split << ',' << r.metric << ',' << format_double(r.value) << ','
        << (r.se ? format_double(*r.se) : "") << '\n';
  }
  if (!csv) throw std::runtime_error("write failed for " + csv_path.string());
  write_json_file(to_json(report), dir / "report.json");
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "variant,split,metric,value,stderr") throw std::invalid_argument(path.string() + ": unexpected header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 5) throw std::invalid_argument(path.string() + ": malformed row '" + line + "'");
    ReportRow r{cells[0], cells[1], cells[2], std::stod(cells[3]), std::nullopt};
    if (!cells[4].empty()) r.se = std::stod(cells[4]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace isp::io
