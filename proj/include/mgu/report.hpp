#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mgu/eval.hpp"

namespace mgu {

std::string sha256_hex(std::string_view data);

/// Writes artifacts below a root directory and remembers each file's hash
/// for the manifest. Thread-safe.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void write(const std::string& relative, std::string_view content);
  void write_json(const std::string& relative, const nlohmann::json& doc);

  /// {"files": [{path, sha256, bytes}...]} merged with `extra`, written as
  /// manifest.json (which is not listed in itself).
  nlohmann::json write_manifest(nlohmann::json extra);

 private:
  std::filesystem::path root_;
  std::mutex mu_;
  std::map<std::string, std::pair<std::string, std::size_t>> files_;
};

/// Shortest round-trip decimal; "nan" / "inf" / "-inf" for non-finite values.
std::string format_number(double x);

/// 600x400 SVG histogram with `bins` equal-width bins over the finite values.
std::string histogram_svg(std::span<const double> values, const std::string& title, int bins = 30);

struct AggregateRow {
  std::string method;
  std::string setting;
  std::string task;
  std::size_t runs = 0;
  double tou_mean = 0.0, tou_std = 0.0;
  double diff_deleted_mean = 0.0, diff_remaining_mean = 0.0, diff_test_mean = 0.0;
};

/// Groups reports by their metadata {method, setting} in first-appearance
/// order and summarizes each group as mean and sample stdev.
std::vector<AggregateRow> aggregate_reports(const std::vector<EvalReport>& reports);

/// Columns: method,setting,task,runs,tou_mean,tou_std,diff_deleted_mean,
/// diff_remaining_mean,diff_test_mean
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

/// Columns: metric,easy,hard,ratio
std::string centrality_csv(const std::vector<CentralityRow>& rows);

/// Columns: setting,ratio,mean_delta,mean_abs_delta,deltas (';'-joined)
std::string impact_csv(const std::vector<ImpactRow>& rows);

/// One-row CSV of a report: task,diff_deleted,diff_remaining,diff_test,tou
std::string report_csv(const EvalReport& report);

}  // namespace mgu
