#include "mgu/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "mgu/errors.hpp"
#include "mgu/serialize.hpp"
#include "mgu/stats.hpp"

namespace mgu {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

ArtifactWriter::ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void ArtifactWriter::write(const std::string& relative, std::string_view content) {
  const auto hash = sha256_hex(content);
  std::lock_guard lock(mu_);
  write_file(root_ / relative, content);
  files_[relative] = {hash, content.size()};
}

void ArtifactWriter::write_json(const std::string& relative, const nlohmann::json& doc) {
  write(relative, dump_json(doc));
}

nlohmann::json ArtifactWriter::write_manifest(nlohmann::json extra) {
  std::lock_guard lock(mu_);
  auto files = nlohmann::json::array();
  for (const auto& [path, entry] : files_) {
    files.push_back({{"path", path}, {"sha256", entry.first}, {"bytes", entry.second}});
  }
  extra["files"] = std::move(files);
  write_file(root_ / "manifest.json", dump_json(extra));
  return extra;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string histogram_svg(std::span<const double> values, const std::string& title, int bins) {
  if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
  std::vector<double> xs;
  for (double v : values) {
    if (std::isfinite(v)) xs.push_back(v);
  }
  double lo = 0.0, hi = 1.0;
  if (!xs.empty()) {
    lo = *std::min_element(xs.begin(), xs.end());
    hi = *std::max_element(xs.begin(), xs.end());
    if (hi <= lo) hi = lo + 1.0;
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double x : xs) {
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * bins);
    counts[std::min(b, counts.size() - 1)]++;
  }
  const std::size_t peak = std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end()));

  constexpr double left = 50, right = 580, top = 40, bottom = 360;
  const double width = (right - left) / bins;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 600 400\" width=\"600\" height=\"400\">\n"
     << "<rect width=\"600\" height=\"400\" fill=\"white\"/>\n"
     << fmt::format("<text x=\"300\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                    "font-size=\"16\">{}</text>\n",
                    title);
  for (int b = 0; b < bins; ++b) {
    const double h = (bottom - top) * static_cast<double>(counts[b]) / static_cast<double>(peak);
    os << fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                      "fill=\"#4a78b0\" stroke=\"white\"><title>{}</title></rect>\n",
                      left + b * width, bottom - h, width, h, counts[b]);
  }
  os << fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", left, bottom,
                    right, bottom)
     << fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", left, top, left,
                    bottom)
     << fmt::format("<text x=\"{}\" y=\"380\" font-family=\"sans-serif\" font-size=\"12\">{:.4g}</text>\n",
                    left, lo)
     << fmt::format("<text x=\"{}\" y=\"380\" text-anchor=\"end\" font-family=\"sans-serif\" "
                    "font-size=\"12\">{:.4g}</text>\n",
                    right, hi)
     << fmt::format("<text x=\"45\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" "
                    "font-size=\"12\">{}</text>\n",
                    top + 4, peak)
     << "</svg>\n";
  return os.str();
}

std::vector<AggregateRow> aggregate_reports(const std::vector<EvalReport>& reports) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::vector<std::vector<const EvalReport*>> groups;
  for (const auto& r : reports) {
    const std::pair key{r.metadata.value("method", std::string{}), r.metadata.value("setting", std::string{})};
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      groups.emplace_back();
      it = keys.end() - 1;
    }
    groups[static_cast<std::size_t>(it - keys.begin())].push_back(&r);
  }
  std::vector<AggregateRow> rows;
  for (std::size_t g = 0; g < keys.size(); ++g) {
    std::vector<double> tou, dd, dr, dt;
    for (const auto* r : groups[g]) {
      tou.push_back(r->tou);
      dd.push_back(r->diff_deleted);
      dr.push_back(r->diff_remaining);
      dt.push_back(r->diff_test);
    }
    AggregateRow row;
    row.method = keys[g].first;
    row.setting = keys[g].second;
    row.task = to_string(groups[g].front()->task);
    row.runs = groups[g].size();
    row.tou_mean = stats::mean(tou);
    row.tou_std = stats::stdev(tou);
    row.diff_deleted_mean = stats::mean(dd);
    row.diff_remaining_mean = stats::mean(dr);
    row.diff_test_mean = stats::mean(dt);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "method,setting,task,runs,tou_mean,tou_std,diff_deleted_mean,diff_remaining_mean,diff_test_mean\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.setting << ',' << r.task << ',' << r.runs << ','
       << format_number(r.tou_mean) << ',' << format_number(r.tou_std) << ','
       << format_number(r.diff_deleted_mean) << ',' << format_number(r.diff_remaining_mean) << ','
       << format_number(r.diff_test_mean) << '\n';
  }
  return os.str();
}

std::string centrality_csv(const std::vector<CentralityRow>& rows) {
  std::ostringstream os;
  os << "metric,easy,hard,ratio\n";
  for (const auto& r : rows) {
    os << to_string(r.metric) << ',' << format_number(r.easy) << ',' << format_number(r.hard) << ','
       << format_number(r.ratio) << '\n';
  }
  return os.str();
}

std::string impact_csv(const std::vector<ImpactRow>& rows) {
  std::ostringstream os;
  os << "setting,ratio,mean_delta,mean_abs_delta,deltas\n";
  for (const auto& r : rows) {
    os << to_string(r.setting) << ',' << format_number(r.ratio) << ',' << format_number(r.mean_delta)
       << ',' << format_number(r.mean_abs_delta) << ',';
    for (std::size_t i = 0; i < r.deltas.size(); ++i) os << (i ? ";" : "") << format_number(r.deltas[i]);
    os << '\n';
  }
  return os.str();
}

std::string report_csv(const EvalReport& r) {
  return "task,diff_deleted,diff_remaining,diff_test,tou\n" + std::string(to_string(r.task)) + ',' +
         format_number(r.diff_deleted) + ',' + format_number(r.diff_remaining) + ',' +
         format_number(r.diff_test) + ',' + format_number(r.tou) + '\n';
}

}  // namespace mgu
