#include "mgu/loaders.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <string_view>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "mgu/errors.hpp"

namespace mgu {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view text, const std::string& file, std::size_t line) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ParseError(file, line, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

// Accumulates nodes and raw edges by name, then assembles the graph.
class Builder {
 public:
  void add_node(std::string_view name, std::vector<double> feats, std::string_view label,
                const std::string& file, std::size_t line) {
    if (name.empty()) throw ParseError(file, line, "empty node id");
    if (dim_ == npos) {
      dim_ = feats.size();
    } else if (feats.size() != dim_) {
      throw SchemaError(file + ":" + std::to_string(line) + ": feature arity " +
                        std::to_string(feats.size()) + " differs from " + std::to_string(dim_));
    }
    const auto [it, inserted] = index_.emplace(std::string(name), out_.node_names.size());
    if (!inserted) throw ParseError(file, line, "duplicate node id '" + std::string(name) + "'");
    out_.node_names.emplace_back(name);
    rows_.push_back(std::move(feats));
    if (label.empty()) {
      labels_.push_back(kNoLabel);
    } else {
      const auto [cit, fresh] = classes_.emplace(std::string(label), out_.class_names.size());
      if (fresh) out_.class_names.emplace_back(label);
      labels_.push_back(static_cast<int>(cit->second));
    }
  }

  void add_edge(std::string_view a, std::string_view b) {
    const auto ia = index_.find(std::string(a));
    const auto ib = index_.find(std::string(b));
    if (ia == index_.end() || ib == index_.end()) {
      ++out_.dropped_unknown_edges;
      return;
    }
    if (ia->second == ib->second) {
      ++out_.dropped_self_loops;
      return;
    }
    const auto e = Edge::normalized(static_cast<NodeId>(ia->second), static_cast<NodeId>(ib->second));
    if (!edges_.insert(e).second) ++out_.dropped_duplicates;
  }

  LoadedGraph finish() && {
    const std::size_t n = rows_.size();
    const std::size_t d = dim_ == npos ? 0 : dim_;
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) std::copy(rows_[i].begin(), rows_[i].end(), x.row(i).begin());
    std::vector<Edge> edges(edges_.begin(), edges_.end());
    out_.graph = Graph::from_edges(n, edges, std::move(x), std::move(labels_),
                                   static_cast<int>(out_.class_names.size()));
    if (out_.dropped_unknown_edges > 0) {
      spdlog::warn("dropped {} edges with unknown endpoints", out_.dropped_unknown_edges);
    }
    return std::move(out_);
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  LoadedGraph out_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> classes_;
  std::vector<std::vector<double>> rows_;
  std::vector<int> labels_;
  std::set<Edge> edges_;
  std::size_t dim_ = npos;
};

}  // namespace

LoadedGraph load_linqs(const std::filesystem::path& content_path,
                       const std::filesystem::path& cites_path) {
  Builder b;
  const std::string cfile = content_path.string();
  auto content = open_or_throw(content_path);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(content, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto f = split_fields(line, '\t');
    if (f.size() < 2) throw ParseError(cfile, line_no, "expected id, features and label");
    std::vector<double> feats;
    feats.reserve(f.size() - 2);
    for (std::size_t i = 1; i + 1 < f.size(); ++i) feats.push_back(parse_double(f[i], cfile, line_no));
    if (f.back().empty()) throw ParseError(cfile, line_no, "empty label");
    b.add_node(f.front(), std::move(feats), f.back(), cfile, line_no);
  }

  const std::string efile = cites_path.string();
  auto cites = open_or_throw(cites_path);
  line_no = 0;
  while (std::getline(cites, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto f = split_fields(line, '\t');
    if (f.size() != 2) throw ParseError(efile, line_no, "expected '<cited>\\t<citing>'");
    b.add_edge(f[0], f[1]);
  }
  return std::move(b).finish();
}

LoadedGraph load_csv(const std::filesystem::path& nodes_path,
                     const std::filesystem::path& edges_path) {
  Builder b;
  const std::string nfile = nodes_path.string();
  auto nodes = open_or_throw(nodes_path);
  std::string raw;
  if (!std::getline(nodes, raw)) throw ParseError(nfile, 1, "missing header");
  const auto header = split_fields(strip_cr(raw), ',');
  if (header.size() < 2 || header[0] != "id" || header[1] != "label") {
    throw ParseError(nfile, 1, "header must start with 'id,label'");
  }
  for (std::size_t i = 2; i < header.size(); ++i) {
    if (header[i] != "f" + std::to_string(i - 2)) {
      throw ParseError(nfile, 1, "expected feature column 'f" + std::to_string(i - 2) + "'");
    }
  }
  std::size_t line_no = 1;
  while (std::getline(nodes, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto f = split_fields(line, ',');
    if (f.size() != header.size()) {
      throw SchemaError(nfile + ":" + std::to_string(line_no) + ": " + std::to_string(f.size()) +
                        " fields, header has " + std::to_string(header.size()));
    }
    std::vector<double> feats;
    feats.reserve(f.size() - 2);
    for (std::size_t i = 2; i < f.size(); ++i) feats.push_back(parse_double(f[i], nfile, line_no));
    b.add_node(f[0], std::move(feats), f[1], nfile, line_no);
  }

  const std::string efile = edges_path.string();
  auto edges = open_or_throw(edges_path);
  if (!std::getline(edges, raw) || strip_cr(raw) != "src,dst") {
    throw ParseError(efile, 1, "header must be 'src,dst'");
  }
  line_no = 1;
  while (std::getline(edges, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto f = split_fields(line, ',');
    if (f.size() != 2) throw ParseError(efile, line_no, "expected 'src,dst'");
    b.add_edge(f[0], f[1]);
  }
  return std::move(b).finish();
}

}  // namespace mgu
