#include "mgu/serialize.hpp"

#include <fstream>
#include <sstream>

#include "mgu/errors.hpp"

namespace mgu {

using nlohmann::json;

namespace {

void expect_format(const json& doc, const char* format, int version) {
  if (!doc.is_object()) throw SchemaError(std::string(format) + ": document is not an object");
  if (!doc.contains("format") || doc["format"] != format) {
    throw SchemaError(std::string("expected format '") + format + "'");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != version) {
    throw SchemaError(std::string(format) + ": unsupported version " +
                      (doc.contains("version") ? doc["version"].dump() : std::string("<missing>")));
  }
}

template <typename T>
T field(const json& doc, const char* key) {
  if (!doc.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& doc, const char* what) {
  if (!doc.is_array()) throw SchemaError(std::string(what) + ": expected array of rows");
  const std::size_t rows = doc.size();
  const std::size_t cols = rows == 0 ? 0 : doc[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!doc[r].is_array() || doc[r].size() != cols) {
      throw SchemaError(std::string(what) + ": ragged row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!doc[r][c].is_number()) throw SchemaError(std::string(what) + ": non-numeric entry");
      m(r, c) = doc[r][c].get<double>();
    }
  }
  return m;
}

json graph_to_json(const Graph& graph) {
  json labels = json::array();
  for (int y : graph.labels()) labels.push_back(y == kNoLabel ? json(nullptr) : json(y));
  std::vector<int> train(graph.train_mask().begin(), graph.train_mask().end());
  std::vector<int> test(graph.test_mask().begin(), graph.test_mask().end());
  return {{"format", "mgu-graph"},
          {"version", kGraphFormatVersion},
          {"n", graph.num_nodes()},
          {"d", graph.feature_dim()},
          {"C", graph.num_classes()},
          {"csr_offsets", graph.csr_offsets()},
          {"csr_targets", graph.csr_targets()},
          {"features", matrix_to_json(graph.features())},
          {"labels", labels},
          {"train_mask", train},
          {"test_mask", test}};
}

Graph graph_from_json(const json& doc) {
  expect_format(doc, "mgu-graph", kGraphFormatVersion);
  const auto n = field<std::size_t>(doc, "n");
  const auto d = field<std::size_t>(doc, "d");
  Matrix x = matrix_from_json(doc.at("features"), "features");
  if (x.rows() != n || (n > 0 && x.cols() != d)) throw SchemaError("features shape != n x d");
  if (n == 0) x = Matrix(0, d);
  std::vector<int> labels;
  for (const auto& y : doc.at("labels")) labels.push_back(y.is_null() ? kNoLabel : y.get<int>());
  auto to_mask = [&](const char* key) {
    const auto raw = field<std::vector<int>>(doc, key);
    return std::vector<std::uint8_t>(raw.begin(), raw.end());
  };
  return Graph::from_csr(field<std::vector<std::uint64_t>>(doc, "csr_offsets"),
                         field<std::vector<NodeId>>(doc, "csr_targets"), std::move(x),
                         std::move(labels), field<int>(doc, "C"), to_mask("train_mask"),
                         to_mask("test_mask"));
}

json model_to_json(const ModelParams& p) {
  json doc = {{"format", "mgu-gcn"},
              {"version", kModelFormatVersion},
              {"d", p.input_dim()},
              {"h", p.hidden_dim()},
              {"C", p.num_classes()},
              {"W1", matrix_to_json(p.w1)},
              {"b1", p.b1},
              {"W2", matrix_to_json(p.w2)},
              {"b2", p.b2}};
  if (p.tau) doc["tau"] = *p.tau;
  return doc;
}

ModelParams model_from_json(const json& doc) {
  expect_format(doc, "mgu-gcn", kModelFormatVersion);
  const auto d = field<std::size_t>(doc, "d");
  const auto h = field<std::size_t>(doc, "h");
  const auto c = field<std::size_t>(doc, "C");
  ModelParams p;
  p.w1 = matrix_from_json(doc.at("W1"), "W1");
  p.w2 = matrix_from_json(doc.at("W2"), "W2");
  p.b1 = field<std::vector<double>>(doc, "b1");
  p.b2 = field<std::vector<double>>(doc, "b2");
  if (d == 0 || h == 0) p.w1 = Matrix(d, h);
  if (p.w1.rows() != d || p.w1.cols() != h || p.w2.rows() != h || p.w2.cols() != c ||
      p.b1.size() != h || p.b2.size() != c) {
    throw SchemaError("model tensor shapes do not match d/h/C");
  }
  if (doc.contains("tau")) p.tau = field<std::vector<double>>(doc, "tau");
  return p;
}

std::string save_model(const ModelParams& params) { return dump_json(model_to_json(params)); }

ModelParams load_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("model JSON: ") + e.what());
  }
  return model_from_json(doc);
}

json request_to_json(const UnlearnRequest& request) {
  json doc = {{"format", "mgu-request"}, {"version", 1}, {"kind", to_string(request.kind)}};
  if (request.kind == RequestKind::Edge) {
    json edges = json::array();
    for (const auto& e : request.edges) edges.push_back({e.u, e.v});
    doc["edges"] = edges;
  } else {
    doc["nodes"] = request.nodes;
  }
  return doc;
}

UnlearnRequest request_from_json(const json& doc) {
  expect_format(doc, "mgu-request", 1);
  const auto kind = request_kind_from_string(field<std::string>(doc, "kind"));
  if (kind == RequestKind::Edge) {
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw SchemaError("edge entries must be [u, v]");
      edges.push_back({e[0].get<NodeId>(), e[1].get<NodeId>()});
    }
    return UnlearnRequest::edge_deletion(std::move(edges));
  }
  auto nodes = field<std::vector<NodeId>>(doc, "nodes");
  return kind == RequestKind::Node ? UnlearnRequest::node_deletion(std::move(nodes))
                                   : UnlearnRequest::feature_deletion(std::move(nodes));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace mgu
