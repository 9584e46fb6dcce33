// Drives the mgu executable end to end on the bundled toy dataset.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kToy = fs::path(MGU_DATA_DIR) / "toy";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mgu_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the binary with `args`, stdout discarded and stderr captured.
int mgu(const std::string& args, std::string* err = nullptr) {
  const auto err_path = fs::temp_directory_path() / "mgu_cli_test" / "stderr.txt";
  fs::create_directories(err_path.parent_path());
  const std::string cmd = std::string(MGU_BIN) + " " + args + " > /dev/null 2> " + err_path.string();
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(err_path);
    std::stringstream ss;
    ss << in.rdbuf();
    *err = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256sum(const fs::path& p) {
  const std::string cmd = "sha256sum '" + p.string() + "'";
  std::array<char, 128> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  pclose(pipe);
  return out.substr(0, 64);
}

// Every file except the manifest is listed exactly once with a matching hash.
void check_manifest(const fs::path& dir) {
  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  std::map<std::string, int> listed;
  for (const auto& f : manifest.at("files")) {
    const std::string path = f.at("path");
    ++listed[path];
    CHECK(f.at("sha256").get<std::string>() == sha256sum(dir / path));
    CHECK(f.at("bytes").get<std::uintmax_t>() == fs::file_size(dir / path));
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    CHECK_MESSAGE(listed[rel] == 1, rel);
  }
}

std::string config() { return (kToy / "config.json").string(); }

}  // namespace

TEST_CASE("train writes a model and a manifest") {
  const auto out = scratch("train");
  REQUIRE(mgu("train --config " + config() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "model.json"));
  CHECK(json::parse(slurp(out / "model.json")).at("format") == "mgu-gcn");
  check_manifest(out);
  CHECK(json::parse(slurp(out / "manifest.json")).at("command") == "train");
}

TEST_CASE("staged pipeline and evaluation of identical models") {
  const auto root = scratch("pipeline");
  const auto cfg = config();
  REQUIRE(mgu("train --config " + cfg + " --out " + (root / "train").string()) == 0);
  REQUIRE(mgu("memscore --config " + cfg + " --format csv --out " + (root / "mem").string()) == 0);
  check_manifest(root / "mem");
  const auto header = slurp(root / "mem" / "mem_table.csv").substr(0, 35);
  CHECK(header == "node_id,delta_self,delta_nbr,mem\n0,");
  REQUIRE(mgu("memscore --config " + cfg + " --out " + (root / "mem_json").string()) == 0);
  const auto rows = json::parse(slurp(root / "mem_json" / "mem_table.json")).at("rows");
  CHECK(rows.size() == 30);

  const auto scores = (root / "mem" / "mem_table.csv").string();
  REQUIRE(mgu("sample --config " + cfg + " --scores " + scores + " --setting hard --out " +
              (root / "sample").string()) == 0);
  const auto request = (root / "sample" / "request.json").string();
  const auto sets = json::parse(slurp(root / "sample" / "sets.json"));
  CHECK(sets.at("high_mem").size() == 3);
  REQUIRE(mgu("sample --config " + cfg + " --scores " + (root / "mem_json" / "mem_table.json").string() +
              " --setting hard --out " + (root / "sample_json").string()) == 0);
  CHECK(slurp(root / "sample_json" / "request.json") == slurp(root / "sample" / "request.json"));

  const auto model = (root / "train" / "model.json").string();
  REQUIRE(mgu("unlearn --config " + cfg + " --model " + model + " --request " + request +
              " --method mgu --out " + (root / "mgu").string()) == 0);
  REQUIRE(mgu("unlearn --config " + cfg + " --request " + request + " --method retrain --out " +
              (root / "retrain").string()) == 0);
  check_manifest(root / "mgu");

  const auto u = (root / "mgu" / "model.json").string();
  const auto r = (root / "retrain" / "model.json").string();
  REQUIRE(mgu("evaluate --config " + cfg + " --request " + request + " --unlearned " + u + " --retrained " + u +
              " --out " + (root / "same").string()) == 0);
  CHECK(json::parse(slurp(root / "same" / "report.json")).at("tou") == 1.0);

  REQUIRE(mgu("evaluate --config " + cfg + " --request " + request + " --unlearned " + u + " --retrained " + r +
              " --format csv --out " + (root / "diff").string()) == 0);
  CHECK(fs::exists(root / "diff" / "report.csv"));
}

TEST_CASE("config errors exit with code 2 and name the field") {
  const auto dir = scratch("bad");
  std::ofstream(dir / "config.json") << R"({"train": {"epochs": 10}})";
  std::string err;
  CHECK(mgu("train --config " + (dir / "config.json").string() + " --out " + (dir / "o").string(), &err) == 2);
  const auto doc = json::parse(err);
  CHECK(doc.at("error") == "config");
  CHECK(doc.at("field") == "dataset");

  std::ofstream(dir / "typo.json") << R"({"dataset": {"source": "sbm", "sbm": {"blocks": [5, 5]}}, "train": {"epochz": 10}})";
  CHECK(mgu("train --config " + (dir / "typo.json").string() + " --out " + (dir / "o").string(), &err) == 2);
  CHECK(json::parse(err).at("field").get<std::string>().find("epochz") != std::string::npos);

  CHECK(mgu("train --bogus-flag", &err) == 2);
  CHECK(mgu("evaluate --config " + config() + " --out " + (dir / "o").string(), &err) != 0);
}

TEST_CASE("experiment output is identical across worker counts") {
  const auto a = scratch("exp1");
  const auto b = scratch("exp3");
  REQUIRE(mgu("experiment --config " + config() + " --workers 1 --out " + a.string()) == 0);
  REQUIRE(mgu("experiment --config " + config() + " --workers 3 --out " + b.string()) == 0);
  check_manifest(a);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    const auto name = rel.generic_string();
    if (name == "manifest.json" || name == "config.json") continue;
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / rel), name);
  }
  const auto agg = slurp(a / "aggregate.csv");
  CHECK(agg.rfind("method,setting,task,runs,tou_mean,tou_std", 0) == 0);
  std::size_t lines = 0;
  for (char ch : agg) lines += ch == '\n';
  CHECK(lines == 10);
}
