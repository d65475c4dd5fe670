#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "chainflow/cli.hpp"
#include "chainflow/config.hpp"
#include "chainflow/error.hpp"
#include "chainflow/export.hpp"
#include "chainflow/pipeline.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace chainflow;
using fixtures::addr;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "chainflow");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<TxRecord> two_step_user() {
  std::vector<TxRecord> txs;
  for (std::uint64_t n = 1; n <= 2; ++n) {
    auto t = fixtures::tx(n, static_cast<std::int64_t>(100 * n), addr(1), addr(0xfff), {});
    t.events.push_back({t.tx_hash, 0, n == 1 ? "a" : "b", {}});
    txs.push_back(t);
  }
  return txs;
}

// Small synthetic dataset written once per test directory.
std::filesystem::path small_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "data.jsonl";
  REQUIRE(run({"--seed", "3", "synth", "--users-per", "2", "--out", path.string(), "--truth",
               (dir / "truth.csv").string()}) == 0);
  return path;
}

}  // namespace

TEST_CASE("exit code mapping") {
  CHECK(exit_code(ErrorKind::Io) == kExitInput);
  CHECK(exit_code(ErrorKind::Schema) == kExitInput);
  CHECK(exit_code(ErrorKind::Config) == kExitConfig);
  CHECK(exit_code(ErrorKind::UnsupportedFormat) == kExitConfig);
  CHECK(exit_code(ErrorKind::Divergence) == kExitInternal);
  CHECK(exit_code(ErrorKind::Internal) == kExitInternal);
}

TEST_CASE("config keys round trip and unknown keys are rejected") {
  auto c = default_config();
  set_config_value(c, "embed.d_hidden", "16");
  set_config_value(c, "cluster.algorithms", R"(["kmeans", "birch"])");
  CHECK(c.embed.d_hidden == 16);
  CHECK(c.cluster.algorithms == std::vector<std::string>{"kmeans", "birch"});
  CHECK_THROWS_AS(set_config_value(c, "embed.nope", "1"), Error);
  CHECK_THROWS_AS(set_config_value(c, "embed.d_hidden", R"("wide")"), Error);

  const auto dir = fixtures::temp_dir("cli_config");
  fixtures::write_lines(dir / "c.json", {to_json_text(c)});
  auto back = default_config();
  apply_config_file(back, dir / "c.json");
  CHECK(to_json_text(back) == to_json_text(c));
  const auto keys = config_keys();
  CHECK(nlohmann::json::parse(to_json_text(c)).size() == keys.size());

  c.embed.mask_rate = 2.0;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("export of a three-node flow") {
  const auto bg = form_behaviour(PropertyGraph::from_records(two_step_user()));
  const auto g = export_flow(extract_flow(bg, addr(1), false), &bg);
  CHECK(g.nodes.size() == 3);
  CHECK(g.edges.size() == 2);
  const auto dot = to_dot(g);
  CHECK(count(dot, " -> ") == 2);
  CHECK(count(dot, "kind=") == 3);
  CHECK(dot == to_dot(g));
  const auto graphml = to_graphml(g);
  CHECK(count(graphml, "<node ") == 3);
  CHECK(count(graphml, "<edge ") == 2);
  CHECK(count(to_csv(g), "\n") >= 2);
}

TEST_CASE("empty graph renders as a valid empty document") {
  ExportGraph g;
  g.name = "empty";
  const auto dot = to_dot(g);
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find('}') != std::string::npos);
  const auto graphml = to_graphml(g);
  CHECK(graphml.find("</graphml>") != std::string::npos);
  CHECK(count(graphml, "<node ") == 0);
}

TEST_CASE("virtual step edges carry the cluster in GraphML") {
  const auto bg = form_behaviour(PropertyGraph::from_records(two_step_user()));
  const auto gf = general_flow({extract_flow(bg, addr(1), true)}, 4);
  const auto graphml = to_graphml(export_general_flow(gf, &bg));
  CHECK(count(graphml, "VIRTUAL_STEP") >= 2);
  CHECK(graphml.find("attr.name=\"cluster\"") != std::string::npos);
  CHECK(graphml.find(">4</data>") != std::string::npos);
  CHECK_THROWS_AS(parse_export_format("svg"), Error);
}

TEST_CASE("pipeline exit codes") {
  const auto dir = fixtures::temp_dir("cli_exit");
  const auto data = small_dataset(dir);
  CHECK(run({"pipeline", "--input", (dir / "missing.jsonl").string(), "--out", (dir / "r1").string()}) ==
        kExitInput);
  CHECK(run({"pipeline", "--input", data.string(), "--out", (dir / "r2").string(), "--set",
             "embed.bogus=1"}) == kExitConfig);
  CHECK(run({"--config", (dir / "absent.json").string(), "pipeline", "--input", data.string(), "--out",
             (dir / "r3").string()}) != 0);
  CHECK(run({"frobnicate"}) == kExitConfig);
  REQUIRE(run({"ingest", "--input", data.string(), "--out", (dir / "g").string()}) == 0);
  REQUIRE(run({"actions", "--graph", (dir / "g").string(), "--out", (dir / "bg").string()}) == 0);
  CHECK(run({"embed", "--bgraph", (dir / "bg").string(), "--out", (dir / "e.csv").string(), "--lr",
             "1e200"}) == kExitInternal);
  CHECK(run({"flow", "--bgraph", (dir / "bg").string(), "--address", addr(0x1234)}) == kExitInput);
}

TEST_CASE("pipeline writes every artifact and reruns identically") {
  const auto dir = fixtures::temp_dir("cli_pipeline");
  const auto data = small_dataset(dir);
  const auto a = dir / "a", b = dir / "b";
  REQUIRE(run({"--seed", "3", "pipeline", "--input", data.string(), "--out", a.string()}) == 0);
  REQUIRE(run({"--seed", "3", "pipeline", "--input", data.string(), "--out", b.string()}) == 0);
  for (const char* f : {"embeddings.csv", "clusters.csv", "scores.csv", "profiles.csv", "manifest.json"}) {
    CHECK(std::filesystem::exists(a / f));
  }
  CHECK(std::filesystem::is_directory(a / "graph"));
  CHECK(std::filesystem::is_directory(a / "bgraph"));
  CHECK(std::filesystem::is_directory(a / "general_flows"));
  const auto ha = hash_tree(a), hb = hash_tree(b);
  CHECK(ha == hb);
  CHECK(ha.count("manifest.json") == 0);
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest.at("config").at("seed") == 3);
}

TEST_CASE("seed precedence: flag over config file over environment") {
  const auto dir = fixtures::temp_dir("cli_seed");
  const auto data = small_dataset(dir);
  fixtures::write_lines(dir / "c.json", {R"({"seed": 5, "embed.epochs": 2})"});
  ::setenv("CHAINFLOW_SEED", "8", 1);
  REQUIRE(run({"pipeline", "--input", data.string(), "--out", (dir / "env").string()}) == 0);
  REQUIRE(run({"--config", (dir / "c.json").string(), "pipeline", "--input", data.string(), "--out",
               (dir / "file").string()}) == 0);
  REQUIRE(run({"--seed", "9", "--config", (dir / "c.json").string(), "pipeline", "--input", data.string(),
               "--out", (dir / "flag").string()}) == 0);
  ::unsetenv("CHAINFLOW_SEED");
  auto seed_of = [&](const char* run_dir) {
    return nlohmann::json::parse(slurp(dir / run_dir / "manifest.json")).at("config").at("seed").get<int>();
  };
  CHECK(seed_of("env") == 8);
  CHECK(seed_of("file") == 5);
  CHECK(seed_of("flag") == 9);
}
