#include <algorithm>
#include <fstream>
#include <sstream>

#include "chainflow/error.hpp"
#include "chainflow/hash.hpp"
#include "chainflow/ingest.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace chainflow;
using fixtures::addr;
using fixtures::tx;

namespace {

std::size_t count_nodes(const PropertyGraph& g, NodeKind kind) {
  return static_cast<std::size_t>(std::count_if(g.nodes().begin(), g.nodes().end(),
                                                [&](const GraphNode& n) { return n.kind == kind; }));
}

std::size_t count_edges(const PropertyGraph& g, EdgeKind kind) {
  return static_cast<std::size_t>(std::count_if(g.edges().begin(), g.edges().end(),
                                                [&](const GraphEdge& e) { return e.kind == kind; }));
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("address and hash validation") {
  CHECK(is_address(addr(1)));
  CHECK_FALSE(is_address("0x123"));
  CHECK_FALSE(is_address("1x" + addr(1).substr(2)));
  CHECK(is_tx_hash(fixtures::hash(9)));
  CHECK_FALSE(is_tx_hash(addr(9)));
  CHECK(is_decimal("12345"));
  CHECK_FALSE(is_decimal("12a"));
  CHECK_FALSE(is_decimal(""));
  CHECK(canonical_value("0xABCDEF") == "0xabcdef");
  CHECK(canonical_value("Hello") == "Hello");
}

TEST_CASE("empty dataset gives an empty graph") {
  const auto dir = fixtures::temp_dir("ingest_empty");
  fixtures::write_lines(dir / "empty.jsonl", {});
  const auto r = load_dataset(dir / "empty.jsonl");
  CHECK(r.graph.nodes().empty());
  CHECK(r.graph.edges().empty());
  CHECK(r.errors.empty());
}

TEST_CASE("shared property value across two events gives one SAME_VALUE link") {
  const auto g = PropertyGraph::from_records(
      {tx(1, 10, addr(1), addr(2), {{"A", {{"ref", "0xabc"}}}, {"B", {{"ref", "0xabc"}}}})});
  CHECK(count_nodes(g, NodeKind::Transaction) == 1);
  CHECK(count_nodes(g, NodeKind::Event) == 2);
  CHECK(count_nodes(g, NodeKind::EventProperty) == 2);
  CHECK(count_nodes(g, NodeKind::UniquePropertyPair) == 1);
  CHECK(count_edges(g, EdgeKind::Emits) == 2);
  CHECK(count_edges(g, EdgeKind::Has) == 2);
  CHECK(count_edges(g, EdgeKind::SameValue) == 1);
  CHECK(g.same_value_link_count() == 1);
  CHECK(g.shared_values() == std::vector<std::string>{"0xabc"});
}

TEST_CASE("node and edge counts follow the fixture construction") {
  std::vector<TxRecord> txs;
  std::size_t events = 0, props = 0;
  for (int t = 0; t < 5; ++t) {
    auto r = tx(static_cast<std::uint64_t>(t + 1), 100 + t, addr(1), addr(2), {});
    for (int e = 0; e <= t; ++e) {
      EventRecord ev{r.tx_hash, static_cast<std::uint64_t>(e), "E" + std::to_string(e), {}};
      for (int p = 0; p < e; ++p) ev.properties.push_back({"k" + std::to_string(p), std::to_string(1000 * t + 10 * e + p)});
      props += ev.properties.size();
      r.events.push_back(ev);
      ++events;
    }
    txs.push_back(r);
  }
  const auto g = PropertyGraph::from_records(txs);
  CHECK(g.nodes().size() == 5 + events + props);
  CHECK(g.edges().size() == events + props);
  CHECK(g.shared_values().empty());
}

TEST_CASE("lazy SAME_VALUE index answers the same peers as stored edges") {
  std::vector<TxRecord> txs;
  for (int t = 0; t < 4; ++t) {
    txs.push_back(tx(static_cast<std::uint64_t>(t + 1), 100 + t, addr(1), addr(2),
                     {{"A", {{"v", "7"}}}, {"B", {{"v", "7"}, {"w", "8"}}}}));
  }
  const auto stored = PropertyGraph::from_records(txs);
  GraphOptions lazy_opts;
  lazy_opts.same_value_threshold = 0;
  const auto lazy = PropertyGraph::from_records(txs, lazy_opts);
  CHECK(stored.same_value_materialized());
  CHECK_FALSE(lazy.same_value_materialized());
  CHECK(count_edges(lazy, EdgeKind::SameValue) == 0);
  CHECK(stored.same_value_link_count() == 28 + 6);
  for (std::size_t t = 0; t < txs.size(); ++t) {
    const auto p = stored.property_node(t, 0, 0);
    auto a = stored.same_value_peers(p);
    auto b = lazy.same_value_peers(lazy.property_node(t, 0, 0));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(a.size() == 7);
  }
}

TEST_CASE("malformed lines are skipped and reported") {
  const auto dir = fixtures::temp_dir("ingest_bad");
  const auto good = format_tx_line(tx(1, 10, addr(1), addr(2), {{"A", {}}}));
  std::string missing = good;
  missing.erase(missing.find("\"tx_hash\""), std::string("\"tx_hash\":\"") .size() + 66 + 2);
  fixtures::write_lines(dir / "d.jsonl", {good, missing});
  const auto r = load_dataset(dir / "d.jsonl");
  CHECK(r.graph.transactions().size() == 1);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].line == 2);

  LoadOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(load_dataset(dir / "d.jsonl", strict), Error);
}

TEST_CASE("missing dataset file is an Io error") {
  try {
    load_dataset("/nonexistent/chainflow/data.jsonl");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("tx line round trip") {
  const auto t = tx(3, 55, addr(4), addr(5), {{"Mint", {{"tokenId", "12"}, {"to", addr(6)}}}, {"Log", {}}});
  CHECK(parse_tx_line(format_tx_line(t)) == t);
  CHECK_THROWS_AS(parse_tx_line("{}"), Error);
  CHECK_THROWS_AS(parse_tx_line("not json"), Error);
}

TEST_CASE("records are put in canonical order") {
  auto a = tx(1, 20, addr(1), addr(2), {{"A", {}}});
  auto b = tx(2, 10, addr(1), addr(2), {{"B", {}}});
  const auto g = PropertyGraph::from_records({a, b});
  CHECK(g.transactions()[0].tx_hash == b.tx_hash);
  CHECK(g.find_tx(a.tx_hash) != nullptr);
  CHECK(g.find_tx(fixtures::hash(99)) == nullptr);
}

TEST_CASE("distinct_addresses is the union of senders, receivers and address values") {
  const auto g = PropertyGraph::from_records(
      {tx(1, 10, addr(1), addr(2), {{"A", {{"user", addr(3)}, {"amount", "5"}}}}),
       tx(2, 11, addr(3), addr(2), {{"B", {{"user", addr(1)}}}})});
  CHECK(distinct_addresses(g) == std::vector<std::string>{addr(1), addr(2), addr(3)});
  CHECK(distinct_addresses(PropertyGraph{}).empty());
}

TEST_CASE("save and load round trip with byte-identical saves") {
  const auto g = PropertyGraph::from_records(
      {tx(1, 10, addr(1), addr(2), {{"A", {{"ref", "0xabc"}}}, {"B", {{"ref", "0xabc"}}}}),
       tx(2, 12, addr(2), addr(1), {{"C", {{"n", "3"}}}})});
  const auto d1 = fixtures::temp_dir("graph_save1");
  const auto d2 = fixtures::temp_dir("graph_save2");
  save_graph(g, d1);
  save_graph(g, d2);
  CHECK(load_graph(d1) == g);
  for (const auto& entry : std::filesystem::directory_iterator(d1)) {
    CHECK(read_all(entry.path()) == read_all(d2 / entry.path().filename()));
  }
}

TEST_CASE("loading from an empty directory is a format error") {
  const auto d = fixtures::temp_dir("graph_empty");
  try {
    load_graph(d);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FormatVersion);
  }
}

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
