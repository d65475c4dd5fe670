#include <map>

#include "chainflow/ingest.hpp"
#include "store_util.hpp"

namespace chainflow {

using detail::field;
using detail::ordered_json;

void save_graph(const PropertyGraph& g, const std::filesystem::path& dir) {
  detail::prepare_dir(dir);
  const auto& txs = g.transactions();

  std::vector<ordered_json> nodes;
  nodes.reserve(g.nodes().size());
  for (NodeId id = 0; id < g.nodes().size(); ++id) {
    const auto& n = g.nodes()[id];
    ordered_json row;
    row["id"] = id;
    row["kind"] = to_string(n.kind);
    switch (n.kind) {
      case NodeKind::Transaction: {
        const auto& tx = txs[n.tx];
        row["tx_hash"] = tx.tx_hash;
        row["block_number"] = tx.block_number;
        row["tx_index"] = tx.tx_index;
        row["from"] = tx.from_addr;
        row["to"] = tx.to_addr;
        row["value"] = tx.value;
        row["timestamp"] = tx.timestamp;
        break;
      }
      case NodeKind::Event: {
        const auto& ev = txs[n.tx].events[n.event];
        row["tx"] = g.tx_node(n.tx);
        row["log_index"] = ev.log_index;
        row["name"] = ev.name;
        break;
      }
      case NodeKind::EventProperty: {
        const auto& p = txs[n.tx].events[n.event].properties[n.prop];
        row["event"] = g.event_node(n.tx, n.event);
        row["key"] = p.key;
        row["value"] = p.value;
        break;
      }
      case NodeKind::UniquePropertyPair:
        row["value"] = g.shared_values()[n.value];
        break;
    }
    nodes.push_back(std::move(row));
  }

  std::vector<ordered_json> edges;
  edges.reserve(g.edges().size());
  for (const auto& e : g.edges()) {
    ordered_json row;
    row["kind"] = to_string(e.kind);
    row["src"] = e.src;
    row["dst"] = e.dst;
    edges.push_back(std::move(row));
  }

  ordered_json header;
  header["format"] = kGraphFormat;
  header["transactions"] = txs.size();
  header["nodes"] = nodes.size();
  header["edges"] = edges.size();
  header["same_value_threshold"] = g.options().same_value_threshold;
  header["same_value_materialized"] = g.same_value_materialized();
  detail::write_text(dir / "header.json", header.dump() + "\n");
  detail::write_jsonl(dir / "nodes.jsonl", nodes);
  detail::write_jsonl(dir / "edges.jsonl", edges);
}

PropertyGraph load_graph(const std::filesystem::path& dir) {
  const auto header = detail::read_header(dir, kGraphFormat);
  GraphOptions options;
  options.same_value_threshold = field<std::size_t>(header, "same_value_threshold");

  const auto nodes = detail::read_jsonl(dir / "nodes.jsonl");
  std::vector<TxRecord> txs;
  std::map<std::uint64_t, std::pair<std::size_t, std::size_t>> event_slot;  // node -> (tx, ev)
  std::map<std::uint64_t, std::size_t> tx_slot;
  for (const auto& row : nodes) {
    const auto kind = field<std::string>(row, "kind");
    const auto id = field<std::uint64_t>(row, "id");
    if (kind == "Transaction") {
      TxRecord tx;
      tx.tx_hash = field<std::string>(row, "tx_hash");
      tx.block_number = field<std::uint64_t>(row, "block_number");
      tx.tx_index = field<std::uint64_t>(row, "tx_index");
      tx.from_addr = field<std::string>(row, "from");
      tx.to_addr = field<std::string>(row, "to");
      tx.value = field<std::string>(row, "value");
      tx.timestamp = field<std::int64_t>(row, "timestamp");
      tx_slot[id] = txs.size();
      txs.push_back(std::move(tx));
    } else if (kind == "Event") {
      auto it = tx_slot.find(field<std::uint64_t>(row, "tx"));
      if (it == tx_slot.end()) throw Error(ErrorKind::Schema, "event before its transaction");
      auto& tx = txs[it->second];
      EventRecord ev;
      ev.tx_hash = tx.tx_hash;
      ev.log_index = field<std::uint64_t>(row, "log_index");
      ev.name = field<std::string>(row, "name");
      event_slot[id] = {it->second, tx.events.size()};
      tx.events.push_back(std::move(ev));
    } else if (kind == "EventProperty") {
      auto it = event_slot.find(field<std::uint64_t>(row, "event"));
      if (it == event_slot.end()) throw Error(ErrorKind::Schema, "property before its event");
      txs[it->second.first].events[it->second.second].properties.push_back(
          {field<std::string>(row, "key"), field<std::string>(row, "value")});
    } else if (kind != "UniquePropertyPair") {
      throw Error(ErrorKind::Schema, "unknown node kind " + kind);
    }
  }

  auto g = PropertyGraph::from_records(std::move(txs), options);
  if (g.nodes().size() != field<std::size_t>(header, "nodes")) {
    throw Error(ErrorKind::Schema, "node count mismatch in " + dir.string());
  }
  const auto edges = detail::read_jsonl(dir / "edges.jsonl");
  if (edges.size() != g.edges().size()) {
    throw Error(ErrorKind::Schema, "edge count mismatch in " + dir.string());
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = g.edges()[i];
    if (field<std::string>(edges[i], "kind") != to_string(e.kind) ||
        field<NodeId>(edges[i], "src") != e.src || field<NodeId>(edges[i], "dst") != e.dst) {
      throw Error(ErrorKind::Schema, "edge table inconsistent with nodes at line " +
                                         std::to_string(i + 1));
    }
  }
  return g;
}

}  // namespace chainflow
