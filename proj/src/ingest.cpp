#include "chainflow/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_set>
#include <variant>

#include "chainflow/error.hpp"
#include "json.hpp"

namespace chainflow {

using ordered_json = nlohmann::ordered_json;

namespace {

bool is_hex_body(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isxdigit(c) != 0; });
}

bool is_hex_string(std::string_view s, std::size_t digits) {
  return s.size() == digits + 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X') &&
         is_hex_body(s.substr(2));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorKind::Schema, what);
}

const ordered_json& require(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) schema_error(std::string("missing field '") + key + "'");
  return *it;
}

std::uint64_t require_uint(const ordered_json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    auto i = v.get<std::int64_t>();
    if (i < 0) schema_error(std::string("field '") + key + "' is negative");
    return static_cast<std::uint64_t>(i);
  }
  if (v.is_string() && is_decimal(v.get_ref<const std::string&>())) {
    try {
      return std::stoull(v.get_ref<const std::string&>());
    } catch (const std::exception&) {
    }
  }
  schema_error(std::string("field '") + key + "' is not a non-negative integer");
}

std::string require_address(const ordered_json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string() || !is_address(v.get_ref<const std::string&>())) {
    schema_error(std::string("field '") + key + "' is not a 20-byte hex address");
  }
  return lower(v.get_ref<const std::string&>());
}

std::string scalar_to_string(const ordered_json& v) {
  if (v.is_string()) return canonical_value(v.get_ref<const std::string&>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  return v.dump();
}

void append_property(std::vector<Property>& out, const std::string& key,
                     const ordered_json& v) {
  if (v.is_array()) {
    for (const auto& item : v) out.push_back({key, scalar_to_string(item)});
  } else {
    out.push_back({key, scalar_to_string(v)});
  }
}

EventRecord parse_event(const ordered_json& obj, const std::string& tx_hash) {
  if (!obj.is_object()) schema_error("event is not an object");
  EventRecord ev;
  ev.tx_hash = tx_hash;
  ev.log_index = require_uint(obj, "log_index");
  const auto& name = require(obj, "name");
  if (!name.is_string() || name.get_ref<const std::string&>().empty()) {
    schema_error("event name must be a non-empty string");
  }
  ev.name = name.get<std::string>();
  if (auto it = obj.find("properties"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) schema_error("event properties must be an object");
    for (const auto& [key, value] : it->items()) {
      if (key.empty()) schema_error("event property key is empty");
      append_property(ev.properties, key, value);
    }
  }
  return ev;
}

}  // namespace

bool is_address(std::string_view s) { return is_hex_string(s, 40); }
bool is_tx_hash(std::string_view s) { return is_hex_string(s, 64); }

bool is_decimal(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

std::string canonical_value(std::string_view raw) {
  if (raw.size() > 2 && raw[0] == '0' && (raw[1] == 'x' || raw[1] == 'X') &&
      is_hex_body(raw.substr(2))) {
    return lower(raw);
  }
  return std::string(raw);
}

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Transaction: return "Transaction";
    case NodeKind::Event: return "Event";
    case NodeKind::EventProperty: return "EventProperty";
    case NodeKind::UniquePropertyPair: return "UniquePropertyPair";
  }
  return "?";
}

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Emits: return "EMITS";
    case EdgeKind::Has: return "HAS";
    case EdgeKind::SameValue: return "SAME_VALUE";
  }
  return "?";
}

TxRecord parse_tx_line(std::string_view line) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    schema_error(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) schema_error("line is not a JSON object");

  TxRecord tx;
  const auto& hash = require(obj, "tx_hash");
  if (!hash.is_string() || !is_tx_hash(hash.get_ref<const std::string&>())) {
    schema_error("field 'tx_hash' is not a 32-byte hex hash");
  }
  tx.tx_hash = lower(hash.get_ref<const std::string&>());
  tx.block_number = require_uint(obj, "block_number");
  tx.tx_index = require_uint(obj, "tx_index");
  tx.from_addr = require_address(obj, "from");
  tx.to_addr = require_address(obj, "to");

  const auto& value = require(obj, "value");
  if (value.is_number_unsigned()) {
    tx.value = std::to_string(value.get<std::uint64_t>());
  } else if (value.is_string() && is_decimal(value.get_ref<const std::string&>())) {
    tx.value = value.get<std::string>();
  } else {
    schema_error("field 'value' is not a decimal string");
  }

  const auto ts = require_uint(obj, "timestamp");
  if (ts == 0 || ts > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    schema_error("field 'timestamp' must be strictly positive");
  }
  tx.timestamp = static_cast<std::int64_t>(ts);

  if (auto it = obj.find("events"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) schema_error("field 'events' is not an array");
    for (const auto& ev : *it) tx.events.push_back(parse_event(ev, tx.tx_hash));
  }
  std::stable_sort(tx.events.begin(), tx.events.end(),
                   [](const EventRecord& a, const EventRecord& b) {
                     return a.log_index < b.log_index;
                   });
  for (std::size_t i = 1; i < tx.events.size(); ++i) {
    if (tx.events[i].log_index == tx.events[i - 1].log_index) {
      schema_error("duplicate log_index " + std::to_string(tx.events[i].log_index));
    }
  }
  return tx;
}

std::string format_tx_line(const TxRecord& tx) {
  ordered_json obj;
  obj["tx_hash"] = tx.tx_hash;
  obj["block_number"] = tx.block_number;
  obj["tx_index"] = tx.tx_index;
  obj["from"] = tx.from_addr;
  obj["to"] = tx.to_addr;
  obj["value"] = tx.value;
  obj["timestamp"] = tx.timestamp;
  auto events = ordered_json::array();
  for (const auto& ev : tx.events) {
    ordered_json e;
    e["log_index"] = ev.log_index;
    e["name"] = ev.name;
    ordered_json props = ordered_json::object();
    for (const auto& p : ev.properties) {
      auto it = props.find(p.key);
      if (it == props.end()) {
        props[p.key] = p.value;
      } else if (it->is_array()) {
        it->push_back(p.value);
      } else {
        *it = ordered_json::array({*it, p.value});
      }
    }
    e["properties"] = std::move(props);
    events.push_back(std::move(e));
  }
  obj["events"] = std::move(events);
  return obj.dump();
}

// ---------------------------------------------------------------------------

PropertyGraph PropertyGraph::from_records(std::vector<TxRecord> txs, GraphOptions options) {
  PropertyGraph g;
  g.options_ = options;
  for (auto& tx : txs) {
    std::stable_sort(tx.events.begin(), tx.events.end(),
                     [](const EventRecord& a, const EventRecord& b) {
                       return a.log_index < b.log_index;
                     });
  }
  std::sort(txs.begin(), txs.end(), [](const TxRecord& a, const TxRecord& b) {
    return std::tie(a.block_number, a.tx_index, a.tx_hash) <
           std::tie(b.block_number, b.tx_index, b.tx_hash);
  });
  g.txs_ = std::move(txs);
  g.build();
  return g;
}

void PropertyGraph::build() {
  nodes_.clear();
  edges_.clear();
  tx_node_.clear();
  event_node_.clear();
  value_txs_.clear();
  value_props_.clear();
  from_txs_.clear();
  tx_by_hash_.clear();
  shared_values_.clear();

  for (std::uint32_t t = 0; t < txs_.size(); ++t) {
    const auto& tx = txs_[t];
    tx_by_hash_.emplace(tx.tx_hash, t);
    from_txs_[tx.from_addr].push_back(t);
    const auto tx_id = static_cast<NodeId>(nodes_.size());
    tx_node_.push_back(tx_id);
    nodes_.push_back({NodeKind::Transaction, t, 0, 0, 0});
    auto& ev_nodes = event_node_.emplace_back();
    for (std::uint32_t e = 0; e < tx.events.size(); ++e) {
      const auto ev_id = static_cast<NodeId>(nodes_.size());
      ev_nodes.push_back(ev_id);
      nodes_.push_back({NodeKind::Event, t, e, 0, 0});
      edges_.push_back({EdgeKind::Emits, tx_id, ev_id});
      const auto& props = tx.events[e].properties;
      for (std::uint32_t p = 0; p < props.size(); ++p) {
        const auto prop_id = static_cast<NodeId>(nodes_.size());
        nodes_.push_back({NodeKind::EventProperty, t, e, p, 0});
        edges_.push_back({EdgeKind::Has, ev_id, prop_id});
        const auto& value = props[p].value;
        auto& vt = value_txs_[value];
        if (vt.empty() || vt.back() != t) vt.push_back(t);
        if (!value.empty()) value_props_[value].push_back(prop_id);
      }
    }
  }

  // A value is shared when its properties span at least two events.
  std::size_t links = 0;
  for (const auto& [value, props] : value_props_) {
    if (props.size() < 2) continue;
    std::size_t same_event_pairs = 0;
    std::size_t run = 1;
    std::size_t events = 1;
    for (std::size_t i = 1; i <= props.size(); ++i) {
      const bool same = i < props.size() &&
                        nodes_[props[i]].tx == nodes_[props[i - 1]].tx &&
                        nodes_[props[i]].event == nodes_[props[i - 1]].event;
      if (same) {
        ++run;
      } else {
        same_event_pairs += run * (run - 1) / 2;
        run = 1;
        if (i < props.size()) ++events;
      }
    }
    if (events < 2) continue;
    shared_values_.push_back(value);
    links += props.size() * (props.size() - 1) / 2 - same_event_pairs;
  }
  std::sort(shared_values_.begin(), shared_values_.end());
  same_value_links_ = links;
  same_value_materialized_ = links <= options_.same_value_threshold;

  for (std::uint32_t v = 0; v < shared_values_.size(); ++v) {
    nodes_.push_back({NodeKind::UniquePropertyPair, 0, 0, 0, v});
  }

  if (same_value_materialized_) {
    std::vector<GraphEdge> same;
    same.reserve(links);
    for (const auto& value : shared_values_) {
      const auto& props = value_props_.at(value);
      for (std::size_t i = 0; i < props.size(); ++i) {
        for (std::size_t j = i + 1; j < props.size(); ++j) {
          const auto& a = nodes_[props[i]];
          const auto& b = nodes_[props[j]];
          if (a.tx == b.tx && a.event == b.event) continue;
          same.push_back({EdgeKind::SameValue, props[i], props[j]});
        }
      }
    }
    std::sort(same.begin(), same.end(), [](const GraphEdge& a, const GraphEdge& b) {
      return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
    });
    edges_.insert(edges_.end(), same.begin(), same.end());
  }
}

NodeId PropertyGraph::event_node(std::size_t tx, std::size_t event) const {
  return event_node_.at(tx).at(event);
}

NodeId PropertyGraph::property_node(std::size_t tx, std::size_t event,
                                    std::size_t prop) const {
  return event_node(tx, event) + 1 + static_cast<NodeId>(prop);
}

std::vector<NodeId> PropertyGraph::same_value_peers(NodeId property) const {
  const auto& node = nodes_.at(property);
  if (node.kind != NodeKind::EventProperty) return {};
  const auto& value = txs_[node.tx].events[node.event].properties[node.prop].value;
  std::vector<NodeId> peers;
  auto it = value_props_.find(value);
  if (it == value_props_.end()) return peers;
  for (NodeId other : it->second) {
    const auto& o = nodes_[other];
    if (o.tx == node.tx && o.event == node.event) continue;
    peers.push_back(other);
  }
  return peers;
}

const std::vector<std::uint32_t>& PropertyGraph::transactions_with_value(
    std::string_view value) const {
  static const std::vector<std::uint32_t> kEmpty;
  auto it = value_txs_.find(std::string(value));
  return it == value_txs_.end() ? kEmpty : it->second;
}

const std::vector<std::uint32_t>& PropertyGraph::transactions_from(
    std::string_view addr) const {
  static const std::vector<std::uint32_t> kEmpty;
  auto it = from_txs_.find(std::string(addr));
  return it == from_txs_.end() ? kEmpty : it->second;
}

const TxRecord* PropertyGraph::find_tx(std::string_view hash) const {
  auto it = tx_by_hash_.find(std::string(hash));
  return it == tx_by_hash_.end() ? nullptr : &txs_[it->second];
}

// ---------------------------------------------------------------------------

LoadResult load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read dataset " + path.string());

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));

  using Parsed = std::variant<std::monostate, TxRecord, std::string>;
  std::vector<Parsed> parsed(lines.size());
  auto parse_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& line = lines[i];
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        parsed[i] = parse_tx_line(line);
      } catch (const Error& e) {
        parsed[i] = std::string(e.what());
      }
    }
  };
  const unsigned threads = std::max(1u, options.threads);
  if (threads == 1 || lines.size() < 2 * threads) {
    parse_range(0, lines.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (lines.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(lines.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(parse_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  LoadResult result;
  std::vector<TxRecord> txs;
  std::unordered_set<std::string> hashes;
  std::set<std::pair<std::uint64_t, std::uint64_t>> positions;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    std::string message;
    if (auto* err = std::get_if<std::string>(&parsed[i])) {
      message = *err;
    } else if (auto* tx = std::get_if<TxRecord>(&parsed[i])) {
      if (hashes.count(tx->tx_hash)) {
        message = "duplicate tx_hash " + tx->tx_hash;
      } else if (positions.count({tx->block_number, tx->tx_index})) {
        message = "duplicate (block_number, tx_index) for " + tx->tx_hash;
      } else {
        hashes.insert(tx->tx_hash);
        positions.insert({tx->block_number, tx->tx_index});
        txs.push_back(std::move(*tx));
      }
    }
    if (!message.empty()) {
      if (options.strict) {
        throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(i + 1) +
                                           ": " + message);
      }
      result.errors.push_back({i + 1, std::move(message)});
    }
  }
  result.graph = PropertyGraph::from_records(std::move(txs), options.graph);
  return result;
}

std::vector<std::string> distinct_addresses(const PropertyGraph& g) {
  std::set<std::string> out;
  for (const auto& tx : g.transactions()) {
    out.insert(tx.from_addr);
    out.insert(tx.to_addr);
    for (const auto& ev : tx.events) {
      for (const auto& p : ev.properties) {
        if (is_address(p.value)) out.insert(p.value);
      }
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace chainflow
