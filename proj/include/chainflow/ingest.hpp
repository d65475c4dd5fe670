#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chainflow {

inline constexpr std::string_view kGraphFormat = "chainflow-graph/1";
inline constexpr std::string_view kBurnAddress =
    "0x0000000000000000000000000000000000000000";

struct Property {
  std::string key;
  std::string value;

  friend bool operator==(const Property&, const Property&) = default;
};

struct EventRecord {
  std::string tx_hash;
  std::uint64_t log_index = 0;
  std::string name;
  std::vector<Property> properties;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct TxRecord {
  std::string tx_hash;
  std::uint64_t block_number = 0;
  std::uint64_t tx_index = 0;
  std::string from_addr;
  std::string to_addr;
  std::string value;  // wei, decimal string
  std::int64_t timestamp = 0;
  std::vector<EventRecord> events;  // ascending log_index

  friend bool operator==(const TxRecord&, const TxRecord&) = default;
};

// 0x-prefixed, 40 hex digits.
bool is_address(std::string_view s);
// 0x-prefixed, 64 hex digits.
bool is_tx_hash(std::string_view s);
bool is_decimal(std::string_view s);
// Lowercases 0x-prefixed hex strings, leaves anything else untouched.
std::string canonical_value(std::string_view raw);

enum class NodeKind { Transaction, Event, EventProperty, UniquePropertyPair };
enum class EdgeKind { Emits, Has, SameValue };

const char* to_string(NodeKind kind);
const char* to_string(EdgeKind kind);

using NodeId = std::uint32_t;

struct GraphNode {
  NodeKind kind;
  std::uint32_t tx = 0;     // owning transaction (tx, event, property nodes)
  std::uint32_t event = 0;  // event index inside the tx (event, property nodes)
  std::uint32_t prop = 0;   // property index inside the event (property nodes)
  std::uint32_t value = 0;  // shared-value slot (UniquePropertyPair nodes)

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  EdgeKind kind;
  NodeId src;
  NodeId dst;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct GraphOptions {
  // SAME_VALUE links are stored as edges only while their total count stays
  // at or below this bound; above it they are answered from the value index.
  std::size_t same_value_threshold = 2'000'000;
};

/// Transactions, events and event properties in canonical order, plus the
/// derived node/edge tables. Immutable once built.
class PropertyGraph {
 public:
  PropertyGraph() = default;

  /// Canonicalizes record order: transactions by (block, tx_index, hash),
  /// events by log_index.
  static PropertyGraph from_records(std::vector<TxRecord> txs,
                                    GraphOptions options = {});

  const std::vector<TxRecord>& transactions() const { return txs_; }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const GraphOptions& options() const { return options_; }

  NodeId tx_node(std::size_t tx) const { return tx_node_[tx]; }
  NodeId event_node(std::size_t tx, std::size_t event) const;
  NodeId property_node(std::size_t tx, std::size_t event, std::size_t prop) const;

  bool same_value_materialized() const { return same_value_materialized_; }
  std::size_t same_value_link_count() const { return same_value_links_; }
  /// Property nodes on other events whose value equals this property's value.
  std::vector<NodeId> same_value_peers(NodeId property) const;

  /// Values shared by properties of at least two distinct events, ascending.
  const std::vector<std::string>& shared_values() const { return shared_values_; }

  /// Indices of transactions having at least one event property with this
  /// canonical value, ascending.
  const std::vector<std::uint32_t>& transactions_with_value(std::string_view value) const;

  /// Indices of transactions submitted by `addr`, ascending.
  const std::vector<std::uint32_t>& transactions_from(std::string_view addr) const;

  const TxRecord* find_tx(std::string_view hash) const;

  friend bool operator==(const PropertyGraph& a, const PropertyGraph& b) {
    return a.txs_ == b.txs_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  struct PropRef {
    std::uint32_t tx, event, prop;
  };

  void build();

  GraphOptions options_;
  std::vector<TxRecord> txs_;
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<NodeId> tx_node_;
  std::vector<std::vector<NodeId>> event_node_;  // per tx
  std::vector<std::string> shared_values_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> value_txs_;
  std::unordered_map<std::string, std::vector<NodeId>> value_props_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> from_txs_;
  std::unordered_map<std::string, std::size_t> tx_by_hash_;
  std::size_t same_value_links_ = 0;
  bool same_value_materialized_ = true;
};

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  PropertyGraph graph;
  std::vector<LineError> errors;
};

struct LoadOptions {
  bool strict = false;  // first SchemaError aborts the load
  unsigned threads = 1;
  GraphOptions graph;
};

/// Parses one JSON object per line. Throws Error{Io} when the file cannot be
/// read; malformed lines are skipped and reported (or thrown in strict mode).
LoadResult load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});

/// Parses a single dataset line into a transaction. Throws Error{Schema}.
TxRecord parse_tx_line(std::string_view line);

/// Serializes a transaction in the dataset line schema (fixed key order).
std::string format_tx_line(const TxRecord& tx);

/// All from/to addresses plus every property value that is an address,
/// ascending and deduplicated.
std::vector<std::string> distinct_addresses(const PropertyGraph& g);

void save_graph(const PropertyGraph& g, const std::filesystem::path& dir);
/// Throws Error{FormatVersion} when the header is missing or mismatched.
PropertyGraph load_graph(const std::filesystem::path& dir);

}  // namespace chainflow
