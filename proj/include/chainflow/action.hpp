#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chainflow/ingest.hpp"
#include "chainflow/sequence.hpp"

namespace chainflow {

enum class PatternKind { UniqueEvents, AllRepeatK, AllRepeatKPlusBulk, OneRepeatsRestOnce, Mixed };
enum class ActionType { Primary, Secondary, Both };

const char* to_string(PatternKind kind);
const char* to_string(ActionType type);
ActionType parse_action_type(std::string_view text);

inline constexpr unsigned kDefaultRepeatThreshold = 3;

/// Throws Error{EmptySequence} on an empty list.
PatternKind match_pattern(const std::vector<std::string>& names,
                          unsigned repeat_threshold = kDefaultRepeatThreshold);

/// Reduces an event list to its canonical action events. Throws
/// Error{PatternMismatch} when `pattern` is not what match_pattern reports.
std::vector<std::string> get_events(const std::vector<std::string>& events, PatternKind pattern,
                                    unsigned repeat_threshold = kDefaultRepeatThreshold);

/// Content-derived id (SHA-256 of the event list) in 8-4-4-4-12 form.
std::string action_uuid(const std::vector<std::string>& events);

struct ActionStats {
  std::uint64_t total_count = 0;
  std::uint64_t min_call = 0, max_call = 0;
  double mean_call = 0;
  std::uint64_t min_assets = 0, max_assets = 0;
  double mean_assets = 0;
  std::uint64_t min_tickets = 0, max_tickets = 0;
  double mean_tickets = 0;
  std::uint64_t min_packs = 0, max_packs = 0;
  double mean_packs = 0;
  std::int64_t min_timestamp = 0, max_timestamp = 0;

  friend bool operator==(const ActionStats&, const ActionStats&) = default;
};

inline constexpr std::size_t kActionFeatureCount = 15;

struct ActionDef {
  std::string uuid;
  ActionType type = ActionType::Primary;
  std::vector<std::string> events;
  ActionStats stats;

  friend bool operator==(const ActionDef&, const ActionDef&) = default;
};

struct ActionStep {
  std::uint32_t order = 0;
  std::string uuid;
  std::optional<std::string> prev_uuid;
  std::string address;
  std::optional<TokenKey> token;
  std::string tx_hash;
  std::int64_t timestamp = 0;
  std::uint64_t block_number = 0;
  std::uint64_t tx_index = 0;
  Origin origin = Origin::FromAddress;
  EntryData data;

  friend bool operator==(const ActionStep&, const ActionStep&) = default;
};

struct ActionConfig {
  SequenceConfig sequence;
  unsigned repeat_threshold = kDefaultRepeatThreshold;
  unsigned threads = 1;  // sequence extraction only; catalogue updates stay ordered
};

/// Find-or-create store of action definitions with incrementally maintained
/// statistics. A (uuid, tx, address) performance is counted once even when it
/// arrives through both an address and a token sequence.
class ActionCatalogue {
 public:
  /// With `retype` false an existing action keeps its type (token steps).
  const std::string& find_or_create(const std::vector<std::string>& events, ActionType type,
                                    bool retype = true);
  void record(const ActionStep& step);

  bool contains(const std::string& uuid) const { return defs_.count(uuid) != 0; }
  std::size_t size() const { return defs_.size(); }
  /// Definitions with finalized stats, ascending uuid.
  std::vector<ActionDef> definitions() const;

 private:
  struct Accumulator {
    std::uint64_t total = 0;
    std::map<std::string, std::uint64_t> per_address;
    std::uint64_t assets_min = 0, assets_max = 0, assets_sum = 0;
    std::uint64_t tickets_min = 0, tickets_max = 0, tickets_sum = 0;
    std::uint64_t packs_min = 0, packs_max = 0, packs_sum = 0;
    std::int64_t ts_min = 0, ts_max = 0;
  };

  std::map<std::string, ActionDef> defs_;
  std::map<std::string, Accumulator> acc_;
  std::set<std::tuple<std::string, std::string, std::string>> seen_;
};

/// Recomputes stats for one action from scratch over a step list, with the
/// same dedup rule as ActionCatalogue::record.
ActionStats stats_from_steps(const std::string& uuid, const std::vector<ActionStep>& steps);

/// Per-step asset/ticket/pack counts (distinct ids in the step payload).
std::uint64_t asset_count(const EntryData& d);
std::uint64_t ticket_count(const EntryData& d);
std::uint64_t pack_count(const EntryData& d);

struct ActionResult {
  std::vector<ActionDef> catalogue;
  std::vector<ActionStep> steps;
};

/// Runs action formation over the Primary (FromAddress) or Secondary
/// (PropertyMatch) sequences of each address, in the given address order.
ActionResult form_actions(const PropertyGraph& g, ActionType kind,
                          const std::vector<std::string>& addresses,
                          const ActionConfig& config = {});

/// As above, into a shared catalogue. Steps are numbered per address.
std::vector<ActionStep> form_actions(const PropertyGraph& g, ActionType kind,
                                     const std::vector<std::string>& addresses,
                                     const ActionConfig& config, ActionCatalogue& catalogue);

/// NFT sequences: one step per token transaction, ordered per token, with the
/// submitting address as the step address.
std::vector<ActionStep> form_token_actions(const PropertyGraph& g,
                                           const std::vector<TokenKey>& tokens,
                                           const ActionConfig& config,
                                           ActionCatalogue& catalogue);

/// Interleaves primary and secondary steps of each address into one timeline
/// by (timestamp, block, tx_index, origin) and renumbers order/prev_uuid.
std::vector<ActionStep> merge_address_steps(std::vector<ActionStep> primary,
                                            std::vector<ActionStep> secondary);

enum class BNodeType { User, Action, Nft, VirtualUser };
enum class BEdgeType { NextStep, UsedBy, VirtualStep };

const char* to_string(BNodeType type);
const char* to_string(BEdgeType type);

struct NodeRef {
  BNodeType type = BNodeType::Action;
  std::string key;  // address, uuid, token key string, or cluster tag

  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct NftNode {
  TokenKey key;
  bool is_multiple = false;

  friend bool operator==(const NftNode&, const NftNode&) = default;
};

struct BehaviourEdge {
  BEdgeType type = BEdgeType::NextStep;
  NodeRef src;
  NodeRef dst;
  std::string address;
  std::uint32_t order = 0;
  std::int64_t timestamp = 0;
  std::string tx_hash;
  std::uint64_t n_assets = 0;
  std::uint64_t n_tickets = 0;
  std::uint64_t n_packs = 0;
  std::optional<int> cluster;  // VIRTUAL_STEP only

  friend bool operator==(const BehaviourEdge&, const BehaviourEdge&) = default;
};

inline constexpr std::string_view kBehaviourFormat = "chainflow-bgraph/1";

class BehaviourGraph {
 public:
  std::vector<std::string> users;   // ascending
  std::vector<ActionDef> actions;   // ascending uuid
  std::vector<NftNode> nfts;        // ascending key
  std::vector<BehaviourEdge> edges; // NEXT_STEP by (address, order), then USED_BY by (nft, order)

  /// Rebuilds the lookup tables; call after mutating the public vectors.
  void reindex();

  const ActionDef* find_action(const std::string& uuid) const;
  const NftNode* find_nft(const std::string& key) const;
  bool has_user(const std::string& address) const;
  /// Edge indices whose address equals `address`, in edge order.
  const std::vector<std::size_t>& edges_of(const std::string& address) const;
  /// Earliest step timestamp across all edges (0 when empty).
  std::int64_t min_timestamp() const { return min_ts_; }

  friend bool operator==(const BehaviourGraph& a, const BehaviourGraph& b) {
    return a.users == b.users && a.actions == b.actions && a.nfts == b.nfts &&
           a.edges == b.edges;
  }

 private:
  std::unordered_map<std::string, std::size_t> action_idx_;
  std::unordered_map<std::string, std::size_t> nft_idx_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_address_;
  std::set<std::string> user_set_;
  std::int64_t min_ts_ = 0;
};

/// Throws Error{DanglingUuid} when a step names an action missing from the
/// catalogue. NFT multiplicity is derived from the token steps.
BehaviourGraph build_behaviour_graph(const std::vector<ActionDef>& catalogue,
                                     const std::vector<ActionStep>& steps,
                                     const std::vector<ActionStep>& token_steps);

/// Whole-graph action formation: every distinct address, primary and
/// secondary sequences merged, plus all token sequences.
BehaviourGraph form_behaviour(const PropertyGraph& g, const ActionConfig& config = {});

void save_behaviour(const BehaviourGraph& bg, const std::filesystem::path& dir);
BehaviourGraph load_behaviour(const std::filesystem::path& dir);

}  // namespace chainflow
