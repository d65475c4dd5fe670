#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "chainflow/action.hpp"

namespace chainflow {

inline constexpr std::size_t kMinDistinctActions = 4;

/// One user's slice of the behaviour graph.
struct FlowGraph {
  std::string address;
  std::vector<std::string> actions;  // distinct uuids, first appearance in step order
  std::vector<std::string> nfts;     // distinct token key strings, ascending
  std::vector<BehaviourEdge> edges;  // NEXT_STEP by order, then USED_BY (extended only)
  bool extended = false;

  std::size_t step_count() const;
  /// Action uuid per NEXT_STEP order.
  std::vector<std::string> steps() const;
};

/// Throws Error{UnknownAddress}.
FlowGraph extract_flow(const BehaviourGraph& bg, const std::string& address, bool extended);

/// Users with at least `min_distinct` distinct actions, burn address excluded.
std::vector<std::string> eligible_users(const BehaviourGraph& bg,
                                        std::size_t min_distinct = kMinDistinctActions);

struct GeneralFlow {
  int cluster_id = 0;
  std::size_t user_count = 0;
  std::vector<std::string> steps;    // mode action per position
  std::vector<std::string> actions;  // distinct uuids of `steps`, first appearance
  std::vector<std::string> nfts;     // ascending
  // VIRTUAL_STEP chain followed by one USED_BY edge per (nft, action) pair.
  std::vector<BehaviourEdge> edges;
};

std::string virtual_user_key(int cluster_id);

/// Throws Error{EmptyCluster} when `flows` is empty.
GeneralFlow general_flow(const std::vector<FlowGraph>& flows, int cluster_id);

}  // namespace chainflow
