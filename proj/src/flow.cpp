#include "chainflow/flow.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "chainflow/error.hpp"

namespace chainflow {

std::size_t FlowGraph::step_count() const {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const auto& e) {
    return e.type == BEdgeType::NextStep;
  }));
}

std::vector<std::string> FlowGraph::steps() const {
  std::vector<const BehaviourEdge*> next;
  for (const auto& e : edges) {
    if (e.type == BEdgeType::NextStep) next.push_back(&e);
  }
  std::sort(next.begin(), next.end(),
            [](const BehaviourEdge* a, const BehaviourEdge* b) { return a->order < b->order; });
  std::vector<std::string> out;
  for (const auto* e : next) out.push_back(e->dst.key);
  return out;
}

FlowGraph extract_flow(const BehaviourGraph& bg, const std::string& address, bool extended) {
  if (!bg.has_user(address)) {
    throw Error(ErrorKind::UnknownAddress, "no user node for " + address);
  }
  FlowGraph f;
  f.address = address;
  f.extended = extended;
  std::vector<BehaviourEdge> used;
  for (auto i : bg.edges_of(address)) {
    const auto& e = bg.edges[i];
    if (e.type == BEdgeType::NextStep) f.edges.push_back(e);
    else if (e.type == BEdgeType::UsedBy && extended) used.push_back(e);
  }
  std::stable_sort(f.edges.begin(), f.edges.end(),
                   [](const auto& a, const auto& b) { return a.order < b.order; });

  std::set<std::string> seen;
  for (const auto& e : f.edges) {
    if (seen.insert(e.dst.key).second) f.actions.push_back(e.dst.key);
  }
  std::set<std::string> nfts;
  for (const auto& e : used) {
    if (seen.insert(e.dst.key).second) f.actions.push_back(e.dst.key);
    nfts.insert(e.src.key);
  }
  f.nfts.assign(nfts.begin(), nfts.end());
  f.edges.insert(f.edges.end(), used.begin(), used.end());
  return f;
}

std::vector<std::string> eligible_users(const BehaviourGraph& bg, std::size_t min_distinct) {
  std::vector<std::string> out;
  for (const auto& u : bg.users) {
    if (u == kBurnAddress) continue;
    std::set<std::string> distinct;
    for (auto i : bg.edges_of(u)) {
      const auto& e = bg.edges[i];
      if (e.type == BEdgeType::NextStep) distinct.insert(e.dst.key);
    }
    if (distinct.size() >= min_distinct) out.push_back(u);
  }
  return out;
}

std::string virtual_user_key(int cluster_id) { return "virtual:" + std::to_string(cluster_id); }

GeneralFlow general_flow(const std::vector<FlowGraph>& flows, int cluster_id) {
  if (flows.empty()) {
    throw Error(ErrorKind::EmptyCluster, "cluster " + std::to_string(cluster_id) + " is empty");
  }
  GeneralFlow gf;
  gf.cluster_id = cluster_id;
  gf.user_count = flows.size();

  std::vector<std::vector<std::string>> seqs;
  std::size_t total = 0;
  for (const auto& f : flows) {
    seqs.push_back(f.steps());
    total += seqs.back().size();
  }
  const std::size_t n = flows.size();
  const std::size_t length = (2 * total + n) / (2 * n);  // round half up

  for (std::size_t j = 0; j < length; ++j) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : seqs) {
      if (s.size() > j) ++counts[s[j]];
    }
    if (counts.empty()) break;
    // std::map iterates ascending, so the first maximum is the smallest uuid.
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    gf.steps.push_back(best->first);
  }

  std::set<std::string> seen;
  for (const auto& s : gf.steps) {
    if (seen.insert(s).second) gf.actions.push_back(s);
  }

  const NodeRef virtual_user{BNodeType::VirtualUser, virtual_user_key(cluster_id)};
  for (std::size_t j = 0; j < gf.steps.size(); ++j) {
    BehaviourEdge e;
    e.type = BEdgeType::VirtualStep;
    e.src = j == 0 ? virtual_user : NodeRef{BNodeType::Action, gf.steps[j - 1]};
    e.dst = {BNodeType::Action, gf.steps[j]};
    e.address = virtual_user.key;
    e.order = static_cast<std::uint32_t>(j);
    e.cluster = cluster_id;
    gf.edges.push_back(std::move(e));
  }

  // (nft, action) -> earliest usage timestamp
  std::map<std::pair<std::string, std::string>, std::int64_t> usage;
  for (const auto& f : flows) {
    for (const auto& e : f.edges) {
      if (e.type != BEdgeType::UsedBy || !seen.count(e.dst.key)) continue;
      auto key = std::make_pair(e.src.key, e.dst.key);
      auto it = usage.find(key);
      if (it == usage.end()) usage.emplace(key, e.timestamp);
      else it->second = std::min(it->second, e.timestamp);
    }
  }
  std::set<std::string> nfts;
  for (const auto& [key, ts] : usage) {
    BehaviourEdge e;
    e.type = BEdgeType::UsedBy;
    e.src = {BNodeType::Nft, key.first};
    e.dst = {BNodeType::Action, key.second};
    e.address = virtual_user.key;
    e.timestamp = ts;
    e.cluster = cluster_id;
    gf.edges.push_back(std::move(e));
    nfts.insert(key.first);
  }
  gf.nfts.assign(nfts.begin(), nfts.end());
  return gf;
}

}  // namespace chainflow
