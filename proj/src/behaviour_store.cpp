#include <algorithm>
#include <limits>
#include <map>

#include "chainflow/action.hpp"
#include "chainflow/error.hpp"
#include "store_util.hpp"

namespace chainflow {

using detail::field;
using detail::ordered_json;

const char* to_string(BNodeType type) {
  switch (type) {
    case BNodeType::User: return "User";
    case BNodeType::Action: return "Action";
    case BNodeType::Nft: return "NFT";
    case BNodeType::VirtualUser: return "VirtualUser";
  }
  return "?";
}

const char* to_string(BEdgeType type) {
  switch (type) {
    case BEdgeType::NextStep: return "NEXT_STEP";
    case BEdgeType::UsedBy: return "USED_BY";
    case BEdgeType::VirtualStep: return "VIRTUAL_STEP";
  }
  return "?";
}

namespace {

BNodeType parse_node_type(const std::string& s) {
  for (auto t : {BNodeType::User, BNodeType::Action, BNodeType::Nft, BNodeType::VirtualUser}) {
    if (s == to_string(t)) return t;
  }
  throw Error(ErrorKind::Schema, "unknown node type '" + s + "'");
}

BEdgeType parse_edge_type(const std::string& s) {
  for (auto t : {BEdgeType::NextStep, BEdgeType::UsedBy, BEdgeType::VirtualStep}) {
    if (s == to_string(t)) return t;
  }
  throw Error(ErrorKind::Schema, "unknown edge type '" + s + "'");
}

}  // namespace

void BehaviourGraph::reindex() {
  action_idx_.clear();
  nft_idx_.clear();
  by_address_.clear();
  user_set_ = std::set<std::string>(users.begin(), users.end());
  for (std::size_t i = 0; i < actions.size(); ++i) action_idx_.emplace(actions[i].uuid, i);
  for (std::size_t i = 0; i < nfts.size(); ++i) nft_idx_.emplace(nfts[i].key.str(), i);
  min_ts_ = 0;
  bool first = true;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    by_address_[edges[i].address].push_back(i);
    if (first || edges[i].timestamp < min_ts_) min_ts_ = edges[i].timestamp;
    first = false;
  }
}

const ActionDef* BehaviourGraph::find_action(const std::string& uuid) const {
  auto it = action_idx_.find(uuid);
  return it == action_idx_.end() ? nullptr : &actions[it->second];
}

const NftNode* BehaviourGraph::find_nft(const std::string& key) const {
  auto it = nft_idx_.find(key);
  return it == nft_idx_.end() ? nullptr : &nfts[it->second];
}

bool BehaviourGraph::has_user(const std::string& address) const {
  return user_set_.count(address) != 0;
}

const std::vector<std::size_t>& BehaviourGraph::edges_of(const std::string& address) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = by_address_.find(address);
  return it == by_address_.end() ? kEmpty : it->second;
}

BehaviourGraph build_behaviour_graph(const std::vector<ActionDef>& catalogue,
                                     const std::vector<ActionStep>& steps,
                                     const std::vector<ActionStep>& token_steps) {
  BehaviourGraph bg;
  bg.actions = catalogue;
  std::sort(bg.actions.begin(), bg.actions.end(),
            [](const ActionDef& a, const ActionDef& b) { return a.uuid < b.uuid; });
  std::set<std::string> known;
  for (const auto& a : bg.actions) known.insert(a.uuid);
  auto check = [&](const ActionStep& s) {
    if (!known.count(s.uuid)) {
      throw Error(ErrorKind::DanglingUuid, "step " + s.tx_hash + " references unknown action " +
                                               s.uuid);
    }
  };

  std::vector<const ActionStep*> ordered;
  std::set<std::string> users;
  for (const auto& s : steps) {
    check(s);
    ordered.push_back(&s);
    users.insert(s.address);
  }
  bg.users.assign(users.begin(), users.end());
  std::sort(ordered.begin(), ordered.end(), [](const ActionStep* a, const ActionStep* b) {
    return std::tie(a->address, a->order) < std::tie(b->address, b->order);
  });
  for (const auto* s : ordered) {
    BehaviourEdge e;
    e.type = BEdgeType::NextStep;
    if (s->order == 0 || !s->prev_uuid) {
      e.src = {BNodeType::User, s->address};
    } else {
      e.src = {BNodeType::Action, *s->prev_uuid};
    }
    e.dst = {BNodeType::Action, s->uuid};
    e.address = s->address;
    e.order = s->order;
    e.timestamp = s->timestamp;
    e.tx_hash = s->tx_hash;
    e.n_assets = asset_count(s->data);
    e.n_tickets = ticket_count(s->data);
    e.n_packs = pack_count(s->data);
    bg.edges.push_back(std::move(e));
  }

  std::map<TokenKey, std::pair<std::size_t, std::set<std::string>>> usage;
  std::vector<const ActionStep*> token_ordered;
  for (const auto& s : token_steps) {
    check(s);
    if (!s.token) throw Error(ErrorKind::Internal, "token step without token");
    auto& u = usage[*s.token];
    ++u.first;
    u.second.insert(s.address);
    token_ordered.push_back(&s);
  }
  for (const auto& [key, u] : usage) {
    bg.nfts.push_back({key, u.first > 1 || u.second.size() > 1});
  }
  std::sort(token_ordered.begin(), token_ordered.end(),
            [](const ActionStep* a, const ActionStep* b) {
              return std::tie(*a->token, a->order) < std::tie(*b->token, b->order);
            });
  for (const auto* s : token_ordered) {
    BehaviourEdge e;
    e.type = BEdgeType::UsedBy;
    e.src = {BNodeType::Nft, s->token->str()};
    e.dst = {BNodeType::Action, s->uuid};
    e.address = s->address;
    e.order = s->order;
    e.timestamp = s->timestamp;
    e.tx_hash = s->tx_hash;
    bg.edges.push_back(std::move(e));
  }
  bg.reindex();
  return bg;
}

void save_behaviour(const BehaviourGraph& bg, const std::filesystem::path& dir) {
  detail::prepare_dir(dir);
  std::vector<ordered_json> nodes;
  for (const auto& u : bg.users) {
    ordered_json row;
    row["kind"] = "User";
    row["address"] = u;
    nodes.push_back(std::move(row));
  }
  for (const auto& a : bg.actions) {
    ordered_json row;
    const auto& s = a.stats;
    row["kind"] = "Action";
    row["uuid"] = a.uuid;
    row["type"] = to_string(a.type);
    row["events"] = a.events;
    row["total_count"] = s.total_count;
    row["min_call"] = s.min_call;
    row["max_call"] = s.max_call;
    row["mean_call"] = s.mean_call;
    row["min_assets"] = s.min_assets;
    row["max_assets"] = s.max_assets;
    row["mean_assets"] = s.mean_assets;
    row["min_tickets"] = s.min_tickets;
    row["max_tickets"] = s.max_tickets;
    row["mean_tickets"] = s.mean_tickets;
    row["min_packs"] = s.min_packs;
    row["max_packs"] = s.max_packs;
    row["mean_packs"] = s.mean_packs;
    row["min_timestamp"] = s.min_timestamp;
    row["max_timestamp"] = s.max_timestamp;
    nodes.push_back(std::move(row));
  }
  for (const auto& n : bg.nfts) {
    ordered_json row;
    row["kind"] = "NFT";
    row["contract"] = n.key.contract;
    row["token_id"] = n.key.token_id;
    row["is_multiple"] = n.is_multiple;
    nodes.push_back(std::move(row));
  }

  std::vector<ordered_json> edges;
  for (const auto& e : bg.edges) {
    ordered_json row;
    row["type"] = to_string(e.type);
    row["src_type"] = to_string(e.src.type);
    row["src"] = e.src.key;
    row["dst_type"] = to_string(e.dst.type);
    row["dst"] = e.dst.key;
    row["address"] = e.address;
    row["order"] = e.order;
    row["timestamp"] = e.timestamp;
    row["tx_hash"] = e.tx_hash;
    row["n_assets"] = e.n_assets;
    row["n_tickets"] = e.n_tickets;
    row["n_packs"] = e.n_packs;
    if (e.cluster) row["cluster"] = *e.cluster;
    edges.push_back(std::move(row));
  }

  ordered_json header;
  header["format"] = kBehaviourFormat;
  header["users"] = bg.users.size();
  header["actions"] = bg.actions.size();
  header["nfts"] = bg.nfts.size();
  header["edges"] = bg.edges.size();
  detail::write_text(dir / "header.json", header.dump() + "\n");
  detail::write_jsonl(dir / "nodes.jsonl", nodes);
  detail::write_jsonl(dir / "edges.jsonl", edges);
}

BehaviourGraph load_behaviour(const std::filesystem::path& dir) {
  const auto header = detail::read_header(dir, kBehaviourFormat);
  BehaviourGraph bg;
  for (const auto& row : detail::read_jsonl(dir / "nodes.jsonl")) {
    const auto kind = field<std::string>(row, "kind");
    if (kind == "User") {
      bg.users.push_back(field<std::string>(row, "address"));
    } else if (kind == "Action") {
      ActionDef a;
      auto& s = a.stats;
      a.uuid = field<std::string>(row, "uuid");
      a.type = parse_action_type(field<std::string>(row, "type"));
      a.events = field<std::vector<std::string>>(row, "events");
      s.total_count = field<std::uint64_t>(row, "total_count");
      s.min_call = field<std::uint64_t>(row, "min_call");
      s.max_call = field<std::uint64_t>(row, "max_call");
      s.mean_call = field<double>(row, "mean_call");
      s.min_assets = field<std::uint64_t>(row, "min_assets");
      s.max_assets = field<std::uint64_t>(row, "max_assets");
      s.mean_assets = field<double>(row, "mean_assets");
      s.min_tickets = field<std::uint64_t>(row, "min_tickets");
      s.max_tickets = field<std::uint64_t>(row, "max_tickets");
      s.mean_tickets = field<double>(row, "mean_tickets");
      s.min_packs = field<std::uint64_t>(row, "min_packs");
      s.max_packs = field<std::uint64_t>(row, "max_packs");
      s.mean_packs = field<double>(row, "mean_packs");
      s.min_timestamp = field<std::int64_t>(row, "min_timestamp");
      s.max_timestamp = field<std::int64_t>(row, "max_timestamp");
      bg.actions.push_back(std::move(a));
    } else if (kind == "NFT") {
      bg.nfts.push_back({{field<std::string>(row, "contract"), field<std::string>(row, "token_id")},
                         field<bool>(row, "is_multiple")});
    } else {
      throw Error(ErrorKind::Schema, "unknown node kind '" + kind + "'");
    }
  }
  for (const auto& row : detail::read_jsonl(dir / "edges.jsonl")) {
    BehaviourEdge e;
    e.type = parse_edge_type(field<std::string>(row, "type"));
    e.src = {parse_node_type(field<std::string>(row, "src_type")), field<std::string>(row, "src")};
    e.dst = {parse_node_type(field<std::string>(row, "dst_type")), field<std::string>(row, "dst")};
    e.address = field<std::string>(row, "address");
    e.order = field<std::uint32_t>(row, "order");
    e.timestamp = field<std::int64_t>(row, "timestamp");
    e.tx_hash = field<std::string>(row, "tx_hash");
    e.n_assets = field<std::uint64_t>(row, "n_assets");
    e.n_tickets = field<std::uint64_t>(row, "n_tickets");
    e.n_packs = field<std::uint64_t>(row, "n_packs");
    if (row.contains("cluster")) e.cluster = field<int>(row, "cluster");
    bg.edges.push_back(std::move(e));
  }
  if (bg.users.size() != field<std::size_t>(header, "users") ||
      bg.actions.size() != field<std::size_t>(header, "actions") ||
      bg.nfts.size() != field<std::size_t>(header, "nfts") ||
      bg.edges.size() != field<std::size_t>(header, "edges")) {
    throw Error(ErrorKind::Schema, "behaviour graph in " + dir.string() +
                                       " does not match its header counts");
  }
  bg.reindex();
  for (const auto& e : bg.edges) {
    for (const auto* ref : {&e.src, &e.dst}) {
      if (ref->type == BNodeType::Action && !bg.find_action(ref->key)) {
        throw Error(ErrorKind::DanglingUuid, "edge references unknown action " + ref->key);
      }
    }
  }
  return bg;
}

}  // namespace chainflow
