#include "chainflow/action.hpp"

#include <algorithm>
#include <thread>

#include "chainflow/error.hpp"

namespace chainflow {

namespace {

ActionType merge_type(ActionType a, ActionType b) { return a == b ? a : ActionType::Both; }

std::vector<std::string> reduce(const std::vector<std::string>& names, unsigned threshold) {
  return get_events(names, match_pattern(names, threshold), threshold);
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

ActionStep step_from_entry(const EventSeqEntry& e, const std::string& address) {
  ActionStep s;
  s.address = address;
  s.tx_hash = e.tx_hash;
  s.timestamp = e.timestamp;
  s.block_number = e.block_number;
  s.tx_index = e.tx_index;
  s.origin = e.origin;
  s.data = e.data;
  return s;
}

void chain(std::vector<ActionStep>& steps, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    steps[i].order = static_cast<std::uint32_t>(i - begin);
    steps[i].prev_uuid = i == begin ? std::nullopt : std::optional(steps[i - 1].uuid);
  }
}

}  // namespace

std::uint64_t asset_count(const EntryData& d) { return d.asset_ids.size(); }
std::uint64_t ticket_count(const EntryData& d) { return d.ticket_ids.size(); }
std::uint64_t pack_count(const EntryData& d) { return d.pack_ids.size(); }

const std::string& ActionCatalogue::find_or_create(const std::vector<std::string>& events,
                                                   ActionType type, bool retype) {
  if (events.empty()) throw Error(ErrorKind::EmptySequence, "action with no events");
  auto uuid = action_uuid(events);
  auto it = defs_.find(uuid);
  if (it != defs_.end()) {
    if (retype) it->second.type = merge_type(it->second.type, type);
    return it->first;
  }
  ActionDef def;
  def.uuid = uuid;
  def.type = type;
  def.events = events;
  return defs_.emplace(uuid, std::move(def)).first->first;
}

void ActionCatalogue::record(const ActionStep& step) {
  if (!contains(step.uuid)) {
    throw Error(ErrorKind::DanglingUuid, "step references unknown action " + step.uuid);
  }
  if (!seen_.emplace(step.uuid, step.tx_hash, step.address).second) return;
  auto& a = acc_[step.uuid];
  const auto assets = asset_count(step.data);
  const auto tickets = ticket_count(step.data);
  const auto packs = pack_count(step.data);
  if (a.total == 0) {
    a.assets_min = a.assets_max = assets;
    a.tickets_min = a.tickets_max = tickets;
    a.packs_min = a.packs_max = packs;
    a.ts_min = a.ts_max = step.timestamp;
  } else {
    a.assets_min = std::min(a.assets_min, assets);
    a.assets_max = std::max(a.assets_max, assets);
    a.tickets_min = std::min(a.tickets_min, tickets);
    a.tickets_max = std::max(a.tickets_max, tickets);
    a.packs_min = std::min(a.packs_min, packs);
    a.packs_max = std::max(a.packs_max, packs);
    a.ts_min = std::min(a.ts_min, step.timestamp);
    a.ts_max = std::max(a.ts_max, step.timestamp);
  }
  ++a.total;
  ++a.per_address[step.address];
  a.assets_sum += assets;
  a.tickets_sum += tickets;
  a.packs_sum += packs;
}

std::vector<ActionDef> ActionCatalogue::definitions() const {
  std::vector<ActionDef> out;
  out.reserve(defs_.size());
  for (const auto& [uuid, def] : defs_) {
    ActionDef d = def;
    auto it = acc_.find(uuid);
    if (it != acc_.end() && it->second.total > 0) {
      const auto& a = it->second;
      auto& s = d.stats;
      const double n = static_cast<double>(a.total);
      s.total_count = a.total;
      s.min_call = a.total;
      s.max_call = 0;
      for (const auto& [addr, c] : a.per_address) {
        s.min_call = std::min(s.min_call, c);
        s.max_call = std::max(s.max_call, c);
      }
      s.mean_call = n / static_cast<double>(a.per_address.size());
      s.min_assets = a.assets_min;
      s.max_assets = a.assets_max;
      s.mean_assets = static_cast<double>(a.assets_sum) / n;
      s.min_tickets = a.tickets_min;
      s.max_tickets = a.tickets_max;
      s.mean_tickets = static_cast<double>(a.tickets_sum) / n;
      s.min_packs = a.packs_min;
      s.max_packs = a.packs_max;
      s.mean_packs = static_cast<double>(a.packs_sum) / n;
      s.min_timestamp = a.ts_min;
      s.max_timestamp = a.ts_max;
    }
    out.push_back(std::move(d));
  }
  return out;
}

ActionStats stats_from_steps(const std::string& uuid, const std::vector<ActionStep>& steps) {
  ActionStats out;
  std::set<std::tuple<std::string, std::string>> seen;
  std::map<std::string, std::uint64_t> per_address;
  std::vector<const ActionStep*> picked;
  for (const auto& s : steps) {
    if (s.uuid != uuid || !seen.emplace(s.tx_hash, s.address).second) continue;
    picked.push_back(&s);
    ++per_address[s.address];
  }
  if (picked.empty()) return out;
  out.total_count = picked.size();
  out.min_call = out.total_count;
  for (const auto& [addr, c] : per_address) {
    out.min_call = std::min(out.min_call, c);
    out.max_call = std::max(out.max_call, c);
  }
  out.mean_call = static_cast<double>(out.total_count) / static_cast<double>(per_address.size());
  std::uint64_t sa = 0, st = 0, sp = 0;
  bool first = true;
  for (const auto* s : picked) {
    const auto a = asset_count(s->data), t = ticket_count(s->data), p = pack_count(s->data);
    if (first) {
      out.min_assets = out.max_assets = a;
      out.min_tickets = out.max_tickets = t;
      out.min_packs = out.max_packs = p;
      out.min_timestamp = out.max_timestamp = s->timestamp;
      first = false;
    }
    out.min_assets = std::min(out.min_assets, a);
    out.max_assets = std::max(out.max_assets, a);
    out.min_tickets = std::min(out.min_tickets, t);
    out.max_tickets = std::max(out.max_tickets, t);
    out.min_packs = std::min(out.min_packs, p);
    out.max_packs = std::max(out.max_packs, p);
    out.min_timestamp = std::min(out.min_timestamp, s->timestamp);
    out.max_timestamp = std::max(out.max_timestamp, s->timestamp);
    sa += a;
    st += t;
    sp += p;
  }
  const double n = static_cast<double>(out.total_count);
  out.mean_assets = static_cast<double>(sa) / n;
  out.mean_tickets = static_cast<double>(st) / n;
  out.mean_packs = static_cast<double>(sp) / n;
  return out;
}

std::vector<ActionStep> form_actions(const PropertyGraph& g, ActionType kind,
                                     const std::vector<std::string>& addresses,
                                     const ActionConfig& config, ActionCatalogue& catalogue) {
  if (kind == ActionType::Both) {
    throw Error(ErrorKind::Config, "form_actions takes Primary or Secondary");
  }
  const Origin wanted = kind == ActionType::Primary ? Origin::FromAddress : Origin::PropertyMatch;

  std::vector<AddressSequences> seqs(addresses.size());
  parallel_for(addresses.size(), config.threads, [&](std::size_t i) {
    seqs[i] = sequences_for_address(g, addresses[i], config.sequence);
  });

  std::vector<ActionStep> steps;
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    const std::size_t begin = steps.size();
    for (const auto& e : seqs[i].entries) {
      if (e.origin != wanted || e.event_names.empty()) continue;
      auto step = step_from_entry(e, addresses[i]);
      step.uuid = catalogue.find_or_create(reduce(e.event_names, config.repeat_threshold), kind);
      steps.push_back(std::move(step));
    }
    chain(steps, begin, steps.size());
    for (std::size_t j = begin; j < steps.size(); ++j) catalogue.record(steps[j]);
  }
  return steps;
}

ActionResult form_actions(const PropertyGraph& g, ActionType kind,
                          const std::vector<std::string>& addresses,
                          const ActionConfig& config) {
  ActionCatalogue catalogue;
  ActionResult out;
  out.steps = form_actions(g, kind, addresses, config, catalogue);
  out.catalogue = catalogue.definitions();
  return out;
}

std::vector<ActionStep> form_token_actions(const PropertyGraph& g,
                                           const std::vector<TokenKey>& tokens,
                                           const ActionConfig& config,
                                           ActionCatalogue& catalogue) {
  std::vector<TokenSequences> seqs(tokens.size());
  parallel_for(tokens.size(), config.threads, [&](std::size_t i) {
    seqs[i] = sequences_for_token(g, tokens[i], config.sequence);
  });

  std::vector<ActionStep> steps;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t begin = steps.size();
    for (const auto& e : seqs[i].entries) {
      if (e.event_names.empty()) continue;
      const auto& tx = g.transactions()[e.tx_pos];
      auto step = step_from_entry(e, tx.from_addr);
      step.token = tokens[i];
      // Only the related addresses are kept for NFT steps.
      step.data = EntryData{};
      step.data.related_addresses = e.data.related_addresses;
      step.uuid = catalogue.find_or_create(reduce(e.event_names, config.repeat_threshold),
                                           ActionType::Secondary, false);
      steps.push_back(std::move(step));
    }
    chain(steps, begin, steps.size());
  }
  return steps;
}

std::vector<ActionStep> merge_address_steps(std::vector<ActionStep> primary,
                                            std::vector<ActionStep> secondary) {
  std::vector<ActionStep> all = std::move(primary);
  all.insert(all.end(), std::make_move_iterator(secondary.begin()),
             std::make_move_iterator(secondary.end()));
  std::stable_sort(all.begin(), all.end(), [](const ActionStep& a, const ActionStep& b) {
    return std::tie(a.address, a.timestamp, a.block_number, a.tx_index, a.origin) <
           std::tie(b.address, b.timestamp, b.block_number, b.tx_index, b.origin);
  });
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= all.size(); ++i) {
    if (i == all.size() || all[i].address != all[begin].address) {
      chain(all, begin, i);
      begin = i;
    }
  }
  return all;
}

BehaviourGraph form_behaviour(const PropertyGraph& g, const ActionConfig& config) {
  const auto addresses = distinct_addresses(g);
  ActionCatalogue catalogue;
  auto primary = form_actions(g, ActionType::Primary, addresses, config, catalogue);
  auto secondary = form_actions(g, ActionType::Secondary, addresses, config, catalogue);
  auto steps = merge_address_steps(std::move(primary), std::move(secondary));
  auto token_steps =
      form_token_actions(g, all_token_keys(g, config.sequence), config, catalogue);
  for (const auto& s : token_steps) catalogue.record(s);
  return build_behaviour_graph(catalogue.definitions(), steps, token_steps);
}

}  // namespace chainflow
