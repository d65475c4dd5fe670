#include "chainflow/sequence.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "chainflow/error.hpp"

namespace chainflow {

namespace {

bool contains(const std::vector<std::string>& keys, const std::string& key) {
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

EventSeqEntry make_entry(const PropertyGraph& g, std::uint32_t pos, Origin origin,
                         const SequenceConfig& config) {
  const auto& tx = g.transactions()[pos];
  EventSeqEntry e;
  e.tx_hash = tx.tx_hash;
  e.timestamp = tx.timestamp;
  e.block_number = tx.block_number;
  e.tx_index = tx.tx_index;
  e.tx_pos = pos;
  e.origin = origin;
  for (const auto& ev : tx.events) e.event_names.push_back(ev.name);
  e.data = extract_entry_data(tx, config);
  return e;
}

void sort_entries(std::vector<EventSeqEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const EventSeqEntry& a, const EventSeqEntry& b) {
    return std::tie(a.timestamp, a.block_number, a.tx_index) <
           std::tie(b.timestamp, b.block_number, b.tx_index);
  });
}

bool has_token_property(const TxRecord& tx, const std::string& token_id,
                        const SequenceConfig& config) {
  for (const auto& ev : tx.events) {
    for (const auto& p : ev.properties) {
      if (p.value == token_id && contains(config.token_keys, p.key)) return true;
    }
  }
  return false;
}

}  // namespace

const char* to_string(Origin origin) {
  return origin == Origin::FromAddress ? "FromAddress" : "PropertyMatch";
}

const char* to_string(TokenKeying keying) {
  return keying == TokenKeying::ContractAndId ? "contract+id" : "tokenid-only";
}

TokenKeying parse_token_keying(std::string_view text) {
  if (text == "contract+id") return TokenKeying::ContractAndId;
  if (text == "tokenid-only") return TokenKeying::TokenIdOnly;
  throw Error(ErrorKind::Config, "unknown token keying '" + std::string(text) + "'");
}

TokenKey TokenKey::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return {"", std::string(text)};
  return {std::string(text.substr(0, colon)), std::string(text.substr(colon + 1))};
}

EntryData extract_entry_data(const TxRecord& tx, const SequenceConfig& config) {
  EntryData d;
  for (const auto& ev : tx.events) {
    for (const auto& p : ev.properties) {
      if (contains(config.token_keys, p.key)) d.token_ids.push_back(p.value);
      if (contains(config.asset_keys, p.key)) d.asset_ids.push_back(p.value);
      if (contains(config.ticket_keys, p.key)) d.ticket_ids.push_back(p.value);
      if (contains(config.pack_keys, p.key)) d.pack_ids.push_back(p.value);
      if (is_address(p.value)) {
        d.related_addresses.push_back(p.value);
      } else if (is_decimal(p.value) && !contains(config.token_keys, p.key) &&
                 !contains(config.asset_keys, p.key) && !contains(config.ticket_keys, p.key) &&
                 !contains(config.pack_keys, p.key)) {
        d.values.push_back(p.key + "=" + p.value);
      }
    }
  }
  sort_unique(d.token_ids);
  sort_unique(d.asset_ids);
  sort_unique(d.ticket_ids);
  sort_unique(d.pack_ids);
  sort_unique(d.related_addresses);
  sort_unique(d.values);
  return d;
}

AddressSequences sequences_for_address(const PropertyGraph& g, const std::string& addr,
                                       const SequenceConfig& config) {
  AddressSequences out;
  out.address = addr;
  const auto& txs = g.transactions();
  for (std::uint32_t i : g.transactions_from(addr)) {
    out.entries.push_back(make_entry(g, i, Origin::FromAddress, config));
  }
  for (std::uint32_t i : g.transactions_with_value(addr)) {
    if (txs[i].from_addr != addr) {
      out.entries.push_back(make_entry(g, i, Origin::PropertyMatch, config));
    }
  }
  sort_entries(out.entries);
  return out;
}

TokenSequences sequences_for_token(const PropertyGraph& g, const TokenKey& key,
                                   const SequenceConfig& config) {
  TokenSequences out;
  out.key = key;
  const auto& txs = g.transactions();
  std::set<std::string> involved;
  for (std::uint32_t i : g.transactions_with_value(key.token_id)) {
    const auto& tx = txs[i];
    if (config.keying == TokenKeying::ContractAndId && tx.to_addr != key.contract) continue;
    if (!has_token_property(tx, key.token_id, config)) continue;
    out.entries.push_back(make_entry(g, i, Origin::PropertyMatch, config));
    involved.insert(tx.from_addr);
  }
  sort_entries(out.entries);
  out.is_multiple = out.entries.size() > 1 || involved.size() > 1;
  return out;
}

std::vector<TokenKey> all_token_keys(const PropertyGraph& g, const SequenceConfig& config) {
  std::set<TokenKey> keys;
  for (const auto& tx : g.transactions()) {
    for (const auto& ev : tx.events) {
      for (const auto& p : ev.properties) {
        if (p.value.empty() || !contains(config.token_keys, p.key)) continue;
        if (config.keying == TokenKeying::ContractAndId) {
          keys.insert({tx.to_addr, p.value});
        } else {
          keys.insert({"", p.value});
        }
      }
    }
  }
  return {keys.begin(), keys.end()};
}

}  // namespace chainflow
