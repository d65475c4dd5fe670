#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "chainflow/ingest.hpp"

namespace chainflow {

enum class Origin { FromAddress, PropertyMatch };
enum class TokenKeying { ContractAndId, TokenIdOnly };

const char* to_string(Origin origin);
const char* to_string(TokenKeying keying);
TokenKeying parse_token_keying(std::string_view text);

struct SequenceConfig {
  std::vector<std::string> token_keys{"tokenId", "_tokenId", "id"};
  std::vector<std::string> asset_keys{"assetId"};
  std::vector<std::string> ticket_keys{"ticketId"};
  std::vector<std::string> pack_keys{"packId"};
  TokenKeying keying = TokenKeying::ContractAndId;
};

/// An NFT identity. `contract` stays empty under TokenIdOnly keying.
struct TokenKey {
  std::string contract;
  std::string token_id;

  std::string str() const { return contract.empty() ? token_id : contract + ":" + token_id; }
  static TokenKey parse(std::string_view text);

  friend auto operator<=>(const TokenKey&, const TokenKey&) = default;
  friend bool operator==(const TokenKey&, const TokenKey&) = default;
};

/// Payload pulled out of a transaction's events. Id lists are sorted and
/// deduplicated; `values` keeps the remaining decimal properties as key=value.
struct EntryData {
  std::vector<std::string> token_ids;
  std::vector<std::string> asset_ids;
  std::vector<std::string> ticket_ids;
  std::vector<std::string> pack_ids;
  std::vector<std::string> related_addresses;
  std::vector<std::string> values;

  friend bool operator==(const EntryData&, const EntryData&) = default;
};

struct EventSeqEntry {
  std::string tx_hash;
  std::int64_t timestamp = 0;
  std::uint64_t block_number = 0;
  std::uint64_t tx_index = 0;
  std::uint32_t tx_pos = 0;               // index into PropertyGraph::transactions()
  std::vector<std::string> event_names;   // every event of the tx, log order
  Origin origin = Origin::FromAddress;
  EntryData data;

  friend bool operator==(const EventSeqEntry&, const EventSeqEntry&) = default;
};

struct AddressSequences {
  std::string address;
  std::vector<EventSeqEntry> entries;  // ascending (timestamp, block, tx_index)
};

struct TokenSequences {
  TokenKey key;
  std::vector<EventSeqEntry> entries;
  bool is_multiple = false;
};

/// Transactions submitted by `addr` (FromAddress) plus transactions submitted
/// by others that carry `addr` as a property value (PropertyMatch).
AddressSequences sequences_for_address(const PropertyGraph& g, const std::string& addr,
                                       const SequenceConfig& config = {});

/// Transactions with a token-key property equal to `key.token_id` (and, under
/// ContractAndId keying, sent to `key.contract`).
TokenSequences sequences_for_token(const PropertyGraph& g, const TokenKey& key,
                                   const SequenceConfig& config = {});

/// Every token identity present in the graph under the configured keying.
std::vector<TokenKey> all_token_keys(const PropertyGraph& g, const SequenceConfig& config = {});

EntryData extract_entry_data(const TxRecord& tx, const SequenceConfig& config);

}  // namespace chainflow
