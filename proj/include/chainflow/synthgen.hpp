#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "chainflow/action.hpp"
#include "chainflow/ingest.hpp"

namespace chainflow {

/// One kind of transaction: its events with multiplicities. Repeated events
/// are scaled by a per-transaction factor in [1, max_scale] unless the
/// multiset is Mixed, so the synthesized action stays the same.
struct TemplateSpec {
  std::vector<std::pair<std::string, int>> events;
  bool gift = false;  // names a recipient address, making the action Both-typed
};

struct ArchetypeSpec {
  std::string name;
  std::string label;  // planted activity label, may be empty
  std::vector<TemplateSpec> templates;  // performed cyclically in this order
  int min_length = 4;
  int max_length = 4;
  double nft_usage = 0;          // share of templates that carry NFTs
  double nft_concentration = 0;  // 1 puts almost every NFT on one template
  double asset_rate = 0;
  double ticket_rate = 0;
  double pack_rate = 0;
  double session_hours = 24;
  int max_scale = 2;
};

struct SynthConfig {
  int users_per_archetype = 30;
  std::uint64_t seed = 1;
  std::int64_t window_start = 1'700'000'000;
  int window_days = 30;
  double token_reuse = 0.0;
  double jitter = 0.25;  // fraction of the mean step gap
  int contracts = 3;
  int recipients = 5;  // gift recipients per archetype
  int repeat_threshold = kDefaultRepeatThreshold;
};

struct TruthRow {
  std::string address;
  int archetype = 0;
};

struct SynthDataset {
  std::vector<ArchetypeSpec> archetypes;
  std::vector<TxRecord> transactions;  // canonical (block, tx_index) order
  std::vector<TruthRow> truth;         // ascending address
};

/// Six archetypes mirroring the activity labels.
std::vector<ArchetypeSpec> default_archetypes();

/// Reads a JSON array of archetype objects. Throws Error{InvalidSpec}.
std::vector<ArchetypeSpec> load_archetypes(const std::filesystem::path& path);

/// Throws Error{InvalidSpec}.
void validate(const std::vector<ArchetypeSpec>& specs, const SynthConfig& config);

SynthDataset generate(const std::vector<ArchetypeSpec>& specs, const SynthConfig& config);

/// Indices of the templates that carry NFTs.
std::vector<std::size_t> token_templates(const ArchetypeSpec& spec);
/// NFTs per transaction for each template (0 for templates without NFTs).
std::vector<int> token_weights(const ArchetypeSpec& spec);

struct ArchetypeTargets {
  double rho = 0;
  int phi = 0;
};

/// rho and phi the archetype's general flow should show when users perform
/// every template about equally often.
ArchetypeTargets archetype_targets(const ArchetypeSpec& spec, double beta = 0.6);

void write_dataset(const std::filesystem::path& path, const std::vector<TxRecord>& txs);
void write_truth(const std::filesystem::path& path, const SynthDataset& data);
std::vector<TruthRow> read_truth(const std::filesystem::path& path);

}  // namespace chainflow
