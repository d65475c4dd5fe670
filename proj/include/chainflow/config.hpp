#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainflow/action.hpp"
#include "chainflow/cluster.hpp"
#include "chainflow/embed.hpp"
#include "chainflow/ingest.hpp"
#include "chainflow/profile.hpp"

namespace chainflow {

struct IngestSettings {
  bool strict = false;
  std::uint64_t same_value_threshold = 2'000'000;
};

struct SequenceSettings {
  std::vector<std::string> token_keys{"tokenId", "_tokenId", "id"};
  std::vector<std::string> asset_keys{"assetId"};
  std::vector<std::string> ticket_keys{"ticketId"};
  std::vector<std::string> pack_keys{"packId"};
  std::string token_key = "contract+id";
};

struct EmbedSettings {
  int d_hidden = 64;
  int d_out = 32;
  bool untrained = false;
  int epochs = 60;
  double lr = 0.05;
  double mask_rate = 0.15;
  double edge_dropout = 0.2;
  double train_fraction = 0.7;
};

struct ClusterSettings {
  std::vector<std::string> algorithms;  // empty: every algorithm
  int k = 0;                            // 0: elbow over 1..k_max
  int k_max = 12;
  bool train_only = false;
  std::string profile_algorithm = "kmeans";
  double mean_shift_quantile = 0.3;
  double mean_shift_bandwidth = 0;
  int birch_branching = 50;
  double birch_threshold = 0;
  double spectral_gamma = 0;
  double affinity_damping = 0.5;
  std::optional<double> affinity_preference;
};

/// Every tunable of a pipeline run. Serialized as one flat JSON object with
/// dotted keys such as "embed.d_hidden".
struct PipelineConfig {
  std::string input;
  std::string out;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  IngestSettings ingest;
  SequenceSettings sequence;
  unsigned repeat_threshold = kDefaultRepeatThreshold;
  std::uint64_t min_distinct = kMinDistinctActions;
  EmbedSettings embed;
  ClusterSettings cluster;
  LabelParams profile;
  bool rho_literal = false;
  std::vector<std::string> export_formats{"dot", "graphml"};
};

/// Known keys in serialization order.
std::vector<std::string> config_keys();

/// Defaults with the CHAINFLOW_SEED fallback applied. Throws Error{Config}.
PipelineConfig default_config();
std::optional<std::uint64_t> env_seed();

/// Sets one dotted key from JSON text. Throws Error{Config} for unknown keys or
/// values of the wrong type.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view json_value);

/// Overlays a flat JSON document onto `config`. Throws Error{Io} or Error{Config}.
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Range checks across all settings. Throws Error{Config}.
void validate(const PipelineConfig& config);

/// Canonical JSON (fixed key order, two-space indent).
std::string to_json_text(const PipelineConfig& config);

SequenceConfig sequence_config(const PipelineConfig& config);
ActionConfig action_config(const PipelineConfig& config);
LoadOptions load_options(const PipelineConfig& config);
ModelDims model_dims(const PipelineConfig& config);
TrainConfig train_config(const PipelineConfig& config);
AlgorithmSettings algorithm_settings(const PipelineConfig& config);
ProfileConfig profile_config(const PipelineConfig& config);
/// Configured algorithms, or all of them when none are listed.
std::vector<std::string> cluster_algorithms(const PipelineConfig& config);

}  // namespace chainflow
