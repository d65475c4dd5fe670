#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "chainflow/cluster.hpp"
#include "chainflow/config.hpp"
#include "chainflow/embed.hpp"
#include "chainflow/flow.hpp"
#include "chainflow/profile.hpp"

namespace chainflow {

inline constexpr std::string_view kRunFormat = "chainflow-run/1";

struct EmbedResult {
  std::vector<std::string> addresses;  // eligible users, ascending
  Matrix embeddings;                   // one row per address
  std::vector<std::string> train, test;
  ModelParams params;
  TrainReport report;
};

/// Eligible extended flows -> tensors -> (trained or Xavier) GNN embeddings.
EmbedResult embed_users(const BehaviourGraph& bg, const PipelineConfig& config);

struct ClusterResult {
  int k = 0;  // requested k (configured or elbow-selected)
  std::vector<ClusterAssignment> assignments;
  std::vector<ClusterScores> scores;            // one per configured algorithm
  std::map<std::string, std::string> failures;  // algorithm -> message
};

ClusterResult cluster_embeddings(const Matrix& X, const PipelineConfig& config);

struct PipelineResult {
  std::filesystem::path dir;
  std::size_t eligible = 0;
  int k = 0;
  std::vector<std::string> addresses;  // clustered addresses
  std::vector<int> labels;             // profile algorithm's labels
  std::vector<ClusterScores> scores;
  std::vector<ClusterProfile> profiles;
  std::map<std::string, std::string> hashes;  // relative path -> sha256
};

/// Runs ingest -> actions -> flows -> embed -> cluster -> profile into
/// `config.out`. Errors keep their kind and gain the stage name as a prefix.
PipelineResult run_pipeline(const PipelineConfig& config);

/// SHA-256 of every regular file under `dir` except manifest.json, keyed by
/// generic relative path.
std::map<std::string, std::string> hash_tree(const std::filesystem::path& dir);

void write_split(const std::filesystem::path& path, const std::vector<std::string>& train,
                 const std::vector<std::string>& test);
void write_training_log(const std::filesystem::path& path, const TrainReport& report);

}  // namespace chainflow
