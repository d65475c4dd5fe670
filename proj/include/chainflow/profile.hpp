#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chainflow/action.hpp"
#include "chainflow/flow.hpp"

namespace chainflow {

enum class ActivityLabel {
  Active,
  SemiActive,
  InactiveWithInterest,
  InactiveNoInterest,
  BriefEngager,
  Dropout,
};

const char* to_string(ActivityLabel label);
ActivityLabel parse_activity_label(std::string_view text);

enum class TimeTier { Low, Mid, High };

/// x_i per distinct general-flow action: distinct NFTs with a USED_BY edge to it.
std::vector<std::uint64_t> nft_usage_counts(const GeneralFlow& gf);

/// Fraction of nodes with any usage; `literal` uses sum(x_i * 1[x_i > 0]) / m.
/// Throws Error{EmptyFlow} when m = 0.
double rho_from_counts(const std::vector<std::uint64_t>& x, bool literal = false);
double rho(const GeneralFlow& gf, bool literal = false);

struct PhiResult {
  int value = 0;
  bool defined = false;  // false when there is no usage at all
};

/// Smallest k such that the k largest x_i reach beta times the total.
PhiResult phi_from_counts(const std::vector<std::uint64_t>& x, double beta = 0.6);
PhiResult phi(const GeneralFlow& gf, double beta = 0.6);

struct LabelParams {
  double alpha = 0.5;
  double beta = 0.6;
  int gamma = 2;
};

struct ClusterProfile {
  int cluster_id = 0;
  std::size_t user_count = 0;
  double mean_assets = 0;
  double mean_tickets = 0;
  double mean_packs = 0;
  std::size_t flow_length = 0;
  std::size_t nft_count = 0;
  double time_hours = 0;
  double rho = 0;
  PhiResult phi;
  std::vector<std::string> sequence;
  TimeTier time_tier = TimeTier::Low;
  bool max_tickets = false;
  ActivityLabel label = ActivityLabel::BriefEngager;
};

/// Decision list over (rho, phi, time tier, ticket maximum).
ActivityLabel label_cluster(const ClusterProfile& p, const LabelParams& params = {});

/// Fills time_tier (terciles of time_hours rank, ties by cluster id),
/// max_tickets and label on every profile.
void label_clusters(std::vector<ClusterProfile>& profiles, const LabelParams& params = {});

struct ProfileConfig {
  LabelParams label;
  bool rho_literal = false;
};

/// One profile per cluster id present in `labels` (rows aligned with
/// `addresses`), ascending cluster id, with labels assigned.
std::vector<ClusterProfile> profile_clusters(const BehaviourGraph& bg,
                                             const std::vector<std::string>& addresses,
                                             const std::vector<int>& labels,
                                             const ProfileConfig& config = {},
                                             std::vector<GeneralFlow>* general_flows = nullptr);

void write_profiles(const std::filesystem::path& path, const std::vector<ClusterProfile>& profiles);

}  // namespace chainflow
