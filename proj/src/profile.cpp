#include "chainflow/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "chainflow/error.hpp"

namespace chainflow {

const char* to_string(ActivityLabel label) {
  switch (label) {
    case ActivityLabel::Active: return "active";
    case ActivityLabel::SemiActive: return "semi-active";
    case ActivityLabel::InactiveWithInterest: return "inactive-with-interest";
    case ActivityLabel::InactiveNoInterest: return "inactive-no-interest";
    case ActivityLabel::BriefEngager: return "brief-engager";
    case ActivityLabel::Dropout: return "dropout";
  }
  return "?";
}

ActivityLabel parse_activity_label(std::string_view text) {
  for (auto l : {ActivityLabel::Active, ActivityLabel::SemiActive,
                 ActivityLabel::InactiveWithInterest, ActivityLabel::InactiveNoInterest,
                 ActivityLabel::BriefEngager, ActivityLabel::Dropout}) {
    if (text == to_string(l)) return l;
  }
  throw Error(ErrorKind::Schema, "unknown activity label '" + std::string(text) + "'");
}

std::vector<std::uint64_t> nft_usage_counts(const GeneralFlow& gf) {
  std::map<std::string, std::set<std::string>> per_action;
  for (const auto& e : gf.edges) {
    if (e.type == BEdgeType::UsedBy) per_action[e.dst.key].insert(e.src.key);
  }
  std::vector<std::uint64_t> x;
  for (const auto& a : gf.actions) {
    auto it = per_action.find(a);
    x.push_back(it == per_action.end() ? 0 : it->second.size());
  }
  return x;
}

double rho_from_counts(const std::vector<std::uint64_t>& x, bool literal) {
  if (x.empty()) throw Error(ErrorKind::EmptyFlow, "general flow has no action nodes");
  double sum = 0;
  for (auto v : x) {
    if (v > 0) sum += literal ? static_cast<double>(v) : 1.0;
  }
  return sum / static_cast<double>(x.size());
}

double rho(const GeneralFlow& gf, bool literal) {
  return rho_from_counts(nft_usage_counts(gf), literal);
}

PhiResult phi_from_counts(const std::vector<std::uint64_t>& x, double beta) {
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto total = std::accumulate(sorted.begin(), sorted.end(), std::uint64_t{0});
  if (total == 0) return {0, false};
  const double target = beta * static_cast<double>(total);
  std::uint64_t running = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    running += sorted[k];
    if (static_cast<double>(running) >= target) return {static_cast<int>(k + 1), true};
  }
  return {static_cast<int>(sorted.size()), true};
}

PhiResult phi(const GeneralFlow& gf, double beta) {
  return phi_from_counts(nft_usage_counts(gf), beta);
}

ActivityLabel label_cluster(const ClusterProfile& p, const LabelParams& params) {
  const bool high = p.rho >= params.alpha;
  const bool distributed = p.phi.defined && p.phi.value > params.gamma;
  if (!high) {
    return p.max_tickets ? ActivityLabel::InactiveWithInterest : ActivityLabel::BriefEngager;
  }
  if (distributed) {
    return p.time_tier == TimeTier::High ? ActivityLabel::Active : ActivityLabel::SemiActive;
  }
  if (p.time_tier == TimeTier::Low) return ActivityLabel::Dropout;
  return p.phi.value >= 2 ? ActivityLabel::SemiActive : ActivityLabel::InactiveNoInterest;
}

void label_clusters(std::vector<ClusterProfile>& profiles, const LabelParams& params) {
  const std::size_t n = profiles.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (profiles[a].time_hours != profiles[b].time_hours) {
      return profiles[a].time_hours < profiles[b].time_hours;
    }
    return profiles[a].cluster_id < profiles[b].cluster_id;
  });
  for (std::size_t rank = 0; rank < n; ++rank) {
    const auto tier = 3 * rank / n;
    profiles[order[rank]].time_tier =
        tier == 0 ? TimeTier::Low : tier == 1 ? TimeTier::Mid : TimeTier::High;
  }
  double top = 0;
  for (const auto& p : profiles) top = std::max(top, p.mean_tickets);
  for (auto& p : profiles) {
    p.max_tickets = top > 0 && p.mean_tickets == top;
    p.label = label_cluster(p, params);
  }
}

std::vector<ClusterProfile> profile_clusters(const BehaviourGraph& bg,
                                             const std::vector<std::string>& addresses,
                                             const std::vector<int>& labels,
                                             const ProfileConfig& config,
                                             std::vector<GeneralFlow>* general_flows) {
  if (addresses.size() != labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one cluster label per address required");
  }
  std::map<int, std::vector<std::string>> members;
  for (std::size_t i = 0; i < addresses.size(); ++i) members[labels[i]].push_back(addresses[i]);

  std::vector<ClusterProfile> out;
  if (general_flows) general_flows->clear();
  for (const auto& [cluster, addrs] : members) {
    ClusterProfile p;
    p.cluster_id = cluster;
    p.user_count = addrs.size();
    std::vector<FlowGraph> flows;
    std::set<std::string> nfts;
    double assets = 0, tickets = 0, packs = 0, hours = 0;
    for (const auto& addr : addrs) {
      auto f = extract_flow(bg, addr, true);
      double ua = 0, ut = 0, up = 0, steps = 0;
      std::int64_t lo = 0, hi = 0;
      for (const auto& e : f.edges) {
        if (e.type == BEdgeType::UsedBy) {
          nfts.insert(e.src.key);
          continue;
        }
        lo = steps == 0 ? e.timestamp : std::min(lo, e.timestamp);
        hi = steps == 0 ? e.timestamp : std::max(hi, e.timestamp);
        ua += static_cast<double>(e.n_assets);
        ut += static_cast<double>(e.n_tickets);
        up += static_cast<double>(e.n_packs);
        steps += 1;
      }
      if (steps > 0) {
        assets += ua / steps;
        tickets += ut / steps;
        packs += up / steps;
        hours += static_cast<double>(hi - lo) / 3600.0;
      }
      flows.push_back(std::move(f));
    }
    const double users = static_cast<double>(addrs.size());
    p.mean_assets = assets / users;
    p.mean_tickets = tickets / users;
    p.mean_packs = packs / users;
    p.time_hours = hours / users;
    p.nft_count = nfts.size();

    auto gf = general_flow(flows, cluster);
    p.flow_length = gf.steps.size();
    p.sequence = gf.steps;
    const auto x = nft_usage_counts(gf);
    p.rho = x.empty() ? 0.0 : rho_from_counts(x, config.rho_literal);
    p.phi = phi_from_counts(x, config.label.beta);
    out.push_back(std::move(p));
    if (general_flows) general_flows->push_back(std::move(gf));
  }
  label_clusters(out, config.label);
  return out;
}

void write_profiles(const std::filesystem::path& path, const std::vector<ClusterProfile>& profiles) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "cluster,users,mean_assets,mean_tickets,mean_packs,flow_length,nfts,time_hours,rho,phi,"
         "phi_defined,label,sequence\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& p : profiles) {
    std::string seq;
    for (std::size_t i = 0; i < p.sequence.size(); ++i) {
      if (i) seq += ';';
      seq += p.sequence[i];
    }
    out << p.cluster_id << ',' << p.user_count << ',' << num(p.mean_assets) << ','
        << num(p.mean_tickets) << ',' << num(p.mean_packs) << ',' << p.flow_length << ','
        << p.nft_count << ',' << num(p.time_hours) << ',' << num(p.rho) << ',' << p.phi.value
        << ',' << (p.phi.defined ? "true" : "false") << ',' << to_string(p.label) << ',' << seq
        << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace chainflow
