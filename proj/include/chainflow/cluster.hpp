#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chainflow/embed.hpp"

namespace chainflow {

/// Rows of `labels` are aligned with the rows of the clustered matrix; ids
/// cover 0..k-1 with no empty cluster.
struct ClusterAssignment {
  std::string algorithm;
  std::vector<int> labels;
  int k = 0;
  std::map<std::string, std::string> params;
  std::uint64_t seed = 0;
  bool converged = true;
  Matrix centers;   // k x d when the algorithm has centroids
  double inertia = std::numeric_limits<double>::quiet_NaN();
};

/// Relabels to 0..k-1 by first appearance. Returns the new k.
int renumber(std::vector<int>& labels);

/// Sum of squared distances of each row to the mean of its cluster.
double within_ss(const Matrix& X, const std::vector<int>& labels);

struct KMeansConfig {
  int n_init = 10;
  int max_iter = 300;
  double tol = 1e-8;  // stop when no centroid moves farther than this
};

/// One k-means++ seeded Lloyd run. `history`, when given, receives the inertia
/// after every assignment step.
ClusterAssignment kmeans_single(const Matrix& X, int k, std::uint64_t seed,
                                const KMeansConfig& config = {},
                                std::vector<double>* history = nullptr);
/// Best of `n_init` restarts by inertia.
ClusterAssignment kmeans(const Matrix& X, int k, std::uint64_t seed,
                         const KMeansConfig& config = {});

/// Inertia of k-means for k = 1..k_max.
std::vector<double> inertia_profile(const Matrix& X, int k_max, std::uint64_t seed);
/// `inertias[i]` belongs to k = i+1. Returns the k farthest from the chord
/// joining the first and last points; exact ties go to the smaller k.
int elbow_from_inertias(const std::vector<double>& inertias);
/// Returns 1 when all rows coincide.
int elbow(const Matrix& X, int k_max, std::uint64_t seed);

ClusterAssignment bisecting_kmeans(const Matrix& X, int k, std::uint64_t seed);

struct MeanShiftConfig {
  double bandwidth = 0;  // 0: estimate from the data
  double quantile = 0.3;
  int max_iter = 300;
};
double estimate_bandwidth(const Matrix& X, double quantile = 0.3);
ClusterAssignment mean_shift(const Matrix& X, const MeanShiftConfig& config = {});

ClusterAssignment agglomerative_ward(const Matrix& X, int k);
/// Ward merging of weighted points (used by BIRCH on its subclusters).
std::vector<int> weighted_ward(const Matrix& points, const std::vector<double>& weights, int k);

struct BirchConfig {
  int branching = 50;
  double threshold = 0;  // 0: half the median nearest-neighbour distance
};
ClusterAssignment birch(const Matrix& X, int k, const BirchConfig& config = {});

struct SpectralConfig {
  double gamma = 0;  // 0: 1 / column count
};
/// Throws Error{SingularAffinity} when the affinity graph has an isolated node.
ClusterAssignment spectral(const Matrix& X, int k, std::uint64_t seed,
                           const SpectralConfig& config = {});

struct AffinityConfig {
  double damping = 0.5;
  int max_iter = 200;
  int convergence_iter = 15;
  std::optional<double> preference;  // default: median similarity
};
ClusterAssignment affinity_propagation(const Matrix& X, std::uint64_t seed,
                                       const AffinityConfig& config = {});

/// Names accepted by run_algorithm, in reporting order.
const std::vector<std::string>& algorithm_names();
struct AlgorithmSettings {
  KMeansConfig kmeans;
  MeanShiftConfig mean_shift;
  BirchConfig birch;
  SpectralConfig spectral;
  AffinityConfig affinity;
};

/// `k` is ignored by mean_shift and affinity_propagation.
ClusterAssignment run_algorithm(const std::string& name, const Matrix& X, int k,
                                std::uint64_t seed, const AlgorithmSettings& settings = {});

/// Each throws Error{UndefinedScore} unless 2 <= k < n and labels cover 0..k-1.
double silhouette(const Matrix& X, const std::vector<int>& labels);
double davies_bouldin(const Matrix& X, const std::vector<int>& labels);
double calinski_harabasz(const Matrix& X, const std::vector<int>& labels);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct ClusterScores {
  std::string algorithm;
  int k = 0;
  double sc = std::numeric_limits<double>::quiet_NaN();
  double dbi = std::numeric_limits<double>::quiet_NaN();
  double chi = std::numeric_limits<double>::quiet_NaN();
};

/// NaN scores when the partition is not scorable.
ClusterScores score(const Matrix& X, const ClusterAssignment& a);

/// Wide table: address, then one label column per assignment.
void write_assignments(const std::filesystem::path& path, const std::vector<std::string>& addresses,
                       const std::vector<ClusterAssignment>& assignments);
/// Returns algorithm name -> labels; `addresses` receives the row keys.
std::map<std::string, std::vector<int>> read_assignments(const std::filesystem::path& path,
                                                         std::vector<std::string>& addresses);
void write_scores(const std::filesystem::path& path, const std::vector<ClusterScores>& scores);

}  // namespace chainflow
