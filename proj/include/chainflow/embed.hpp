#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainflow/action.hpp"
#include "chainflow/flow.hpp"

namespace chainflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline constexpr int kNodeFeatures = 17;  // 15 action statistics + 2-wide type tag
inline constexpr int kEdgeFeatures = 2;   // order, normalized timestamp
inline constexpr double kLayerNormEps = 1e-5;

/// Numeric form of one flow: node features X (N x 17), edges as (source,
/// target) row pairs with attributes Y (M x 2), and the batch vector B.
struct GraphTensor {
  Matrix X;
  std::vector<std::array<int, 2>> I;
  Matrix Y;
  std::vector<int> B;

  int nodes() const { return static_cast<int>(X.rows()); }
  int edge_count() const { return static_cast<int>(I.size()); }
};

/// The 15 action statistics, timestamps as hours since `t0`, each log1p-scaled.
std::array<double, kActionFeatureCount> action_features(const ActionStats& s, std::int64_t t0);

/// Drops the user node and its edges. Throws Error{IneligibleFlow} when the flow
/// is not extended or has fewer than `min_distinct` distinct actions.
GraphTensor to_graph_tensor(const FlowGraph& flow, const BehaviourGraph& bg,
                            std::size_t min_distinct = kMinDistinctActions);

Matrix layer_norm(const Matrix& X, double eps = kLayerNormEps);
/// Row n = mean of the Y rows whose source is n; zero when n has no out-edges.
Matrix edge_scatter_mean(const Matrix& Y, const std::vector<std::array<int, 2>>& I, int n);
/// Row v = mean of X rows over in-neighbours of v (edges counted with multiplicity).
Matrix neighbour_mean(const Matrix& X, const std::vector<std::array<int, 2>>& I);

struct ModelDims {
  int d_in_node = kNodeFeatures;
  int d_in_edge = kEdgeFeatures;
  int d_hidden = 64;
  int d_out = 32;

  int d_cat() const { return d_in_node + d_in_edge; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// SAGE layer (W_self, W_neigh, b), output linear layer, and the decoder head
/// used only by the reconstruction objective. Weights act on row vectors.
struct ModelParams {
  ModelDims dims;
  std::uint64_t seed = 0;
  Matrix W_self, W_neigh;  // d_cat x d_hidden
  Vector b;                // d_hidden
  Matrix W_lin;            // d_hidden x d_out
  Vector b_lin;            // d_out
  Matrix W_dec;            // d_out x d_in_node
  Vector b_dec;            // d_in_node

  static ModelParams zeros(const ModelDims& dims);
  /// Xavier-uniform weights, zero biases.
  static ModelParams xavier(const ModelDims& dims, std::uint64_t seed);

  std::size_t parameter_count() const;
  /// Flat view in a fixed order, for optimizers and finite-difference checks.
  std::vector<double*> parameters();
  bool all_finite() const;
};

/// Throws Error{ShapeMismatch}.
Matrix sage_forward(const Matrix& X_cat, const std::vector<std::array<int, 2>>& I,
                    const ModelParams& params);

/// Concatenates layer-normed node features with grouped edge attributes.
Matrix input_features(const GraphTensor& t);

/// Graph-level embedding: mean over nodes of ReLU(H) W_lin + b_lin.
RowVector embed_tensor(const GraphTensor& t, const ModelParams& params);

/// One embedding row per tensor, computed in parallel; output is independent
/// of the thread count.
Matrix embed_batch(const std::vector<GraphTensor>& tensors, const ModelParams& params,
                   unsigned threads = 1);

std::pair<std::vector<std::string>, std::vector<std::string>> split_train_test(
    const std::vector<std::string>& addresses, double fraction, std::uint64_t seed);

struct TrainConfig {
  int epochs = 60;
  double lr = 0.05;
  double mask_rate = 0.15;
  double edge_dropout = 0.2;
  int max_backtracks = 20;
  std::uint64_t seed = 7;
  unsigned threads = 1;
};

/// Fixed mask per tensor: 1 marks a hidden X_norm entry.
std::vector<Matrix> make_masks(const std::vector<GraphTensor>& tensors, double rate,
                               std::uint64_t seed);

/// Mean squared reconstruction error over masked entries of all tensors. When
/// `grad` is non-null it receives the gradient (same shapes as `params`).
double reconstruction_loss(const std::vector<GraphTensor>& tensors,
                           const std::vector<Matrix>& masks, const ModelParams& params,
                           ModelParams* grad = nullptr, unsigned threads = 1);

/// Copy of `t` with each edge dropped independently with probability `p`.
GraphTensor drop_edges(const GraphTensor& t, double p, std::uint64_t seed);

/// Mean cosine similarity between each tensor's embedding and the embedding of
/// its edge-dropout copy.
double embedding_similarity(const std::vector<GraphTensor>& tensors, const ModelParams& params,
                            double dropout, std::uint64_t seed, unsigned threads = 1);

struct TrainReport {
  std::vector<double> loss;        // loss before each epoch's update, plus the final loss
  std::vector<double> validation;  // per epoch, empty when there is no test set
};

/// Full-batch gradient descent with step halving so the loss never increases.
/// Throws Error{Divergence} on a non-finite loss.
ModelParams train(const std::vector<GraphTensor>& train_set,
                  const std::vector<GraphTensor>& test_set, ModelParams init,
                  const TrainConfig& config, TrainReport* report = nullptr);

void write_embeddings(const std::filesystem::path& path, const std::vector<std::string>& addresses,
                      const Matrix& embeddings);
void read_embeddings(const std::filesystem::path& path, std::vector<std::string>& addresses,
                     Matrix& embeddings);

}  // namespace chainflow
