#include <algorithm>
#include <cmath>
#include <memory>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"

namespace chainflow {

namespace {

// Clustering feature: count, linear sum, squared sum.
struct CF {
  double n = 0;
  RowVector ls;
  double ss = 0;

  RowVector centroid() const { return ls / n; }
  void add(const CF& o) {
    n += o.n;
    ls += o.ls;
    ss += o.ss;
  }
  double radius_with(const CF& o) const {
    const double nn = n + o.n;
    const RowVector c = (ls + o.ls) / nn;
    return std::sqrt(std::max(0.0, (ss + o.ss) / nn - c.squaredNorm()));
  }
};

struct Node {
  bool leaf = true;
  std::vector<CF> entries;
  std::vector<std::unique_ptr<Node>> children;  // parallel to entries when !leaf
};

class CFTree {
 public:
  CFTree(int branching, double threshold) : branching_(branching), threshold_(threshold) {
    root_ = std::make_unique<Node>();
  }

  void insert(const RowVector& x) {
    CF cf{1.0, x, x.squaredNorm()};
    auto split = insert(*root_, cf);
    if (split) {
      auto new_root = std::make_unique<Node>();
      new_root->leaf = false;
      auto a = std::move(root_);
      new_root->entries.push_back(summary(*a));
      new_root->children.push_back(std::move(a));
      new_root->entries.push_back(summary(*split));
      new_root->children.push_back(std::move(split));
      root_ = std::move(new_root);
    }
  }

  std::vector<CF> leaves() const {
    std::vector<CF> out;
    collect(*root_, out);
    return out;
  }

 private:
  static CF summary(const Node& node) {
    CF s{0, RowVector::Zero(node.entries.front().ls.size()), 0};
    for (const auto& e : node.entries) s.add(e);
    return s;
  }

  static std::size_t closest(const Node& node, const RowVector& c) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.entries.size(); ++i) {
      const double d = (node.entries[i].centroid() - c).squaredNorm();
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  std::unique_ptr<Node> insert(Node& node, const CF& cf) {
    const RowVector c = cf.centroid();
    if (node.leaf) {
      if (!node.entries.empty()) {
        const auto i = closest(node, c);
        if (node.entries[i].radius_with(cf) <= threshold_) {
          node.entries[i].add(cf);
          return nullptr;
        }
      }
      node.entries.push_back(cf);
    } else {
      const auto i = closest(node, c);
      auto split = insert(*node.children[i], cf);
      if (split) {
        node.entries[i] = summary(*node.children[i]);
        node.entries.push_back(summary(*split));
        node.children.push_back(std::move(split));
      } else {
        node.entries[i].add(cf);
      }
    }
    if (static_cast<int>(node.entries.size()) <= branching_) return nullptr;
    return split_node(node);
  }

  // Farthest pair of entries seeds the two halves.
  static std::unique_ptr<Node> split_node(Node& node) {
    const std::size_t m = node.entries.size();
    std::size_t sa = 0, sb = 1;
    double far = -1;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double d = (node.entries[i].centroid() - node.entries[j].centroid()).squaredNorm();
        if (d > far) {
          far = d;
          sa = i;
          sb = j;
        }
      }
    }
    const RowVector ca = node.entries[sa].centroid(), cb = node.entries[sb].centroid();
    auto other = std::make_unique<Node>();
    other->leaf = node.leaf;
    std::vector<CF> keep;
    std::vector<std::unique_ptr<Node>> keep_children;
    for (std::size_t i = 0; i < m; ++i) {
      const RowVector c = node.entries[i].centroid();
      const bool to_b = i == sb || (i != sa && (c - cb).squaredNorm() < (c - ca).squaredNorm());
      if (to_b) {
        other->entries.push_back(node.entries[i]);
        if (!node.leaf) other->children.push_back(std::move(node.children[i]));
      } else {
        keep.push_back(node.entries[i]);
        if (!node.leaf) keep_children.push_back(std::move(node.children[i]));
      }
    }
    node.entries = std::move(keep);
    node.children = std::move(keep_children);
    return other;
  }

  static void collect(const Node& node, std::vector<CF>& out) {
    if (node.leaf) {
      out.insert(out.end(), node.entries.begin(), node.entries.end());
      return;
    }
    for (const auto& child : node.children) collect(*child, out);
  }

  int branching_;
  double threshold_;
  std::unique_ptr<Node> root_;
};

double median_nn_distance(const Matrix& X) {
  const auto n = X.rows();
  if (n < 2) return 0.0;
  std::vector<double> nn(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) {
        nn[static_cast<std::size_t>(i)] =
            std::min(nn[static_cast<std::size_t>(i)], (X.row(i) - X.row(j)).norm());
      }
    }
  }
  auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  return *mid;
}

}  // namespace

ClusterAssignment birch(const Matrix& X, int k, const BirchConfig& config) {
  const auto n = X.rows();
  if (k < 1 || n < k) throw Error(ErrorKind::Config, "BIRCH needs 1 <= k <= n");
  if (config.branching < 2) throw Error(ErrorKind::Config, "BIRCH branching must be >= 2");
  double threshold = config.threshold > 0 ? config.threshold : 0.5 * median_nn_distance(X);

  std::vector<CF> subclusters;
  for (int attempt = 0; attempt < 64; ++attempt) {
    CFTree tree(config.branching, threshold);
    for (Eigen::Index i = 0; i < n; ++i) tree.insert(X.row(i));
    subclusters = tree.leaves();
    if (static_cast<int>(subclusters.size()) >= k || threshold == 0) break;
    threshold *= 0.5;
  }
  if (static_cast<int>(subclusters.size()) < k) {
    // Coincident points: fall back to one subcluster per point.
    subclusters.clear();
    for (Eigen::Index i = 0; i < n; ++i) subclusters.push_back({1.0, X.row(i), X.row(i).squaredNorm()});
  }

  Matrix centroids(static_cast<Eigen::Index>(subclusters.size()), X.cols());
  std::vector<double> weights;
  for (std::size_t s = 0; s < subclusters.size(); ++s) {
    centroids.row(static_cast<Eigen::Index>(s)) = subclusters[s].centroid();
    weights.push_back(subclusters[s].n);
  }
  const auto sub_labels = weighted_ward(centroids, weights, k);

  ClusterAssignment a;
  a.algorithm = "birch";
  a.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < centroids.rows(); ++s) {
      const double d = (X.row(i) - centroids.row(s)).squaredNorm();
      if (d < bd) {
        bd = d;
        best = s;
      }
    }
    a.labels[static_cast<std::size_t>(i)] = sub_labels[static_cast<std::size_t>(best)];
  }
  a.k = renumber(a.labels);
  a.inertia = within_ss(X, a.labels);
  a.params["k"] = std::to_string(k);
  a.params["branching"] = std::to_string(config.branching);
  a.params["threshold"] = std::to_string(threshold);
  a.params["subclusters"] = std::to_string(subclusters.size());
  return a;
}

}  // namespace chainflow
