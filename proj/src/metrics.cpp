#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"

namespace chainflow {

namespace {

// Validates the partition and returns k.
int check_partition(const Matrix& X, const std::vector<int>& labels) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (labels.size() != n) throw Error(ErrorKind::ShapeMismatch, "one label per row required");
  if (n == 0) throw Error(ErrorKind::UndefinedScore, "no points");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> size(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (int l : labels) {
    if (l < 0) throw Error(ErrorKind::UndefinedScore, "negative cluster label");
    ++size[static_cast<std::size_t>(l)];
  }
  if (std::find(size.begin(), size.end(), 0) != size.end()) {
    throw Error(ErrorKind::UndefinedScore, "empty cluster in partition");
  }
  if (k < 2) throw Error(ErrorKind::UndefinedScore, "score needs at least 2 clusters");
  if (n <= static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::UndefinedScore, "score needs more points than clusters");
  }
  return k;
}

Matrix centroids(const Matrix& X, const std::vector<int>& labels, int k, std::vector<double>& size) {
  Matrix C = Matrix::Zero(k, X.cols());
  size.assign(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    C.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
    size[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += 1;
  }
  for (int c = 0; c < k; ++c) C.row(c) /= size[static_cast<std::size_t>(c)];
  return C;
}

double comb2(double x) { return x * (x - 1) / 2; }

}  // namespace

double silhouette(const Matrix& X, const std::vector<int>& labels) {
  const int k = check_partition(X, labels);
  const auto n = X.rows();
  std::vector<double> size(static_cast<std::size_t>(k), 0.0);
  for (int l : labels) size[static_cast<std::size_t>(l)] += 1;
  double total = 0;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += (X.row(i) - X.row(j)).norm();
    }
    const auto own = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    if (size[own] <= 1) continue;  // singleton scores 0
    const double a = sums[own] / (size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c != own) b = std::min(b, sums[c] / size[c]);
    }
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

double davies_bouldin(const Matrix& X, const std::vector<int>& labels) {
  const int k = check_partition(X, labels);
  std::vector<double> size;
  const Matrix C = centroids(X, labels, k, size);
  std::vector<double> s(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto l = labels[static_cast<std::size_t>(i)];
    s[static_cast<std::size_t>(l)] += (X.row(i) - C.row(l)).norm();
  }
  for (int c = 0; c < k; ++c) s[static_cast<std::size_t>(c)] /= size[static_cast<std::size_t>(c)];
  double total = 0;
  for (int i = 0; i < k; ++i) {
    double worst = 0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      const double d = (C.row(i) - C.row(j)).norm();
      // Coincident centroids contribute nothing rather than infinity.
      if (d > 0) {
        worst = std::max(worst, (s[static_cast<std::size_t>(i)] + s[static_cast<std::size_t>(j)]) / d);
      }
    }
    total += worst;
  }
  return total / k;
}

double calinski_harabasz(const Matrix& X, const std::vector<int>& labels) {
  const int k = check_partition(X, labels);
  const auto n = static_cast<double>(X.rows());
  std::vector<double> size;
  const Matrix C = centroids(X, labels, k, size);
  const RowVector mean = X.colwise().mean();
  double between = 0, within = 0;
  for (int c = 0; c < k; ++c) between += size[static_cast<std::size_t>(c)] * (C.row(c) - mean).squaredNorm();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    within += (X.row(i) - C.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  if (within == 0) return 1.0;
  return between * (n - k) / (within * (k - 1));
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "label vectors differ in length");
  const auto n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  double index = 0, sa = 0, sb = 0;
  for (const auto& [key, c] : table) index += comb2(c);
  for (const auto& [key, c] : ra) sa += comb2(c);
  for (const auto& [key, c] : rb) sb += comb2(c);
  const double total = comb2(n);
  if (total == 0) return 1.0;
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

ClusterScores score(const Matrix& X, const ClusterAssignment& a) {
  ClusterScores s;
  s.algorithm = a.algorithm;
  s.k = a.k;
  try {
    s.sc = silhouette(X, a.labels);
    s.dbi = davies_bouldin(X, a.labels);
    s.chi = calinski_harabasz(X, a.labels);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UndefinedScore) throw;
    s.sc = s.dbi = s.chi = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

}  // namespace chainflow
