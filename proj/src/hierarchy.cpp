#include <limits>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"

namespace chainflow {

std::vector<int> weighted_ward(const Matrix& points, const std::vector<double>& weights, int k) {
  const auto m = static_cast<std::size_t>(points.rows());
  if (k < 1 || m < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::Config, "Ward needs 1 <= k <= n");
  }
  Matrix C = points;
  std::vector<double> w = weights;
  std::vector<int> owner(m);  // point -> cluster slot
  std::vector<bool> active(m, true);
  for (std::size_t i = 0; i < m; ++i) owner[i] = static_cast<int>(i);

  auto cost = [&](std::size_t i, std::size_t j) {
    return w[i] * w[j] / (w[i] + w[j]) *
           (C.row(static_cast<Eigen::Index>(i)) - C.row(static_cast<Eigen::Index>(j)))
               .squaredNorm();
  };
  std::vector<double> D(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) D[i * m + j] = cost(i, j);
  }

  for (std::size_t remaining = m; remaining > static_cast<std::size_t>(k); --remaining) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < m; ++j) {
        if (active[j] && D[i * m + j] < best) {
          best = D[i * m + j];
          bi = i;
          bj = j;
        }
      }
    }
    const double wi = w[bi], wj = w[bj];
    C.row(static_cast<Eigen::Index>(bi)) =
        (wi * C.row(static_cast<Eigen::Index>(bi)) + wj * C.row(static_cast<Eigen::Index>(bj))) /
        (wi + wj);
    w[bi] = wi + wj;
    active[bj] = false;
    for (auto& o : owner) {
      if (o == static_cast<int>(bj)) o = static_cast<int>(bi);
    }
    for (std::size_t l = 0; l < m; ++l) {
      if (!active[l] || l == bi) continue;
      const double c = cost(bi, l);
      if (l < bi) D[l * m + bi] = c;
      else D[bi * m + l] = c;
    }
  }
  renumber(owner);
  return owner;
}

ClusterAssignment agglomerative_ward(const Matrix& X, int k) {
  ClusterAssignment a;
  a.algorithm = "agglomerative";
  a.labels = weighted_ward(X, std::vector<double>(static_cast<std::size_t>(X.rows()), 1.0), k);
  a.k = renumber(a.labels);
  a.inertia = within_ss(X, a.labels);
  a.params["k"] = std::to_string(k);
  a.params["linkage"] = "ward";
  return a;
}

}  // namespace chainflow
