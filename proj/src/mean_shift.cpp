#include <algorithm>
#include <cmath>
#include <numeric>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"

namespace chainflow {

double estimate_bandwidth(const Matrix& X, double quantile) {
  const auto n = X.rows();
  if (n < 2) return 0.0;
  // Mean distance from each point to its quantile-th nearest neighbour.
  const auto kth = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(static_cast<double>(n) * quantile));
  double sum = 0;
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d[static_cast<std::size_t>(j)] = (X.row(i) - X.row(j)).norm();
    std::nth_element(d.begin(), d.begin() + std::min(kth, n - 1), d.end());
    sum += d[static_cast<std::size_t>(std::min(kth, n - 1))];
  }
  return sum / static_cast<double>(n);
}

ClusterAssignment mean_shift(const Matrix& X, const MeanShiftConfig& config) {
  const auto n = X.rows();
  if (n == 0) throw Error(ErrorKind::DegenerateInput, "no points");
  double h = config.bandwidth > 0 ? config.bandwidth : estimate_bandwidth(X, config.quantile);
  ClusterAssignment a;
  a.algorithm = "mean_shift";
  if (!(h > 0)) {
    // Every point coincides with the others.
    a.labels.assign(static_cast<std::size_t>(n), 0);
    a.k = 1;
    a.centers = X.topRows(1);
    a.inertia = 0;
    a.params["bandwidth"] = "0";
    return a;
  }
  a.params["bandwidth"] = std::to_string(h);
  const double h2 = h * h;

  std::vector<RowVector> modes;
  std::vector<std::size_t> intensity;
  bool all_converged = true;
  for (Eigen::Index s = 0; s < n; ++s) {
    RowVector m = X.row(s);
    std::size_t inside = 0;
    bool done = false;
    for (int it = 0; it < config.max_iter; ++it) {
      RowVector sum = RowVector::Zero(X.cols());
      inside = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if ((X.row(i) - m).squaredNorm() <= h2) {
          sum += X.row(i);
          ++inside;
        }
      }
      if (inside == 0) break;
      const RowVector next = sum / static_cast<double>(inside);
      const double shift = (next - m).norm();
      m = next;
      if (shift <= 1e-3 * h) {
        done = true;
        break;
      }
    }
    if (!done) all_converged = false;
    modes.push_back(m);
    intensity.push_back(inside);
  }

  // Strongest modes first; drop any mode within one bandwidth of a kept one.
  std::vector<std::size_t> order(modes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return intensity[x] > intensity[y]; });
  std::vector<RowVector> kept;
  for (auto idx : order) {
    bool near = false;
    for (const auto& c : kept) {
      if ((c - modes[idx]).squaredNorm() <= h2) {
        near = true;
        break;
      }
    }
    if (!near) kept.push_back(modes[idx]);
  }

  a.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double bd = (X.row(i) - kept[0]).squaredNorm();
    for (std::size_t c = 1; c < kept.size(); ++c) {
      const double d = (X.row(i) - kept[c]).squaredNorm();
      if (d < bd) {
        bd = d;
        best = static_cast<int>(c);
      }
    }
    a.labels[static_cast<std::size_t>(i)] = best;
  }
  a.k = renumber(a.labels);
  a.converged = all_converged;
  a.inertia = within_ss(X, a.labels);
  return a;
}

}  // namespace chainflow
