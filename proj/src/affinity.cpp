#include <algorithm>
#include <cmath>
#include <limits>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"
#include "random.hpp"

namespace chainflow {

ClusterAssignment affinity_propagation(const Matrix& X, std::uint64_t seed,
                                       const AffinityConfig& config) {
  const auto n = X.rows();
  if (n == 0) throw Error(ErrorKind::DegenerateInput, "no points");
  if (!(config.damping >= 0.5 && config.damping < 1.0)) {
    throw Error(ErrorKind::Config, "affinity propagation damping must be in [0.5, 1)");
  }
  ClusterAssignment a;
  a.algorithm = "affinity_propagation";
  a.seed = seed;
  a.params["damping"] = std::to_string(config.damping);
  a.params["max_iter"] = std::to_string(config.max_iter);
  a.params["convergence_iter"] = std::to_string(config.convergence_iter);
  if (n == 1) {
    a.labels = {0};
    a.k = 1;
    a.centers = X;
    return a;
  }

  Matrix S(n, n);
  std::vector<double> off;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      S(i, j) = -(X.row(i) - X.row(j)).squaredNorm();
      if (i != j) off.push_back(S(i, j));
    }
  }
  double preference;
  if (config.preference) {
    preference = *config.preference;
  } else {
    std::sort(off.begin(), off.end());
    const auto m = off.size();
    preference = m % 2 ? off[m / 2] : 0.5 * (off[m / 2 - 1] + off[m / 2]);
  }
  a.params["preference"] = std::to_string(preference);
  S.diagonal().setConstant(preference);

  // Tiny seeded jitter breaks exact ties between candidate exemplars.
  std::mt19937_64 rng(detail::mix_seed(seed, 3));
  const double eps = std::numeric_limits<double>::epsilon();
  const double tiny = std::numeric_limits<double>::min();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      S(i, j) += (eps * S(i, j) + tiny * 100) * detail::uniform(rng, -1.0, 1.0);
    }
  }

  Matrix R = Matrix::Zero(n, n), A = Matrix::Zero(n, n);
  const double lambda = config.damping;
  std::vector<std::vector<bool>> window;
  bool converged = false;
  int it = 0;
  for (; it < config.max_iter; ++it) {
    const Matrix AS = A + S;
    Matrix Rnew(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      double first = -std::numeric_limits<double>::infinity(), second = first;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double v = AS(i, k);
        if (v > first) {
          second = first;
          first = v;
          arg = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (Eigen::Index k = 0; k < n; ++k) Rnew(i, k) = S(i, k) - (k == arg ? second : first);
    }
    R = lambda * R + (1 - lambda) * Rnew;

    Matrix Rp = R.cwiseMax(0.0);
    Rp.diagonal() = R.diagonal();
    const RowVector col = Rp.colwise().sum();
    Matrix Anew(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = col(k) - Rp(i, k);
        Anew(i, k) = i == k ? v : std::min(0.0, v);
      }
    }
    A = lambda * A + (1 - lambda) * Anew;

    std::vector<bool> e(static_cast<std::size_t>(n));
    int count = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      e[static_cast<std::size_t>(k)] = A(k, k) + R(k, k) > 0;
      count += e[static_cast<std::size_t>(k)];
    }
    window.push_back(e);
    if (static_cast<int>(window.size()) > config.convergence_iter) window.erase(window.begin());
    if (static_cast<int>(window.size()) == config.convergence_iter && count > 0 &&
        std::all_of(window.begin(), window.end(), [&](const auto& w) { return w == e; })) {
      converged = true;
      break;
    }
  }
  a.params["iterations"] = std::to_string(std::min(it + 1, config.max_iter));

  std::vector<Eigen::Index> ex;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (A(k, k) + R(k, k) > 0) ex.push_back(k);
  }
  a.labels.assign(static_cast<std::size_t>(n), 0);
  if (ex.empty()) {
    // No exemplar emerged: report a single cluster, flagged as not converged.
    a.converged = false;
    a.k = 1;
    a.centers = X.colwise().mean();
    return a;
  }

  auto nearest = [&](Eigen::Index i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < ex.size(); ++c) {
      if (S(i, ex[c]) > S(i, ex[best])) best = c;
    }
    return static_cast<int>(best);
  };
  for (Eigen::Index i = 0; i < n; ++i) a.labels[static_cast<std::size_t>(i)] = nearest(i);
  for (std::size_t c = 0; c < ex.size(); ++c) a.labels[static_cast<std::size_t>(ex[c])] = static_cast<int>(c);
  // Refine: each cluster's exemplar becomes the member with the highest total similarity.
  for (std::size_t c = 0; c < ex.size(); ++c) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a.labels[static_cast<std::size_t>(i)] == static_cast<int>(c)) members.push_back(i);
    }
    Eigen::Index best = ex[c];
    double best_sum = -std::numeric_limits<double>::infinity();
    for (auto j : members) {
      double s = 0;
      for (auto i : members) s += S(i, j);
      if (s > best_sum) {
        best_sum = s;
        best = j;
      }
    }
    ex[c] = best;
  }
  for (Eigen::Index i = 0; i < n; ++i) a.labels[static_cast<std::size_t>(i)] = nearest(i);
  for (std::size_t c = 0; c < ex.size(); ++c) a.labels[static_cast<std::size_t>(ex[c])] = static_cast<int>(c);

  a.converged = converged;
  a.k = renumber(a.labels);
  Matrix centers(a.k, X.cols());
  for (std::size_t c = 0; c < ex.size(); ++c) {
    const int l = a.labels[static_cast<std::size_t>(ex[c])];
    centers.row(l) = X.row(ex[c]);
  }
  a.centers = centers;
  a.inertia = within_ss(X, a.labels);
  return a;
}

}  // namespace chainflow
