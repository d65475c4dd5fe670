#include <algorithm>
#include <cmath>
#include <map>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"
#include "random.hpp"

namespace chainflow {

namespace {

double sq(const Matrix& X, Eigen::Index i, const Matrix& C, Eigen::Index j) {
  return (X.row(i) - C.row(j)).squaredNorm();
}

Matrix cluster_means(const Matrix& X, const std::vector<int>& labels, int k) {
  Matrix C = Matrix::Zero(k, X.cols());
  std::vector<double> count(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    C.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
    count[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += 1.0;
  }
  for (int c = 0; c < k; ++c) {
    if (count[static_cast<std::size_t>(c)] > 0) C.row(c) /= count[static_cast<std::size_t>(c)];
  }
  return C;
}

double assign(const Matrix& X, const Matrix& C, std::vector<int>& labels,
              std::vector<double>& dist) {
  double inertia = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int best = 0;
    double bd = sq(X, i, C, 0);
    for (Eigen::Index j = 1; j < C.rows(); ++j) {
      const double d = sq(X, i, C, j);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    dist[static_cast<std::size_t>(i)] = bd;
    inertia += bd;
  }
  return inertia;
}

Matrix kmeans_pp(const Matrix& X, int k, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(X.rows());
  Matrix C(k, X.cols());
  auto first = static_cast<Eigen::Index>(detail::below(rng, n));
  C.row(0) = X.row(first);
  std::vector<double> closest(n);
  double pot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    closest[i] = sq(X, static_cast<Eigen::Index>(i), C, 0);
    pot += closest[i];
  }
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  for (int c = 1; c < k; ++c) {
    Eigen::Index chosen = 0;
    if (pot <= 0) {
      chosen = static_cast<Eigen::Index>(detail::below(rng, n));
    } else {
      double best_pot = std::numeric_limits<double>::infinity();
      for (int t = 0; t < trials; ++t) {
        const double r = detail::uniform01(rng) * pot;
        double cum = 0;
        std::size_t cand = n;
        for (std::size_t i = 0; i < n; ++i) {
          cum += closest[i];
          if (cum > r && closest[i] > 0) {
            cand = i;
            break;
          }
        }
        if (cand == n) {
          for (std::size_t i = n; i-- > 0;) {
            if (closest[i] > 0) {
              cand = i;
              break;
            }
          }
        }
        double p = 0;
        for (std::size_t i = 0; i < n; ++i) {
          p += std::min(closest[i], (X.row(static_cast<Eigen::Index>(i)) -
                                     X.row(static_cast<Eigen::Index>(cand)))
                                        .squaredNorm());
        }
        if (p < best_pot) {
          best_pot = p;
          chosen = static_cast<Eigen::Index>(cand);
        }
      }
    }
    C.row(c) = X.row(chosen);
    pot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], sq(X, static_cast<Eigen::Index>(i), C, c));
      pot += closest[i];
    }
  }
  return C;
}

void finish(ClusterAssignment& a, const Matrix& X) {
  a.k = renumber(a.labels);
  a.centers = cluster_means(X, a.labels, a.k);
}

}  // namespace

int renumber(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (auto& l : labels) {
    auto it = remap.find(l);
    if (it == remap.end()) it = remap.emplace(l, static_cast<int>(remap.size())).first;
    l = it->second;
  }
  return static_cast<int>(remap.size());
}

double within_ss(const Matrix& X, const std::vector<int>& labels) {
  if (X.rows() == 0) return 0.0;
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  const Matrix C = cluster_means(X, labels, k);
  double s = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) s += sq(X, i, C, labels[static_cast<std::size_t>(i)]);
  return s;
}

ClusterAssignment kmeans_single(const Matrix& X, int k, std::uint64_t seed,
                                const KMeansConfig& config, std::vector<double>* history) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (k < 1 || n < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::Config, "k-means needs 1 <= k <= n (k=" + std::to_string(k) +
                                       ", n=" + std::to_string(n) + ")");
  }
  std::mt19937_64 rng(seed);
  Matrix C = kmeans_pp(X, k, rng);
  std::vector<int> labels(n);
  std::vector<double> dist(n);
  ClusterAssignment a;
  a.algorithm = "kmeans";
  a.seed = seed;
  a.converged = false;
  for (int it = 0; it < config.max_iter; ++it) {
    const double inertia = assign(X, C, labels, dist);
    if (history) history->push_back(inertia);
    Matrix next = cluster_means(X, labels, k);
    std::vector<int> size(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++size[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (size[static_cast<std::size_t>(c)] > 0) continue;
      // Relocate an empty centroid onto the point farthest from its own centroid.
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (size[static_cast<std::size_t>(labels[i])] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) break;
      --size[static_cast<std::size_t>(labels[far])];
      labels[far] = c;
      size[static_cast<std::size_t>(c)] = 1;
      dist[far] = 0;
      next = cluster_means(X, labels, k);
    }
    double shift = 0;
    for (int c = 0; c < k; ++c) shift = std::max(shift, (next.row(c) - C.row(c)).norm());
    C = std::move(next);
    if (shift < config.tol) {
      a.converged = true;
      break;
    }
  }
  a.inertia = assign(X, C, labels, dist);
  if (history) history->push_back(a.inertia);
  a.labels = std::move(labels);
  finish(a, X);
  return a;
}

ClusterAssignment kmeans(const Matrix& X, int k, std::uint64_t seed, const KMeansConfig& config) {
  ClusterAssignment best;
  for (int r = 0; r < std::max(1, config.n_init); ++r) {
    auto a = kmeans_single(X, k, detail::mix_seed(seed, static_cast<std::uint64_t>(r)), config);
    if (r == 0 || a.inertia < best.inertia) best = std::move(a);
  }
  best.seed = seed;
  best.params["n_init"] = std::to_string(config.n_init);
  best.params["k"] = std::to_string(k);
  return best;
}

std::vector<double> inertia_profile(const Matrix& X, int k_max, std::uint64_t seed) {
  std::vector<double> out;
  for (int k = 1; k <= k_max; ++k) out.push_back(kmeans(X, k, seed).inertia);
  return out;
}

int elbow_from_inertias(const std::vector<double>& inertias) {
  const int K = static_cast<int>(inertias.size());
  if (K == 0) throw Error(ErrorKind::DegenerateInput, "no inertia values");
  if (K == 1 || inertias.front() <= 0) return 1;
  if (K == 2) return inertias[1] < inertias[0] ? 2 : 1;
  const double x1 = 1, y1 = inertias.front(), x2 = K, y2 = inertias.back();
  const double dx = x2 - x1, dy = y2 - y1, norm = std::hypot(dx, dy);
  std::vector<double> d(static_cast<std::size_t>(K), 0.0);
  double best = 0;
  for (int k = 2; k < K; ++k) {
    const double x = k, y = inertias[static_cast<std::size_t>(k - 1)];
    d[static_cast<std::size_t>(k - 1)] = std::abs(dy * x - dx * y + x2 * y1 - y2 * x1) / norm;
    best = std::max(best, d[static_cast<std::size_t>(k - 1)]);
  }
  const double tol = 1e-9 * std::max(best, 1e-300);
  for (int k = 2; k < K; ++k) {
    if (d[static_cast<std::size_t>(k - 1)] >= best - tol) return k;
  }
  return 2;
}

int elbow(const Matrix& X, int k_max, std::uint64_t seed) {
  if (X.rows() == 0) throw Error(ErrorKind::DegenerateInput, "no points");
  bool identical = true;
  for (Eigen::Index i = 1; i < X.rows() && identical; ++i) identical = X.row(i) == X.row(0);
  if (identical) return 1;
  k_max = std::min<int>(k_max, static_cast<int>(X.rows()));
  if (k_max < 2) return 1;
  return elbow_from_inertias(inertia_profile(X, k_max, seed));
}

ClusterAssignment bisecting_kmeans(const Matrix& X, int k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (k < 1 || n < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::Config, "bisecting k-means needs 1 <= k <= n");
  }
  ClusterAssignment a;
  a.algorithm = "bisecting_kmeans";
  a.seed = seed;
  a.labels.assign(n, 0);
  int clusters = 1;
  for (std::uint64_t split = 0; clusters < k; ++split) {
    const Matrix C = cluster_means(X, a.labels, clusters);
    std::vector<double> sse(static_cast<std::size_t>(clusters), 0.0);
    std::vector<std::size_t> size(static_cast<std::size_t>(clusters), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto l = static_cast<std::size_t>(a.labels[i]);
      sse[l] += sq(X, static_cast<Eigen::Index>(i), C, static_cast<Eigen::Index>(l));
      ++size[l];
    }
    int target = -1;
    for (int c = 0; c < clusters; ++c) {
      if (size[static_cast<std::size_t>(c)] < 2) continue;
      if (target < 0 || sse[static_cast<std::size_t>(c)] > sse[static_cast<std::size_t>(target)]) {
        target = c;
      }
    }
    if (target < 0) break;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (a.labels[i] == target) members.push_back(i);
    }
    Matrix sub(static_cast<Eigen::Index>(members.size()), X.cols());
    for (std::size_t m = 0; m < members.size(); ++m) {
      sub.row(static_cast<Eigen::Index>(m)) = X.row(static_cast<Eigen::Index>(members[m]));
    }
    const auto part = kmeans(sub, 2, split == 0 ? seed : detail::mix_seed(seed, 100 + split));
    if (part.k < 2) break;
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (part.labels[m] == 1) a.labels[members[m]] = clusters;
    }
    ++clusters;
  }
  finish(a, X);
  a.inertia = within_ss(X, a.labels);
  a.params["k"] = std::to_string(k);
  return a;
}

}  // namespace chainflow
