#include <algorithm>
#include <cmath>
#include <random>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace chainflow;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix X(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) X(i++, 0) = x;
  return X;
}

Matrix blobs(const std::vector<std::vector<double>>& centers, int per, double sd, std::uint64_t seed,
             std::vector<int>* truth = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0, sd);
  const auto d = static_cast<Eigen::Index>(centers[0].size());
  Matrix X(static_cast<Eigen::Index>(centers.size()) * per, d);
  Eigen::Index r = 0;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (int i = 0; i < per; ++i, ++r) {
      for (Eigen::Index j = 0; j < d; ++j) X(r, j) = centers[c][static_cast<std::size_t>(j)] + nd(rng);
      if (truth) truth->push_back(static_cast<int>(c));
    }
  }
  return X;
}

// Random labels covering 0..k-1.
std::vector<int> random_labels(int n, int k, std::mt19937_64& rng) {
  std::vector<int> l(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = i < k ? i : static_cast<int>(rng() % static_cast<std::uint64_t>(k));
  std::shuffle(l.begin(), l.end(), rng);
  return l;
}

}  // namespace

TEST_CASE("scores match the definitional oracles") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 45);
    const int k = 2 + static_cast<int>(rng() % 4);
    const int d = 1 + static_cast<int>(rng() % 5);
    Matrix X(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = nd(rng);
    }
    const auto labels = random_labels(n, k, rng);
    CHECK(std::abs(silhouette(X, labels) - oracle::silhouette(X, labels)) < 1e-9);
    CHECK(std::abs(davies_bouldin(X, labels) - oracle::davies_bouldin(X, labels)) < 1e-9);
    CHECK(std::abs(calinski_harabasz(X, labels) - oracle::calinski_harabasz(X, labels)) <
          1e-9 * std::max(1.0, oracle::calinski_harabasz(X, labels)));
  }
}

TEST_CASE("silhouette of two tight pairs") {
  const auto X = column({0, 0.1, 10, 10.1});
  CHECK(silhouette(X, {0, 0, 1, 1}) == doctest::Approx(0.990).epsilon(0.001));
}

TEST_CASE("scores are undefined for one cluster or k = n") {
  const auto X = column({0, 1, 2});
  CHECK_THROWS_AS(silhouette(X, {0, 0, 0}), Error);
  CHECK_THROWS_AS(davies_bouldin(X, {0, 1, 2}), Error);
  CHECK_THROWS_AS(calinski_harabasz(X, {0, 0, 0}), Error);
  const auto s = score(X, ClusterAssignment{"x", {0, 0, 0}, 1});
  CHECK(std::isnan(s.sc));
}

TEST_CASE("scores ignore label names and positive scaling") {
  std::mt19937_64 rng(3);
  const auto X = blobs({{0, 0}, {4, 0}, {0, 4}}, 8, 0.7, 2);
  auto labels = random_labels(static_cast<int>(X.rows()), 3, rng);
  auto renamed = labels;
  for (auto& l : renamed) l = (l + 1) % 3;
  CHECK(silhouette(X, labels) == doctest::Approx(silhouette(X, renamed)).epsilon(1e-12));
  CHECK(davies_bouldin(X, labels) == doctest::Approx(davies_bouldin(X, renamed)).epsilon(1e-12));
  CHECK(calinski_harabasz(X, labels) == doctest::Approx(calinski_harabasz(X, renamed)).epsilon(1e-12));
  const Matrix scaled = 3.5 * X;
  CHECK(silhouette(scaled, labels) == doctest::Approx(silhouette(X, labels)).epsilon(1e-12));
  const auto a = kmeans(X, 3, 1), b = kmeans(scaled, 3, 1);
  CHECK(adjusted_rand_index(a.labels, b.labels) == doctest::Approx(1.0));
}

TEST_CASE("k-means on four points") {
  const auto a = kmeans(column({0, 1, 10, 11}), 2, 1);
  CHECK(a.inertia == 1.0);
  CHECK(a.labels[0] == a.labels[1]);
  CHECK(a.labels[2] == a.labels[3]);
  CHECK(a.labels[0] != a.labels[2]);
  std::vector<double> c{a.centers(0, 0), a.centers(1, 0)};
  std::sort(c.begin(), c.end());
  CHECK(c == std::vector<double>{0.5, 10.5});
  CHECK(kmeans(column({0, 1, 10, 11}), 4, 1).inertia == 0.0);
}

TEST_CASE("duplicating every point keeps the centroids") {
  const auto X = blobs({{0, 0}, {5, 5}, {0, 6}}, 10, 0.8, 4);
  Matrix D(2 * X.rows(), X.cols());
  D << X, X;
  auto sorted_rows = [](Matrix C) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < C.rows(); ++i) rows.push_back({C(i, 0), C(i, 1)});
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  const auto a = sorted_rows(kmeans(X, 3, 2).centers);
  const auto b = sorted_rows(kmeans(D, 3, 2).centers);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i][0] == doctest::Approx(b[i][0]).epsilon(1e-12));
    CHECK(a[i][1] == doctest::Approx(b[i][1]).epsilon(1e-12));
  }
}

TEST_CASE("Lloyd iterations never raise inertia and restarts never lose") {
  const auto X = blobs({{0, 0}, {3, 0}, {0, 3}, {3, 3}}, 12, 1.2, 8);
  std::vector<double> history;
  const auto single = kmeans_single(X, 4, 5, {}, &history);
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1] + 1e-12);
  KMeansConfig one;
  one.n_init = 1;
  const auto best = kmeans(X, 4, 5);
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(best.inertia <= kmeans(X, 4, s, one).inertia + 1e-9);
  CHECK(within_ss(X, single.labels) == doctest::Approx(single.inertia));
}

TEST_CASE("bisecting k-means with k = 2 agrees with k-means") {
  const auto X = blobs({{0, 0}, {6, 1}}, 15, 1.0, 3);
  CHECK(adjusted_rand_index(bisecting_kmeans(X, 2, 4).labels, kmeans(X, 2, 4).labels) ==
        doctest::Approx(1.0));
}

TEST_CASE("every algorithm separates two distant blobs") {
  std::vector<int> truth;
  const auto X = blobs({{0, 0}, {20, 20}}, 15, 0.5, 6, &truth);
  for (const auto& name : algorithm_names()) {
    CAPTURE(name);
    if (name == "affinity_propagation") continue;
    const auto a = run_algorithm(name, X, 2, 3);
    CHECK(a.k == 2);
    CHECK(adjusted_rand_index(a.labels, truth) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(run_algorithm("nope", X, 2, 3), Error);
}

TEST_CASE("Ward merges the closest pair first") {
  const auto a = agglomerative_ward(column({0, 1, 3}), 2);
  CHECK(a.labels[0] == a.labels[1]);
  CHECK(a.labels[1] != a.labels[2]);
  const auto b = agglomerative_ward(column({0, 1, 2}), 2);
  CHECK(b.k == 2);
  CHECK(b.labels == agglomerative_ward(column({0, 1, 2}), 2).labels);
}

TEST_CASE("affinity propagation flags oscillation and converges with more damping") {
  std::vector<int> truth;
  const auto X = blobs({{0, 0}, {20, 20}}, 15, 0.5, 6, &truth);
  const auto a = affinity_propagation(X, 3);
  if (a.k != 2) CHECK_FALSE(a.converged);
  AffinityConfig cfg;
  cfg.damping = 0.7;
  const auto b = affinity_propagation(X, 3, cfg);
  CHECK(b.converged);
  CHECK(b.k == 2);
  CHECK(adjusted_rand_index(b.labels, truth) == doctest::Approx(1.0));
  cfg.damping = 1.0;
  CHECK_THROWS_AS(affinity_propagation(X, 3, cfg), Error);
}

TEST_CASE("affinity propagation on one point") {
  const auto a = affinity_propagation(column({4.0}), 1);
  CHECK(a.k == 1);
  CHECK(a.labels == std::vector<int>{0});
  CHECK(a.centers(0, 0) == 4.0);
}

TEST_CASE("spectral rejects an isolated node") {
  SpectralConfig cfg;
  cfg.gamma = 1.0;
  try {
    spectral(column({0, 0.1, 0.2, 1000}), 2, 1, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularAffinity);
  }
}

TEST_CASE("mean shift bandwidth") {
  const auto X = blobs({{0, 0}, {10, 10}}, 10, 0.3, 1);
  CHECK(estimate_bandwidth(X) > 0);
  MeanShiftConfig cfg;
  cfg.bandwidth = 2.0;
  CHECK(mean_shift(X, cfg).k == 2);
}

TEST_CASE("elbow") {
  CHECK(elbow_from_inertias({100, 50, 20, 18, 17, 16}) == 3);
  CHECK(elbow_from_inertias({50, 40, 30, 20, 10}) == 2);
  Matrix same = Matrix::Constant(6, 2, 1.5);
  CHECK(elbow(same, 4, 1) == 1);
  const auto X = blobs({{0, 0, 0}, {10, 0, 0}, {0, 10, 0}}, 10, 0.3, 2);
  CHECK(elbow(X, 8, 1) == 3);
  const auto prof = inertia_profile(X, 5, 1);
  CHECK(prof.size() == 5);
  for (std::size_t i = 1; i < prof.size(); ++i) CHECK(prof[i] <= prof[i - 1]);
}

TEST_CASE("adjusted rand index matches the pair-count oracle") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const int n = 5 + static_cast<int>(rng() % 40);
    const auto a = random_labels(n, 2 + static_cast<int>(rng() % 3), rng);
    const auto b = random_labels(n, 2 + static_cast<int>(rng() % 4), rng);
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(oracle::adjusted_rand(a, b)).epsilon(1e-12));
  }
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
}

TEST_CASE("renumber by first appearance") {
  std::vector<int> l{7, 7, 2, 9, 2};
  CHECK(renumber(l) == 3);
  CHECK(l == std::vector<int>{0, 0, 1, 2, 1});
}

TEST_CASE("assignment table round trip") {
  const auto dir = fixtures::temp_dir("assign_rt");
  ClusterAssignment a{"kmeans", {0, 1, 1}, 2};
  ClusterAssignment b{"birch", {1, 0, 0}, 2};
  const std::vector<std::string> addrs{fixtures::addr(1), fixtures::addr(2), fixtures::addr(3)};
  write_assignments(dir / "c.csv", addrs, {a, b});
  std::vector<std::string> back;
  const auto m = read_assignments(dir / "c.csv", back);
  CHECK(back == addrs);
  CHECK(m.at("kmeans") == a.labels);
  CHECK(m.at("birch") == b.labels);
}
