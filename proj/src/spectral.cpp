#include <cmath>

#include <Eigen/Eigenvalues>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"

namespace chainflow {

ClusterAssignment spectral(const Matrix& X, int k, std::uint64_t seed,
                           const SpectralConfig& config) {
  const auto n = X.rows();
  if (k < 1 || n < k) throw Error(ErrorKind::Config, "spectral clustering needs 1 <= k <= n");
  const double gamma = config.gamma > 0 ? config.gamma : 1.0 / static_cast<double>(X.cols());

  Matrix A = Matrix::Zero(n, n);
  bool any_apart = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (X.row(i) - X.row(j)).squaredNorm();
      if (d2 > 0) any_apart = true;
      A(i, j) = A(j, i) = std::exp(-gamma * d2);
    }
  }
  if (!any_apart && n > 1) {
    throw Error(ErrorKind::SingularAffinity, "all points coincide; spectral embedding undefined");
  }
  Vector deg = A.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(deg(i) > 0)) {
      throw Error(ErrorKind::SingularAffinity,
                  "point " + std::to_string(i) + " has zero affinity to every other point");
    }
  }
  const Vector dinv = deg.cwiseSqrt().cwiseInverse();
  Matrix L = -(dinv.asDiagonal() * A * dinv.asDiagonal());
  L.diagonal().array() += 1.0;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(L);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularAffinity, "eigendecomposition of the Laplacian failed");
  }
  Matrix U = solver.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = U.row(i).norm();
    if (norm > 0) U.row(i) /= norm;
  }

  auto a = kmeans(U, k, seed);
  a.algorithm = "spectral";
  a.centers.resize(0, 0);
  a.inertia = within_ss(X, a.labels);
  a.params.clear();
  a.params["k"] = std::to_string(k);
  a.params["gamma"] = std::to_string(gamma);
  return a;
}

}  // namespace chainflow
