#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "ragen/errors.hpp"
#include "ragen/rng.hpp"

namespace ragen {

template <typename Scalar>
struct ClusteringResult {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::vector<std::size_t> assignments;  ///< point index -> cluster index
  Matrix centroids;                      ///< one row per cluster
  Scalar inertia = 0;                    ///< sum of squared distances to assigned centroids
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  std::vector<Scalar> inertia_history;   ///< inertia after each centroid update

  std::size_t k() const { return static_cast<std::size_t>(centroids.rows()); }
};

namespace detail {

template <typename Derived, typename Matrix>
std::vector<std::size_t> nearest_centroids(const Eigen::MatrixBase<Derived>& points, const Matrix& centroids) {
  using Scalar = typename Derived::Scalar;
  std::vector<std::size_t> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    Eigen::Index best_c = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const Scalar d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best_c);
  }
  return out;
}

template <typename Derived, typename Matrix>
typename Derived::Scalar inertia_of(const Eigen::MatrixBase<Derived>& points, const Matrix& centroids,
                                    const std::vector<std::size_t>& assignments) {
  typename Derived::Scalar total = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(i)])))
                 .squaredNorm();
  }
  return total;
}

/// Moves the point farthest from its centroid (taken from clusters with at
/// least two members) into each empty cluster.
template <typename Derived, typename Matrix>
void repair_empty_clusters(const Eigen::MatrixBase<Derived>& points, Matrix& centroids,
                           std::vector<std::size_t>& assignments) {
  using Scalar = typename Derived::Scalar;
  const auto k = static_cast<std::size_t>(centroids.rows());
  std::vector<std::size_t> counts(k, 0);
  for (auto a : assignments) ++counts[a];
  for (std::size_t empty = 0; empty < k; ++empty) {
    if (counts[empty] != 0) continue;
    Scalar worst = -1;
    std::size_t pick = 0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (counts[assignments[i]] < 2) continue;
      const auto row = static_cast<Eigen::Index>(i);
      const Scalar d = (points.row(row) - centroids.row(static_cast<Eigen::Index>(assignments[i]))).squaredNorm();
      if (d > worst) {
        worst = d;
        pick = i;
      }
    }
    --counts[assignments[pick]];
    assignments[pick] = empty;
    ++counts[empty];
    centroids.row(static_cast<Eigen::Index>(empty)) = points.row(static_cast<Eigen::Index>(pick));
  }
}

template <typename Derived, typename Matrix>
void update_means(const Eigen::MatrixBase<Derived>& points, Matrix& centroids,
                  const std::vector<std::size_t>& assignments) {
  const auto k = centroids.rows();
  Matrix sums = Matrix::Zero(k, points.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    sums.row(static_cast<Eigen::Index>(assignments[i])) += points.row(static_cast<Eigen::Index>(i));
    ++counts[assignments[i]];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto n = counts[static_cast<std::size_t>(c)];
    if (n > 0) centroids.row(c) = sums.row(c) / static_cast<typename Derived::Scalar>(n);
  }
}

}  // namespace detail

/// Lloyd's k-means over the rows of `points` with seeded k-means++
/// initialization. Iterates until the assignment reaches a fixpoint or
/// `max_iters` centroid updates have run. Empty clusters are reseeded with
/// the point farthest from its centroid. Ties in nearest-centroid search go
/// to the lower cluster index, so results depend only on inputs and seed.
template <typename Derived>
ClusteringResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, std::size_t k,
                                                  std::uint64_t seed, std::size_t max_iters) {
  using Scalar = typename Derived::Scalar;
  using Matrix = typename ClusteringResult<Scalar>::Matrix;
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw PreconditionError("kmeans: K must be positive");
  if (k > n) throw PreconditionError("kmeans: K exceeds the number of points");
  if (max_iters == 0) throw PreconditionError("kmeans: max_iters must be >= 1");

  ClusteringResult<Scalar> result;
  result.seed = seed;
  result.centroids = Matrix(static_cast<Eigen::Index>(k), points.cols());

  Rng rng(derive_seed(seed, "kmeans++"));
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  chosen[first] = true;
  result.centroids.row(0) = points.row(static_cast<Eigen::Index>(first));
  std::vector<Scalar> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = (points.row(static_cast<Eigen::Index>(i)) - result.centroids.row(0)).squaredNorm();
  }
  for (std::size_t c = 1; c < k; ++c) {
    Scalar total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0) {
      const Scalar target = static_cast<Scalar>(rng.uniform()) * total;
      Scalar acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] <= 0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    }
    if (pick == n) {
      // All remaining points coincide with a center; take the first unused one.
      for (pick = 0; chosen[pick]; ++pick) {
      }
    }
    chosen[pick] = true;
    const auto row = static_cast<Eigen::Index>(c);
    result.centroids.row(row) = points.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      const Scalar d = (points.row(static_cast<Eigen::Index>(i)) - result.centroids.row(row)).squaredNorm();
      if (d < d2[i]) d2[i] = d;
    }
  }

  std::vector<std::size_t> assignments = detail::nearest_centroids(points, result.centroids);
  while (result.iterations < max_iters) {
    detail::repair_empty_clusters(points, result.centroids, assignments);
    detail::update_means(points, result.centroids, assignments);
    ++result.iterations;
    result.inertia_history.push_back(detail::inertia_of(points, result.centroids, assignments));

    auto next = detail::nearest_centroids(points, result.centroids);
    if (next == assignments) {
      result.converged = true;
      break;
    }
    if (result.iterations == max_iters) break;
    assignments = std::move(next);
  }

  result.assignments = std::move(assignments);
  result.inertia = result.inertia_history.back();
  return result;
}

}  // namespace ragen
