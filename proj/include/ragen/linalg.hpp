#pragma once

#include <Eigen/Core>

#include <cmath>
#include <vector>

namespace ragen {

using Embedding = Eigen::VectorXd;

template <typename Derived>
typename Derived::Scalar squared_distance(const Eigen::MatrixBase<Derived>& a,
                                          const Eigen::MatrixBase<Derived>& b) {
  return (a - b).squaredNorm();
}

/// Cosine similarity; 0 when either side has zero norm.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return a.dot(b) / (na * nb);
}

/// Unit-norm copy; zero vectors are returned unchanged.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> unit(const Eigen::MatrixBase<Derived>& v) {
  const auto n = v.norm();
  if (n == 0) return v;
  return v / n;
}

/// Stacks vectors as rows of a matrix. All vectors must share a size.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> stack_rows(
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& rows) {
  const Eigen::Index dim = rows.empty() ? 0 : rows.front().size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

}  // namespace ragen
