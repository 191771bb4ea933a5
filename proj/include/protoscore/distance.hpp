#pragma once

#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "protoscore/types.hpp"

// Euclidean distance kernels over row-sample matrices. Distances are always
// formed from explicit differences, never from the |a|^2 + |b|^2 - 2ab
// expansion, so results stay exact enough for 1e-9 oracle comparisons.
namespace protoscore {

template <typename A, typename B>
typename A::Scalar euclidean(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).norm();
}

// N x N matrix of distances between the rows of x.
template <typename Derived>
RowMatrix<typename Derived::Scalar> pairwise_distances(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows();
  RowMatrix<Scalar> d(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = Scalar(0);
    for (Index j = i + 1; j < n; ++j) {
      const Scalar v = (x.row(i) - x.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

// rows(a) x rows(b) matrix of distances.
template <typename A, typename B>
RowMatrix<typename A::Scalar> cross_distances(const Eigen::MatrixBase<A>& a,
                                              const Eigen::MatrixBase<B>& b) {
  RowMatrix<typename A::Scalar> d(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      d(i, j) = (a.row(i) - b.row(j)).norm();
    }
  }
  return d;
}

// Index of the row of `candidates` closest to `x` and its distance. Ties go
// to the lowest index.
template <typename X, typename C>
std::pair<Index, typename C::Scalar> nearest_row(const Eigen::MatrixBase<X>& x,
                                                 const Eigen::MatrixBase<C>& candidates) {
  using Scalar = typename C::Scalar;
  Index best = -1;
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  for (Index j = 0; j < candidates.rows(); ++j) {
    const Scalar d = (x - candidates.row(j)).norm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return {best, best_d};
}

template <typename A, typename C>
std::vector<int> nearest_rows(const Eigen::MatrixBase<A>& queries,
                              const Eigen::MatrixBase<C>& candidates) {
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Index i = 0; i < queries.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(nearest_row(queries.row(i), candidates).first);
  }
  return out;
}

// Mean distance from x to the selected rows of `points`.
template <typename X, typename P>
typename P::Scalar mean_distance(const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<P>& points,
                                 std::span<const Index> rows) {
  using Scalar = typename P::Scalar;
  if (rows.empty()) return Scalar(0);
  Scalar sum(0);
  for (const Index r : rows) sum += (x - points.row(r)).norm();
  return sum / static_cast<Scalar>(rows.size());
}

// Largest distance between any two rows of x.
template <typename Derived>
typename Derived::Scalar diameter(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Scalar best(0);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = i + 1; j < x.rows(); ++j) {
      best = std::max(best, (x.row(i) - x.row(j)).norm());
    }
  }
  return best;
}

} // namespace protoscore
