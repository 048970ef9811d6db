#pragma once

#include <Eigen/Dense>

#include <random>

namespace mmgan {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Rng = std::mt19937_64;

/// Fill a matrix with i.i.d. standard normal draws, row by row.
template <typename Scalar>
MatrixX<Scalar> standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  MatrixX<Scalar> out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

}  // namespace mmgan
