#pragma once

#include "mmgan/errors.hpp"
#include "mmgan/types.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace mmgan {

/// Dense n-dimensional array, row-major. Used where data arrives with an
/// arbitrary rank (IDX files); batch math uses Eigen matrices directly.
template <typename Scalar>
struct BasicTensor {
  std::vector<std::size_t> shape;
  std::vector<Scalar> values;

  BasicTensor() = default;
  BasicTensor(std::vector<std::size_t> shape_, std::vector<Scalar> values_)
      : shape(std::move(shape_)), values(std::move(values_)) {
    if (shape.empty()) throw InvalidArgument("tensor shape must have at least one extent");
    for (auto e : shape)
      if (e == 0) throw InvalidArgument("tensor extents must be positive");
    if (element_count() != values.size())
      throw InvalidArgument("tensor value count does not match shape");
  }

  std::size_t element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t rank() const { return shape.size(); }

  bool all_finite() const {
    for (auto v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// View as (shape[0]) x (product of remaining extents). Rank-1 tensors become a column.
  MatrixX<Scalar> flatten_rows() const {
    const auto rows = static_cast<Eigen::Index>(shape.front());
    const auto cols = static_cast<Eigen::Index>(element_count() / shape.front());
    MatrixX<Scalar> out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        out(i, j) = values[static_cast<std::size_t>(i * cols + j)];
    return out;
  }
};

using Tensor = BasicTensor<double>;

}  // namespace mmgan
