#pragma once

#include <span>

#include <Eigen/Core>

namespace fairrep {

// Row-major so that each sample is a contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline std::span<const double> row_span(const Matrix& m, Eigen::Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace fairrep
