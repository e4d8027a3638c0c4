#pragma once

#include <Eigen/Dense>

namespace sdmae {

/// Row-major dense matrix; token activations are (tokens x features).
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace sdmae
