#pragma once

#include <Eigen/Dense>

namespace skyirr {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

} // namespace skyirr
