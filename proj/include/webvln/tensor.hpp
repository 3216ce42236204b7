#pragma once

#include <Eigen/Core>

namespace webvln {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace webvln
