#pragma once

#include <Eigen/Core>

namespace mixent {

/// n x d matrix of points, one point per row.
template <typename Scalar>
using PointMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PointSet = PointMatrix<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using LabelVector = Eigen::VectorXi;

}  // namespace mixent
