// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_TYPES_HPP
#define MRB_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mrb
{

using Index = int;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;
using Triplet = Eigen::Triplet<double, Index>;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace mrb

#endif  // MRB_TYPES_HPP
