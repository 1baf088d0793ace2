// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_TESTS_SUPPORT_HPP
#define MRB_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>
#include <Eigen/Dense>
#include "mrb/config.hpp"
#include "mrb/experiment.hpp"

namespace mrb::test
{

// Small configuration that still exercises every stage.
inline RunConfig small_config(Index n = 3)
{
  RunConfig cfg;
  cfg.resolution = {n, n, n};
  cfg.n_pod = 4;
  cfg.n_train = 6;
  cfg.n_init = 10;
  cfg.n_max = 20;
  cfg.tol = 1e-8;
  cfg.eval_set_size = 5;
  cfg.repetitions = 1;
  cfg.initial_steps = 4;
  return cfg;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64 &rng)
{
  std::normal_distribution<double> dist;
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; j++)
  {
    for (Index i = 0; i < rows; i++)
    {
      M(i, j) = dist(rng);
    }
  }
  return M;
}

inline Matrix orthonormal_columns(Index rows, Index cols, std::mt19937_64 &rng)
{
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, rng));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

// Eigenvalues of the sparse pencil above `cut`, computed densely.
inline std::vector<double> nonzero_spectrum(const SparseMatrix &A, const SparseMatrix &B,
                                            double cut)
{
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es{Matrix(A), Matrix(B)};
  std::vector<double> out;
  for (Index i = 0; i < es.eigenvalues().size(); i++)
  {
    if (es.eigenvalues()[i] > cut)
    {
      out.push_back(es.eigenvalues()[i]);
    }
  }
  return out;
}

inline Index numerical_rank(const Matrix &M)
{
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto &s = svd.singularValues();
  if (s.size() == 0)
  {
    return 0;
  }
  Index r = 0;
  for (Index i = 0; i < s.size(); i++)
  {
    r += s[i] > 1e-10 * s[0];
  }
  return r;
}

}  // namespace mrb::test

#endif  // MRB_TESTS_SUPPORT_HPP
