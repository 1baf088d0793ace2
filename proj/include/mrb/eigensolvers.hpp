// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_EIGENSOLVERS_HPP
#define MRB_EIGENSOLVERS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>
#include "mrb/types.hpp"

namespace mrb
{

struct SolverStats
{
  int restarts = 0;
  int operator_applications = 0;
  bool dense_fallback = false;
};

// Eigenpairs in ascending order of eigenvalue. Vectors are B-normalized and stored as
// columns; residual_norms[i] = ||A v_i - lambda_i B v_i||_2.
struct EigenSolution
{
  Vector values;
  Matrix vectors;
  std::vector<double> residual_norms;
  bool b_normalized = true;
  SolverStats stats;

  Index size() const { return static_cast<Index>(values.size()); }
};

// Sparse Cholesky factor of a symmetric positive definite matrix. The symbolic analysis is
// kept so matrices with the same pattern (e.g. B(t) for different t) only need a numeric
// refactorization.
class SpdFactor
{
public:
  SpdFactor();
  explicit SpdFactor(const SparseMatrix &M);
  SpdFactor(SpdFactor &&) noexcept;
  SpdFactor &operator=(SpdFactor &&) noexcept;
  ~SpdFactor();

  // Numeric refactorization; reuses the symbolic analysis when the pattern is unchanged.
  void factorize(const SparseMatrix &M);

  Matrix solve(const Matrix &rhs) const;
  // Overwrites X with M^-1 X.
  void solve_in_place(RowMatrix &X) const;
  Index size() const;
  bool empty() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SpdFactor factorize(const SparseMatrix &B);
Matrix solve_spd(const SpdFactor &factor, const Matrix &rhs);

// Keeps the factorization of one matrix per key for the most recent parameter value only.
// Asking for a new t refactorizes numerically on the cached symbolic analysis.
class FactorCache
{
public:
  const SpdFactor &get(const std::string &key, double t, const SparseMatrix &M);
  std::size_t size() const { return entries_.size(); }
  int factorizations() const { return factorizations_; }

private:
  struct Entry
  {
    std::string key;
    double t;
    SpdFactor factor;
  };
  std::vector<Entry> entries_;
  int factorizations_ = 0;
};

struct SparseEigenOptions
{
  // Shift for the shift-invert transformation. Must lie between lambda_cut and the smallest
  // physical eigenvalue so that the wanted modes map to the largest positive values of
  // 1 / (lambda - shift) and the gradient cluster maps to negative ones.
  double shift = 0.0;
  // Eigenvalues at or below this are gradient (spurious) modes and are never returned.
  double lambda_cut = 0.0;
  double tol = 1.0e-10;
  int max_restarts = 500;
  // Krylov window; 0 selects 2K + 10.
  int window = 0;
  // Block size of the Krylov iteration; resolves eigenvalue multiplicities up to this.
  int block_size = 3;
  std::uint64_t seed = 0x5eed;
  // Optional discrete gradient: when set, Krylov vectors are B-orthogonally projected
  // against its range so the nullspace never enters the iteration.
  const SparseMatrix *deflation_gradient = nullptr;
};

// K smallest eigenpairs of A v = lambda B v with lambda > lambda_cut, by block shift-invert
// Lanczos with thick restarts and full reorthogonalization. Problems too small to hold the
// Krylov window are solved densely.
EigenSolution solve_sparse_gevp(const SparseMatrix &A, const SparseMatrix &B, int K,
                                const SparseEigenOptions &opts);

// Full spectrum of a dense symmetric-definite pencil by Cholesky reduction to a standard
// symmetric problem. Throws NotSpdError if B is not positive definite.
EigenSolution solve_dense_gevp(const Matrix &A, const Matrix &B);

// Only the `count` smallest eigenpairs of a dense symmetric-definite pencil.
EigenSolution solve_dense_gevp(const Matrix &A, const Matrix &B, int count);

// Full spectrum of a sparse pencil computed densely; used as a brute-force reference.
EigenSolution dense_oracle(const SparseMatrix &A, const SparseMatrix &B);

// ||A v_i - lambda_i B v_i||_2 per column.
std::vector<double> residual_norms(const SparseMatrix &A, const SparseMatrix &B,
                                   const Vector &values, const Matrix &vectors);

double norm1(const SparseMatrix &M);

}  // namespace mrb

#endif  // MRB_EIGENSOLVERS_HPP
