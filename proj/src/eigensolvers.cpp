// SPDX-License-Identifier: Apache-2.0

#include "mrb/eigensolvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include "mrb/error.hpp"

namespace mrb
{

const SpdFactor &FactorCache::get(const std::string &key, double t, const SparseMatrix &M)
{
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Entry &e) { return e.key == key; });
  if (it == entries_.end())
  {
    entries_.push_back({key, t, SpdFactor(M)});
    factorizations_++;
    return entries_.back().factor;
  }
  if (it->t != t)
  {
    it->factor.factorize(M);
    it->t = t;
    factorizations_++;
  }
  return it->factor;
}

double norm1(const SparseMatrix &M)
{
  double best = 0.0;
  for (Index j = 0; j < M.outerSize(); j++)
  {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(M, j); it; ++it)
    {
      s += std::abs(it.value());
    }
    best = std::max(best, s);
  }
  return best;
}

std::vector<double> residual_norms(const SparseMatrix &A, const SparseMatrix &B,
                                   const Vector &values, const Matrix &vectors)
{
  std::vector<double> res(static_cast<std::size_t>(values.size()));
  if (values.size() == 0)
  {
    return res;
  }
  const Matrix R = A * vectors - B * vectors * values.asDiagonal();
  for (Index i = 0; i < values.size(); i++)
  {
    res[i] = R.col(i).norm();
  }
  return res;
}

namespace
{

std::vector<double> dense_residuals(const Matrix &A, const Matrix &B, const Vector &values,
                                    const Matrix &vectors)
{
  std::vector<double> res(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); i++)
  {
    res[i] = (A * vectors.col(i) - values[i] * (B * vectors.col(i))).norm();
  }
  return res;
}

void check_dense_pencil(const Matrix &A, const Matrix &B)
{
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
  {
    throw UsageError("dense eigenproblem requires square matrices of equal size");
  }
}

}  // namespace

EigenSolution solve_dense_gevp(const Matrix &A, const Matrix &B)
{
  check_dense_pencil(A, B);
  EigenSolution sol;
  if (A.rows() == 0)
  {
    return sol;
  }
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success)
  {
    throw NotSpdError("dense mass matrix is not positive definite");
  }
  // Reduce to the standard problem L^-1 A L^-T y = lambda y, v = L^-T y.
  Matrix C = llt.matrixL().solve(A);
  C = llt.matrixL().solve(C.transpose()).transpose();
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(C);
  if (es.info() != Eigen::Success)
  {
    throw ConvergenceError("dense symmetric eigensolver did not converge");
  }
  sol.values = es.eigenvalues();
  sol.vectors = llt.matrixU().solve(es.eigenvectors());
  sol.residual_norms = dense_residuals(A, B, sol.values, sol.vectors);
  sol.stats.dense_fallback = true;
  return sol;
}

namespace
{

// Solve (T - shift I) x = rhs for a symmetric tridiagonal T (diagonal d, off-diagonal e) by
// Gaussian elimination with partial pivoting. Tiny pivots are replaced by `tiny`.
void tridiagonal_solve(const Vector &d, const Vector &e, double shift, double tiny, Vector &x)
{
  const Index n = d.size();
  if (n == 1)
  {
    const double p = d[0] - shift;
    x[0] /= std::abs(p) < tiny ? tiny : p;
    return;
  }
  // Row k of the eliminated system holds u0[k] x_k + u1[k] x_{k+1} + u2[k] x_{k+2}.
  Vector u0(n), u1 = Vector::Zero(n), u2 = Vector::Zero(n);
  double diag = d[0] - shift, upper = e[0];
  for (Index k = 0; k < n - 1; k++)
  {
    const double sub = e[k];
    const double next_diag = d[k + 1] - shift;
    const double next_upper = k + 1 < n - 1 ? e[k + 1] : 0.0;
    if (std::abs(diag) >= std::abs(sub))
    {
      if (std::abs(diag) < tiny)
      {
        diag = tiny;
      }
      const double m = sub / diag;
      u0[k] = diag;
      u1[k] = upper;
      u2[k] = 0.0;
      x[k + 1] -= m * x[k];
      diag = next_diag - m * upper;
      upper = next_upper;
    }
    else
    {
      const double m = diag / sub;
      u0[k] = sub;
      u1[k] = next_diag;
      u2[k] = next_upper;
      std::swap(x[k], x[k + 1]);
      x[k + 1] -= m * x[k];
      const double new_diag = upper - m * next_diag;
      upper = -m * next_upper;
      diag = new_diag;
    }
  }
  u0[n - 1] = std::abs(diag) < tiny ? tiny : diag;
  x[n - 1] /= u0[n - 1];
  x[n - 2] = (x[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2];
  for (Index k = n - 3; k >= 0; k--)
  {
    x[k] = (x[k] - u1[k] * x[k + 1] - u2[k] * x[k + 2]) / u0[k];
  }
}

// Eigenvectors of a symmetric tridiagonal matrix for the given eigenvalues by inverse
// iteration, re-orthogonalizing within clusters of close eigenvalues.
Matrix tridiagonal_eigenvectors(const Vector &d, const Vector &e, const Vector &values)
{
  const Index n = d.size();
  const Index m = values.size();
  double tnorm = 0.0;
  for (Index k = 0; k < n; k++)
  {
    tnorm = std::max(tnorm, std::abs(d[k]) + (k > 0 ? std::abs(e[k - 1]) : 0.0) +
                                (k < n - 1 ? std::abs(e[k]) : 0.0));
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double tiny = std::max(eps * tnorm, std::numeric_limits<double>::min());
  const double cluster = 1.0e-3 * tnorm;
  Matrix Y(n, m);
  std::mt19937_64 rng(0x7d1a);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Index cluster_start = 0;
  for (Index j = 0; j < m; j++)
  {
    if (j > 0 && values[j] - values[j - 1] > cluster)
    {
      cluster_start = j;
    }
    Vector x(n);
    for (Index k = 0; k < n; k++)
    {
      x[k] = dist(rng);
    }
    x.normalize();
    for (int it = 0; it < 3; it++)
    {
      tridiagonal_solve(d, e, values[j], tiny, x);
      for (Index i = cluster_start; i < j; i++)
      {
        x -= Y.col(i).dot(x) * Y.col(i);
      }
      x.normalize();
    }
    Y.col(j) = x;
  }
  return Y;
}

// Number of eigenvalues of the symmetric tridiagonal T below x (Sturm sequence count).
Index sturm_count(const Vector &d, const Vector &e, double x, double tiny)
{
  Index count = 0;
  double q = d[0] - x;
  for (Index k = 0;; k++)
  {
    if (std::abs(q) < tiny)
    {
      q = -tiny;
    }
    if (q < 0.0)
    {
      count++;
    }
    if (k + 1 == d.size())
    {
      break;
    }
    q = d[k + 1] - x - e[k] * e[k] / q;
  }
  return count;
}

// The `count` smallest eigenvalues of a symmetric tridiagonal matrix by bisection.
Vector tridiagonal_smallest(const Vector &d, const Vector &e, Index count)
{
  const Index n = d.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index k = 0; k < n; k++)
  {
    const double r = (k > 0 ? std::abs(e[k - 1]) : 0.0) + (k < n - 1 ? std::abs(e[k]) : 0.0);
    lo = std::min(lo, d[k] - r);
    hi = std::max(hi, d[k] + r);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double tnorm = std::max(std::abs(lo), std::abs(hi));
  const double tiny = std::max(eps * eps * tnorm, std::numeric_limits<double>::min());
  lo -= 2.0 * eps * tnorm + tiny;
  hi += 2.0 * eps * tnorm + tiny;
  Vector values(count);
  double left = lo;
  for (Index j = 0; j < count; j++)
  {
    double a = left, b = hi;
    while (b - a > 4.0 * eps * tnorm)
    {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b)
      {
        break;
      }
      if (sturm_count(d, e, mid, tiny) > j)
      {
        b = mid;
      }
      else
      {
        a = mid;
      }
    }
    values[j] = 0.5 * (a + b);
    left = a;
  }
  return values;
}

}  // namespace

EigenSolution solve_dense_gevp(const Matrix &A, const Matrix &B, int count)
{
  check_dense_pencil(A, B);
  const Index n = A.rows();
  count = std::clamp(count, 0, static_cast<int>(n));
  EigenSolution sol;
  if (count == 0)
  {
    sol.values.resize(0);
    sol.vectors.resize(n, 0);
    return sol;
  }
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success)
  {
    throw NotSpdError("dense mass matrix is not positive definite");
  }
  Matrix C = llt.matrixL().solve(A);
  C = llt.matrixL().solve(C.transpose()).transpose();
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::Tridiagonalization<Matrix> tri(C);
  const Vector d = tri.diagonal();
  const Vector e = tri.subDiagonal();
  sol.values = tridiagonal_smallest(d, e, count);
  Matrix Y = tridiagonal_eigenvectors(d, e, sol.values);
  // Rayleigh quotients of the inverse-iteration vectors sharpen the bisection values.
  for (Index j = 0; j < count; j++)
  {
    const Vector &y = Y.col(j);
    double rq = d.dot(y.cwiseProduct(y));
    for (Index k = 0; k + 1 < y.size(); k++)
    {
      rq += 2.0 * e[k] * y[k] * y[k + 1];
    }
    sol.values[j] = rq;
  }
  Y.applyOnTheLeft(tri.matrixQ());
  sol.vectors = llt.matrixU().solve(Y);
  sol.residual_norms = dense_residuals(A, B, sol.values, sol.vectors);
  sol.stats.dense_fallback = true;
  return sol;
}

EigenSolution dense_oracle(const SparseMatrix &A, const SparseMatrix &B)
{
  return solve_dense_gevp(Matrix(A), Matrix(B));
}

namespace
{

// Keep the K smallest eigenpairs with lambda > cut from a full dense spectrum.
EigenSolution select_above_cut(const EigenSolution &full, int K, double cut)
{
  std::vector<Index> keep;
  for (Index i = 0; i < full.size() && static_cast<int>(keep.size()) < K; i++)
  {
    if (full.values[i] > cut)
    {
      keep.push_back(i);
    }
  }
  if (static_cast<int>(keep.size()) < K)
  {
    throw ConvergenceError("only " + std::to_string(keep.size()) +
                           " eigenvalues above lambda_cut exist; requested " +
                           std::to_string(K));
  }
  EigenSolution sol;
  sol.values.resize(K);
  sol.vectors.resize(full.vectors.rows(), K);
  for (int i = 0; i < K; i++)
  {
    sol.values[i] = full.values[keep[i]];
    sol.vectors.col(i) = full.vectors.col(keep[i]);
    sol.residual_norms.push_back(full.residual_norms[keep[i]]);
  }
  sol.stats = full.stats;
  return sol;
}

// Block Krylov-Schur iteration for the operator OP = (A - sigma B)^-1 B, which is
// self-adjoint in the B inner product. Basis vectors are kept B-orthonormal and B * V is
// stored alongside V so inner products cost one dense product.
class ShiftInvertLanczos
{
public:
  ShiftInvertLanczos(const SparseMatrix &A, const SparseMatrix &B, int K,
                     const SparseEigenOptions &opts)
    : B_(B), K_(K), opts_(opts), n_(static_cast<Index>(A.rows())), rng_(opts.seed)
  {
    bs_ = std::max(1, opts.block_size);
    const int window = opts.window > 0 ? opts.window : 2 * K + 10;
    m_ = ((std::max(window, K + bs_) + bs_ - 1) / bs_) * bs_;
    SparseMatrix shifted = A - opts.shift * B;
    shifted.makeCompressed();
    ldlt_.compute(shifted);
    if (ldlt_.info() != Eigen::Success)
    {
      throw NumericalError("factorization of the shifted operator failed; the shift may "
                           "coincide with an eigenvalue");
    }
    if (opts.deflation_gradient)
    {
      G_ = *opts.deflation_gradient;
      BG_ = B * G_;
      SparseMatrix GtBG = G_.transpose() * BG_;
      gram_.compute(GtBG);
      if (gram_.info() != Eigen::Success)
      {
        throw NumericalError("gradient Gram matrix is singular");
      }
    }
  }

  int window() const { return m_; }
  int block_size() const { return bs_; }

  EigenSolution run()
  {
    const int cols = m_ + bs_;
    V_.setZero(n_, cols);
    BV_.setZero(n_, cols);
    T_.setZero(cols, cols);

    Matrix start(n_, bs_);
    fill_random(start);
    deflate(start);
    Matrix Bstart = B_ * start;
    append_block(start, Bstart, 0, nullptr, b_norms(start, Bstart));
    int processed = 0;  // columns whose OP image has been orthogonalized
    int basis = bs_;    // B-orthonormal columns available

    EigenSolution sol;
    for (int restart = 0;; restart++)
    {
      while (basis + bs_ <= cols)
      {
        expand(processed, basis);
        processed = basis;
        basis += bs_;
      }
      // Rayleigh-Ritz on the processed part; its upper triangle holds <v_i, OP v_j>_B.
      const int p = processed;
      Matrix S = T_.topLeftCorner(p, p).triangularView<Eigen::Upper>();
      S.triangularView<Eigen::StrictlyLower>() = S.transpose();
      Eigen::SelfAdjointEigenSolver<Matrix> es(S);
      const Vector theta = es.eigenvalues();  // ascending; wanted are at the back
      const Matrix &Y = es.eigenvectors();
      const Matrix coupling = T_.block(p, 0, bs_, p) * Y;

      bool converged = true;
      for (int i = 0; i < K_; i++)
      {
        const Index c = p - 1 - i;
        if (!(theta[c] > 0.0) || coupling.col(c).norm() > opts_.tol * std::abs(theta[c]))
        {
          converged = false;
          break;
        }
      }
      sol.stats.restarts = restart;
      if (converged)
      {
        check_below_shift(theta, coupling);
        finalize(theta, Y, p, sol);
        return sol;
      }
      if (restart >= opts_.max_restarts)
      {
        throw ConvergenceError("shift-invert Lanczos did not converge within " +
                               std::to_string(opts_.max_restarts) + " restarts");
      }

      // Thick restart: keep the k most wanted Ritz vectors and the trailing residual block.
      const int k = std::min(p - bs_, std::max(K_ + bs_, (p + K_) / 2));
      const Matrix Yk = Y.rightCols(k);
      const Matrix Vk = V_.leftCols(p) * Yk;
      const Matrix BVk = BV_.leftCols(p) * Yk;
      const Matrix Vres = V_.middleCols(p, bs_);
      const Matrix BVres = BV_.middleCols(p, bs_);
      V_.leftCols(k) = Vk;
      BV_.leftCols(k) = BVk;
      V_.middleCols(k, bs_) = Vres;
      BV_.middleCols(k, bs_) = BVres;
      T_.setZero();
      T_.topLeftCorner(k, k).diagonal() = theta.tail(k);
      T_.block(k, 0, bs_, k) = coupling.rightCols(k);
      T_.block(0, k, k, bs_) = coupling.rightCols(k).transpose();
      processed = k;
      basis = k + bs_;
    }
  }

  int applications() const { return applications_; }

private:
  void fill_random(Matrix &X)
  {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (Index j = 0; j < X.cols(); j++)
    {
      for (Index i = 0; i < X.rows(); i++)
      {
        X(i, j) = dist(rng_);
      }
    }
  }

  void deflate(Matrix &X) const
  {
    if (G_.cols() == 0)
    {
      return;
    }
    const Matrix coef = gram_.solve(Matrix(BG_.transpose() * X));
    X -= G_ * coef;
  }

  // Apply OP to columns [first, last) and orthogonalize the result into a new block.
  void expand(int first, int last)
  {
    Matrix W = ldlt_.solve(Matrix(BV_.middleCols(first, last - first)));
    applications_ += last - first;
    deflate(W);
    Matrix BW = B_ * W;
    const Vector reference = b_norms(W, BW);
    Matrix C = Matrix::Zero(last, bs_);
    for (int pass = 0; pass < 2; pass++)
    {
      const Matrix c = BV_.leftCols(last).transpose() * W;
      W.noalias() -= V_.leftCols(last) * c;
      BW.noalias() -= BV_.leftCols(last) * c;
      C += c;
    }
    T_.block(0, first, last, bs_) = C;
    Matrix R = Matrix::Zero(bs_, bs_);
    append_block(W, BW, last, &R, reference);
    T_.block(last, first, bs_, bs_) = R;
  }

  static Vector b_norms(const Matrix &W, const Matrix &BW)
  {
    return W.cwiseProduct(BW).colwise().sum().cwiseMax(0.0).cwiseSqrt().transpose();
  }

  // B-orthonormalize the columns of W against V[0, at) and each other, storing them at
  // column `at`. A column whose norm collapses below 1e-8 of its reference (an invariant
  // subspace was found) is replaced by a fresh random direction with zero coupling.
  void append_block(Matrix &W, Matrix &BW, int at, Matrix *R, const Vector &reference)
  {
    for (int j = 0; j < bs_; j++)
    {
      Vector w = W.col(j), bw = BW.col(j);
      const int known = at + j;
      const double original = reference[j];
      double nrm = orthogonalize(w, bw, known, at, R, j);
      if (!(nrm > 1.0e-8 * original))
      {
        // Breakdown: continue with a random direction orthogonal to everything so far.
        for (int attempt = 0; attempt < 3; attempt++)
        {
          Matrix rnd(n_, 1);
          fill_random(rnd);
          deflate(rnd);
          w = rnd.col(0);
          bw = B_ * w;
          const double scale = std::sqrt(std::max(0.0, w.dot(bw)));
          nrm = orthogonalize(w, bw, known, at, nullptr, 0);
          if (nrm > 1.0e-8 * scale)
          {
            break;
          }
        }
        if (R)
        {
          (*R)(j, j) = 0.0;
        }
      }
      else if (R)
      {
        (*R)(j, j) = nrm;
      }
      V_.col(at + j) = w / nrm;
      BV_.col(at + j) = bw / nrm;
    }
  }

  // Project w against V[0, known), repeating while the norm drops sharply, then refresh
  // B * w so that cancellation does not leak into BV. Coefficients on columns at and beyond
  // `at` are accumulated into column j of R. Returns the B-norm of the remainder.
  double orthogonalize(Vector &w, Vector &bw, int known, int at, Matrix *R, int j)
  {
    double nrm = std::sqrt(std::max(0.0, w.dot(bw)));
    for (int pass = 0; pass < 4 && known > 0; pass++)
    {
      const Vector c = BV_.leftCols(known).transpose() * w;
      w.noalias() -= V_.leftCols(known) * c;
      bw.noalias() -= BV_.leftCols(known) * c;
      if (R)
      {
        for (int i = at; i < known; i++)
        {
          (*R)(i - at, j) += c[i];
        }
      }
      const double next = std::sqrt(std::max(0.0, w.dot(bw)));
      const bool settled = next > 0.7 * nrm;
      nrm = next;
      if (settled && pass > 0)
      {
        break;
      }
    }
    bw = B_ * w;
    return std::sqrt(std::max(0.0, w.dot(bw)));
  }

  // Converged Ritz values with lambda in (lambda_cut, shift) are physical modes the shift
  // placement would silently skip.
  void check_below_shift(const Vector &theta, const Matrix &coupling) const
  {
    if (!(opts_.shift > opts_.lambda_cut))
    {
      return;
    }
    const double limit = -1.0 / (opts_.shift - opts_.lambda_cut);
    for (Index i = 0; i < theta.size(); i++)
    {
      if (theta[i] < limit && coupling.col(i).norm() <= opts_.tol * std::abs(theta[i]))
      {
        throw ConvergenceError("a physical eigenvalue lies below the shift; lower the shift");
      }
    }
  }

  void finalize(const Vector &theta, const Matrix &Y, int p, EigenSolution &sol) const
  {
    sol.values.resize(K_);
    sol.vectors.resize(n_, K_);
    for (int i = 0; i < K_; i++)
    {
      const Index c = p - 1 - i;
      sol.values[i] = opts_.shift + 1.0 / theta[c];
      Vector v = V_.leftCols(p) * Y.col(c);
      const Vector Bv = BV_.leftCols(p) * Y.col(c);
      v /= std::sqrt(v.dot(Bv));
      sol.vectors.col(i) = v;
    }
  }

  const SparseMatrix &B_;
  int K_;
  SparseEigenOptions opts_;
  Index n_;
  int bs_ = 1, m_ = 0;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<Index>> ldlt_;
  SparseMatrix G_, BG_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<Index>> gram_;
  Matrix V_, BV_, T_;
  std::mt19937_64 rng_;
  int applications_ = 0;
};

}  // namespace

EigenSolution solve_sparse_gevp(const SparseMatrix &A, const SparseMatrix &B, int K,
                                const SparseEigenOptions &opts)
{
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
  {
    throw UsageError("sparse eigenproblem requires square matrices of equal size");
  }
  if (K < 0)
  {
    throw UsageError("requested mode count must be non-negative");
  }
  if (!(opts.lambda_cut >= 0.0))
  {
    throw UsageError("lambda_cut must be non-negative");
  }
  EigenSolution sol;
  const Index n = static_cast<Index>(A.rows());
  if (K == 0)
  {
    sol.values.resize(0);
    sol.vectors.resize(n, 0);
    return sol;
  }
  const int bs = std::max(1, opts.block_size);
  const int window = opts.window > 0 ? opts.window : 2 * K + 10;
  const int cols = ((std::max(window, K + bs) + bs - 1) / bs) * bs + bs;
  if (n <= cols)
  {
    sol = select_above_cut(dense_oracle(A, B), K, opts.lambda_cut);
    return sol;
  }
  if (!(opts.shift > opts.lambda_cut))
  {
    throw UsageError("shift must exceed lambda_cut");
  }
  ShiftInvertLanczos lanczos(A, B, K, opts);
  sol = lanczos.run();
  sol.stats.operator_applications = lanczos.applications();
  // Ritz values come out in descending 1/(lambda - shift), i.e. ascending lambda, except
  // for ties which we order explicitly.
  std::vector<Index> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return sol.values[a] < sol.values[b]; });
  EigenSolution sorted;
  sorted.values.resize(K);
  sorted.vectors.resize(n, K);
  for (int i = 0; i < K; i++)
  {
    sorted.values[i] = sol.values[order[i]];
    sorted.vectors.col(i) = sol.vectors.col(order[i]);
  }
  sorted.stats = sol.stats;
  sorted.residual_norms = residual_norms(A, B, sorted.values, sorted.vectors);
  for (int i = 0; i < K; i++)
  {
    if (!(sorted.values[i] > opts.lambda_cut))
    {
      throw ConvergenceError("converged eigenvalue below lambda_cut");
    }
  }
  return sorted;
}

}  // namespace mrb
