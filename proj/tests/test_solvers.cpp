// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <numbers>
#include <random>
#include "mrb/assembly.hpp"
#include "mrb/eigensolvers.hpp"
#include "support.hpp"

using namespace mrb;

namespace
{

// Random sparse SPD matrix: diagonally dominant with a random pattern.
SparseMatrix random_spd(Index n, double density, std::mt19937_64 &rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  std::vector<Triplet> trips;
  Vector diag = Vector::Constant(n, 1.0);
  for (Index j = 0; j < n; j++)
  {
    for (Index i = j + 1; i < n; i++)
    {
      if (coin(rng) < density)
      {
        const double v = u(rng);
        trips.emplace_back(i, j, v);
        trips.emplace_back(j, i, v);
        diag[i] += std::abs(v);
        diag[j] += std::abs(v);
      }
    }
  }
  for (Index i = 0; i < n; i++)
  {
    trips.emplace_back(i, i, diag[i]);
  }
  SparseMatrix M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

double column_residual(const SparseMatrix &M, const Matrix &X, const Matrix &R)
{
  double worst = 0.0;
  const Matrix D = M * X - R;
  for (Index j = 0; j < R.cols(); j++)
  {
    worst = std::max(worst, D.col(j).norm() / R.col(j).norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("sparse Cholesky solves")
{
  std::mt19937_64 rng(3);
  SUBCASE("identity")
  {
    SparseMatrix I(4, 4);
    I.setIdentity();
    const Matrix x = solve_spd(factorize(I), Matrix::Identity(4, 1));
    CHECK((x - Matrix::Identity(4, 1)).norm() == 0.0);
  }
  SUBCASE("random SPD matrices of several sizes and densities")
  {
    for (Index n : {1, 7, 50, 200})
    {
      for (double density : {0.02, 0.2, 1.0})
      {
        const SparseMatrix M = random_spd(n, density, rng);
        const Matrix R = test::random_matrix(n, 3, rng);
        CHECK(column_residual(M, solve_spd(factorize(M), R), R) <= 1e-12);
      }
    }
  }
  SUBCASE("mass matrix with coordinate right-hand sides")
  {
    const SystemPair sys = assemble(build_mesh({1, 1, 1}, {3, 3, 3}));
    const Index n = sys.size();
    REQUIRE(n == 36);
    const Matrix R = Matrix::Identity(n, n);
    CHECK(column_residual(sys.B, solve_spd(factorize(sys.B), R), R) <= 1e-12);
  }
  SUBCASE("refactorization and in-place solves agree")
  {
    const CavityMesh mesh = build_mesh({1, 1.1, 1.2}, {5, 4, 6});
    const CavityMesh mesh1 = build_mesh({1, 1.1, 0.6}, {5, 4, 6});
    const ParametrizedSystem sys(assemble(mesh), assemble(mesh1, bulged_vertices(mesh1, 0.3)));
    SpdFactor factor;
    CHECK(factor.empty());
    for (double t : {0.0, 0.3, 1.0})
    {
      const SparseMatrix B = sys.interpolate(t).B;
      factor.factorize(B);
      const Matrix R = test::random_matrix(B.rows(), 7, rng);
      const Matrix X = factor.solve(R);
      CHECK(column_residual(B, X, R) <= 1e-12);
      RowMatrix Y = R;
      factor.solve_in_place(Y);
      CHECK((Matrix(Y) - X).norm() <= 1e-14 * X.norm());
    }
  }
  SUBCASE("indefinite input is rejected")
  {
    SparseMatrix M = random_spd(20, 0.3, rng);
    M.coeffRef(5, 5) = -1.0;
    CHECK_THROWS_AS(factorize(M), NotSpdError);
  }
}

TEST_CASE("dense generalized solver")
{
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1;
  A(1, 1) = 2;
  const EigenSolution a = solve_dense_gevp(A, Matrix::Identity(2, 2));
  CHECK(a.values[0] == doctest::Approx(1.0));
  CHECK(a.values[1] == doctest::Approx(2.0));
  const EigenSolution b = solve_dense_gevp(A, 2.0 * Matrix::Identity(2, 2));
  CHECK(b.values[0] == doctest::Approx(0.5));
  CHECK(b.values[1] == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  for (Index n : {3, 20, 60})
  {
    const Matrix X = test::random_matrix(n, n, rng);
    const Matrix Y = test::random_matrix(n, n, rng);
    const Matrix S = X * X.transpose() + Matrix::Identity(n, n);
    const Matrix T = (Y + Y.transpose()) * 0.5;
    const EigenSolution full = solve_dense_gevp(T, S);
    for (int count : {1, 3, static_cast<int>(n)})
    {
      const EigenSolution part = solve_dense_gevp(T, S, count);
      REQUIRE(part.size() == count);
      for (int i = 0; i < count; i++)
      {
        CHECK(std::abs(part.values[i] - full.values[i]) <= 1e-10 * full.values.cwiseAbs().maxCoeff());
        const double bn = part.vectors.col(i).dot(S * part.vectors.col(i));
        CHECK(bn == doctest::Approx(1.0).epsilon(1e-10));
      }
    }
  }
  CHECK_THROWS_AS(solve_dense_gevp(A, -Matrix::Identity(2, 2)), NotSpdError);
}

TEST_CASE("sparse shift-invert Lanczos matches the dense oracle")
{
  for (const Point &dims : {Point{1, 1, 1}, Point{1, 1.1, 1.2}})
  {
    for (Index n : {2, 3, 5})
    {
      const CavityMesh mesh = build_mesh(dims, {n, n, n});
      const SystemPair sys = assemble(mesh);
      const double cut = 0.1 * analytic_brick_eigenvalues(dims, 1)[0];
      const auto reference = test::nonzero_spectrum(sys.A, sys.B, cut);
      SparseEigenOptions opts;
      opts.shift = 9.0 * cut;
      opts.lambda_cut = cut;
      const int K = std::min<int>(5, static_cast<int>(reference.size()));
      const EigenSolution sol = solve_sparse_gevp(sys.A, sys.B, K, opts);
      REQUIRE(sol.size() == K);
      for (int i = 0; i < K; i++)
      {
        CHECK(test::rel_diff(sol.values[i], reference[static_cast<std::size_t>(i)]) <= 1e-8);
        CHECK(sol.values[i] > cut);
        if (i > 0)
        {
          CHECK(sol.values[i] >= sol.values[i - 1]);
        }
        CHECK(sol.residual_norms[i] <=
              1e-8 * (norm1(sys.A) + std::abs(sol.values[i]) * norm1(sys.B)));
      }
      const Matrix gram = sol.vectors.transpose() * (sys.B * sol.vectors);
      CHECK((gram - Matrix::Identity(K, K)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("sparse solver edge cases")
{
  const SystemPair sys = assemble(build_mesh({1, 1, 1}, {8, 8, 8}));
  SparseEigenOptions opts;
  opts.shift = 15.0;
  opts.lambda_cut = 10.0;
  CHECK(solve_sparse_gevp(sys.A, sys.B, 0, opts).size() == 0);
  const EigenSolution sol = solve_sparse_gevp(sys.A, sys.B, 5, opts);
  const double exact = 2.0 * std::numbers::pi * std::numbers::pi;
  for (int i = 0; i < 3; i++)
  {
    CHECK(test::rel_diff(sol.values[i], exact) < 0.05);
  }
  CHECK(test::rel_diff(sol.values[2], sol.values[0]) < 1e-8);

  SparseEigenOptions deflated = opts;
  const DiscreteGradient grad = discrete_gradient(build_mesh({1, 1, 1}, {8, 8, 8}));
  deflated.deflation_gradient = &grad.G;
  const EigenSolution dsol = solve_sparse_gevp(sys.A, sys.B, 5, deflated);
  for (int i = 0; i < 5; i++)
  {
    CHECK(test::rel_diff(dsol.values[i], sol.values[i]) < 1e-9);
  }

  SparseEigenOptions bad = opts;
  bad.shift = 5.0;
  CHECK_THROWS_AS(solve_sparse_gevp(sys.A, sys.B, 3, bad), UsageError);
  CHECK_THROWS_AS(solve_sparse_gevp(sys.A, sys.B, -1, opts), UsageError);
}
