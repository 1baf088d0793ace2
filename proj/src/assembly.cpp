// SPDX-License-Identifier: Apache-2.0

#include "mrb/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include "mrb/error.hpp"

namespace mrb
{

namespace
{

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using ElementMatrix = Eigen::Matrix<double, 12, 12>;

// 1D linear factors on [0,1] and their derivatives.
inline double lin(int a, double s) { return a ? s : 1.0 - s; }
inline double dlin(int a) { return a ? 1.0 : -1.0; }

// Reference edge functions and their curls at a point of the unit cube, in the local edge
// order of CavityMesh::Cell.
void reference_edge_basis(const Vec3 &xi, std::array<Vec3, 12> &shape,
                          std::array<Vec3, 12> &curl)
{
  const double x = xi[0], y = xi[1], z = xi[2];
  for (int a = 0; a < 2; a++)
  {
    for (int b = 0; b < 2; b++)
    {
      const int l = a + 2 * b;
      shape[l] = Vec3(lin(a, y) * lin(b, z), 0.0, 0.0);
      curl[l] = Vec3(0.0, lin(a, y) * dlin(b), -dlin(a) * lin(b, z));

      shape[4 + l] = Vec3(0.0, lin(a, x) * lin(b, z), 0.0);
      curl[4 + l] = Vec3(-lin(a, x) * dlin(b), 0.0, dlin(a) * lin(b, z));

      shape[8 + l] = Vec3(0.0, 0.0, lin(a, x) * lin(b, y));
      curl[8 + l] = Vec3(lin(a, x) * dlin(b), -dlin(a) * lin(b, y), 0.0);
    }
  }
}

Mat3 jacobian(const std::array<Vec3, 8> &xv, const Vec3 &xi)
{
  Mat3 J = Mat3::Zero();
  for (int c = 0; c < 8; c++)
  {
    const int i = c & 1, j = (c >> 1) & 1, k = (c >> 2) & 1;
    const Vec3 dN(dlin(i) * lin(j, xi[1]) * lin(k, xi[2]),
                  lin(i, xi[0]) * dlin(j) * lin(k, xi[2]),
                  lin(i, xi[0]) * lin(j, xi[1]) * dlin(k));
    J += xv[c] * dN.transpose();
  }
  return J;
}

void element_matrices(const std::array<Vec3, 8> &xv, Index cell, ElementMatrix &Ae,
                      ElementMatrix &Be)
{
  const double g = 0.5 / std::sqrt(3.0);
  const std::array<double, 2> gauss = {0.5 - g, 0.5 + g};
  Ae.setZero();
  Be.setZero();
  std::array<Vec3, 12> shape, curl, phys_shape, phys_curl;
  for (double qz : gauss)
  {
    for (double qy : gauss)
    {
      for (double qx : gauss)
      {
        const Vec3 xi(qx, qy, qz);
        const Mat3 J = jacobian(xv, xi);
        const double det = J.determinant();
        if (!(det > 0.0))
        {
          throw NumericalError("degenerate cell " + std::to_string(cell) +
                               ": non-positive Jacobian determinant");
        }
        const Mat3 Jinv_t = J.inverse().transpose();
        reference_edge_basis(xi, shape, curl);
        for (int l = 0; l < 12; l++)
        {
          phys_shape[l] = Jinv_t * shape[l];
          phys_curl[l] = J * curl[l] / det;
        }
        // Unit weights on [0,1]^3 are 1/8 each.
        const double w = 0.125 * det;
        for (int l = 0; l < 12; l++)
        {
          for (int m = l; m < 12; m++)
          {
            Ae(l, m) += w * phys_curl[l].dot(phys_curl[m]);
            Be(l, m) += w * phys_shape[l].dot(phys_shape[m]);
          }
        }
      }
    }
  }
  Ae.triangularView<Eigen::StrictlyLower>() = Ae.transpose();
  Be.triangularView<Eigen::StrictlyLower>() = Be.transpose();
}

SparseMatrix symmetrized(const SparseMatrix &M)
{
  SparseMatrix S = 0.5 * (M + SparseMatrix(M.transpose()));
  S.makeCompressed();
  return S;
}

}  // namespace

SystemPair assemble(const CavityMesh &mesh) { return assemble(mesh, mesh.vertices()); }

SystemPair assemble(const CavityMesh &mesh, std::span<const Point> coords)
{
  if (static_cast<Index>(coords.size()) != mesh.num_vertices())
  {
    throw UsageError("coordinate count does not match the mesh vertex count");
  }
  const Index n = mesh.num_free_edges();
  if (n < 1)
  {
    throw UsageError("mesh has no free edges; refine to at least two cells per axis");
  }
  const auto &dof = mesh.free_edge_index();
  std::vector<Triplet> ta, tb;
  ta.reserve(144 * static_cast<std::size_t>(mesh.num_cells()));
  tb.reserve(ta.capacity());
  ElementMatrix Ae, Be;
  std::array<Vec3, 8> xv;
  for (Index c = 0; c < mesh.num_cells(); c++)
  {
    const auto &cell = mesh.cells()[c];
    for (int v = 0; v < 8; v++)
    {
      const auto &p = coords[cell.vertices[v]];
      xv[v] = Vec3(p[0], p[1], p[2]);
    }
    element_matrices(xv, c, Ae, Be);
    for (int l = 0; l < 12; l++)
    {
      const Index row = dof[cell.edges[l]];
      if (row < 0)
      {
        continue;
      }
      for (int m = 0; m < 12; m++)
      {
        const Index col = dof[cell.edges[m]];
        if (col < 0)
        {
          continue;
        }
        ta.emplace_back(row, col, Ae(l, m));
        tb.emplace_back(row, col, Be(l, m));
      }
    }
  }
  SystemPair sys;
  SparseMatrix A(n, n), B(n, n);
  A.setFromTriplets(ta.begin(), ta.end());
  B.setFromTriplets(tb.begin(), tb.end());
  sys.A = symmetrized(A);
  sys.B = symmetrized(B);
  const auto &d = mesh.dims();
  sys.geometry_tag = "brick " + std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" +
                     std::to_string(d[2]);
  return sys;
}

namespace
{

// Bring M onto the union pattern of M and other, keeping M's values.
SparseMatrix on_union_pattern(const SparseMatrix &M, const SparseMatrix &other)
{
  SparseMatrix U = M + 0.0 * other;
  U.makeCompressed();
  return U;
}

bool same_pattern(const SparseMatrix &X, const SparseMatrix &Y)
{
  return X.nonZeros() == Y.nonZeros() &&
         std::equal(X.outerIndexPtr(), X.outerIndexPtr() + X.outerSize() + 1,
                    Y.outerIndexPtr()) &&
         std::equal(X.innerIndexPtr(), X.innerIndexPtr() + X.nonZeros(), Y.innerIndexPtr());
}

}  // namespace

ParametrizedSystem::ParametrizedSystem(SystemPair endpoint0, SystemPair endpoint1)
{
  const Index n = endpoint0.size();
  if (endpoint1.size() != n || endpoint0.B.rows() != n || endpoint1.B.rows() != n ||
      endpoint0.A.cols() != n || endpoint1.A.cols() != n)
  {
    throw UsageError("parametrized system endpoints have mismatched dimensions");
  }
  end0_.geometry_tag = std::move(endpoint0.geometry_tag);
  end1_.geometry_tag = std::move(endpoint1.geometry_tag);
  // Both A and B share one union pattern so that interpolate() is a pure value blend.
  const SparseMatrix pattern = endpoint0.A.cwiseAbs() + endpoint0.B.cwiseAbs() +
                               endpoint1.A.cwiseAbs() + endpoint1.B.cwiseAbs();
  end0_.A = on_union_pattern(endpoint0.A, pattern);
  end0_.B = on_union_pattern(endpoint0.B, pattern);
  end1_.A = on_union_pattern(endpoint1.A, pattern);
  end1_.B = on_union_pattern(endpoint1.B, pattern);
  if (!same_pattern(end0_.A, end1_.A) || !same_pattern(end0_.A, end0_.B) ||
      !same_pattern(end0_.B, end1_.B))
  {
    throw NumericalError("failed to build a common sparsity pattern for interpolation");
  }
}

SystemPair ParametrizedSystem::interpolate(double t) const
{
  if (!(t >= 0.0 && t <= 1.0))
  {
    throw UsageError("interpolation parameter t must lie in [0, 1]");
  }
  if (t == 0.0)
  {
    return end0_;
  }
  if (t == 1.0)
  {
    return end1_;
  }
  SystemPair out = end0_;
  out.geometry_tag = "interpolated t=" + std::to_string(t);
  const Index nnz = static_cast<Index>(end0_.A.nonZeros());
  const double *a0 = end0_.A.valuePtr(), *a1 = end1_.A.valuePtr();
  const double *b0 = end0_.B.valuePtr(), *b1 = end1_.B.valuePtr();
  double *a = out.A.valuePtr(), *b = out.B.valuePtr();
  for (Index k = 0; k < nnz; k++)
  {
    a[k] = (1.0 - t) * a0[k] + t * a1[k];
    b[k] = (1.0 - t) * b0[k] + t * b1[k];
  }
  return out;
}

SystemPair interpolate(const ParametrizedSystem &sys, double t) { return sys.interpolate(t); }

std::vector<double> analytic_brick_eigenvalues(const Point &dims, int count)
{
  std::vector<double> values;
  if (count <= 0)
  {
    return values;
  }
  // A mode with index m along one axis is preceded by the m-1 modes with smaller index
  // there, so indices beyond count+1 never enter the first `count` values.
  const int range = count + 1;
  for (int m = 0; m <= range; m++)
  {
    for (int n = 0; n <= range; n++)
    {
      for (int p = 0; p <= range; p++)
      {
        const int zeros = (m == 0) + (n == 0) + (p == 0);
        if (zeros > 1)
        {
          continue;
        }
        const double lambda =
            std::numbers::pi * std::numbers::pi *
            (m * m / (dims[0] * dims[0]) + n * n / (dims[1] * dims[1]) +
             p * p / (dims[2] * dims[2]));
        values.push_back(lambda);
        if (zeros == 0)
        {
          values.push_back(lambda);
        }
      }
    }
  }
  std::sort(values.begin(), values.end());
  values.resize(std::min<std::size_t>(values.size(), static_cast<std::size_t>(count)));
  return values;
}

}  // namespace mrb
