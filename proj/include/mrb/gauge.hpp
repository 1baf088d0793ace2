// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_GAUGE_HPP
#define MRB_GAUGE_HPP

#include <memory>
#include <vector>
#include "mrb/assembly.hpp"
#include "mrb/eigensolvers.hpp"
#include "mrb/instrument.hpp"
#include "mrb/mesh.hpp"

namespace mrb
{

// Spanning tree of the free-edge graph (with all boundary vertices collapsed into one
// root) and its complement. The tree holds one edge per interior vertex, so restricting
// the unknowns to the cotree removes the gradient nullspace.
struct GaugeDecomposition
{
  // Tree edges (free-edge indices) in BFS discovery order; tree[k] discovered
  // parent_order[k].
  std::vector<Index> tree;
  // Cotree edges, ascending.
  std::vector<Index> cotree;
  // Interior vertex indices in BFS discovery order.
  std::vector<Index> parent_order;
  Index num_dofs = 0;
  // |C| x N row selector onto the cotree edges.
  SparseMatrix cotree_selector;

  Index tree_size() const { return static_cast<Index>(tree.size()); }
  Index cotree_size() const { return static_cast<Index>(cotree.size()); }
};

GaugeDecomposition build_tree(const CavityMesh &mesh, const DiscreteGradient &grad);

// Rows T of G (in tree order) restricted to columns in BFS order. Lower triangular with
// +-1 diagonal.
Matrix tree_gradient_block(const GaugeDecomposition &gauge, const DiscreteGradient &grad);

// H = rows C of A, |C| x N, columns in the global DoF order.
SparseMatrix cotree_operator(const SystemPair &sys, const GaugeDecomposition &gauge);

// Dense gauged pencil obtained by the congruence with H B^-1.
struct CotreeSystem
{
  Matrix A_hat, B_hat;
};

CotreeSystem build_cotree_system(const SystemPair &sys, const GaugeDecomposition &gauge,
                                 StorageMeter *meter = nullptr);

struct CotreeProjection
{
  Matrix v_hat;
  // ||H^T v_hat - B v|| / ||B v|| per column.
  std::vector<double> residuals;
};

// Variable transformations between the full edge space and cotree coordinates at one
// parameter value: v = B^-1 H^T v_hat and its least-squares inverse.
class CotreeTransform
{
public:
  // Uses H = rows C of sys.A unless a frozen H (e.g. taken at t = 0) is supplied.
  CotreeTransform(const SystemPair &sys, const GaugeDecomposition &gauge,
                  const SparseMatrix *frozen_H = nullptr);
  CotreeTransform(CotreeTransform &&) noexcept;
  CotreeTransform &operator=(CotreeTransform &&) noexcept;
  ~CotreeTransform();

  const SparseMatrix &H() const { return H_; }
  const SparseMatrix &A() const { return A_; }
  const SparseMatrix &B() const { return B_; }
  // Cholesky factor of B, computed on first use.
  const SpdFactor &mass_factor() const;

  Matrix upscale(const Matrix &v_hat) const;

  // Minimum-norm least-squares solution of H^T v_hat = B v per column, via a sparse QR of
  // H^T factored on first use. Throws ProjectionError if any column's consistency residual
  // exceeds `tolerance`.
  CotreeProjection project(const Matrix &v, double tolerance = 1.0e-6) const;

private:
  struct QrCache;
  SparseMatrix A_, B_, H_;
  mutable std::unique_ptr<SpdFactor> factor_;
  mutable std::unique_ptr<QrCache> qr_;
};

// Cotree system of the pencil held by `transform`, using its (possibly frozen) H.
CotreeSystem build_cotree_system(const CotreeTransform &transform,
                                 StorageMeter *meter = nullptr);

Vector upscale(const GaugeDecomposition &gauge, const SystemPair &sys, const Vector &v_hat);
CotreeProjection project_to_cotree(const GaugeDecomposition &gauge, const SystemPair &sys,
                                   const Matrix &v, double tolerance = 1.0e-6);

}  // namespace mrb

#endif  // MRB_GAUGE_HPP
