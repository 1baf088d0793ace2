// SPDX-License-Identifier: Apache-2.0

#include "mrb/gauge.hpp"

#include <deque>
#include <Eigen/SparseQR>
#include "mrb/error.hpp"

namespace mrb
{

GaugeDecomposition build_tree(const CavityMesh &mesh, const DiscreteGradient &grad)
{
  const Index n = mesh.num_free_edges();
  if (grad.G.rows() != n || grad.G.cols() != mesh.num_interior_vertices())
  {
    throw UsageError("discrete gradient does not belong to this mesh");
  }
  // Vertex -> incident free edges, ascending by edge index.
  std::vector<std::vector<Index>> incident(static_cast<std::size_t>(mesh.num_vertices()));
  for (Index f = 0; f < n; f++)
  {
    const auto &[tail, head] = mesh.edges()[mesh.free_edges()[f]];
    incident[tail].push_back(f);
    incident[head].push_back(f);
  }

  GaugeDecomposition gauge;
  gauge.num_dofs = n;
  std::vector<bool> visited(mesh.boundary_vertex());
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::deque<Index> queue;
  for (Index v = 0; v < mesh.num_vertices(); v++)
  {
    if (visited[v])
    {
      queue.push_back(v);
    }
  }
  while (!queue.empty())
  {
    const Index u = queue.front();
    queue.pop_front();
    for (Index f : incident[u])
    {
      const auto &[tail, head] = mesh.edges()[mesh.free_edges()[f]];
      const Index w = (tail == u) ? head : tail;
      if (visited[w])
      {
        continue;
      }
      visited[w] = true;
      in_tree[f] = true;
      gauge.tree.push_back(f);
      gauge.parent_order.push_back(mesh.interior_vertex_index()[w]);
      queue.push_back(w);
    }
  }
  if (gauge.tree_size() != mesh.num_interior_vertices())
  {
    throw NumericalError("interior vertex not connected to the boundary; cannot build tree");
  }
  std::vector<Triplet> sel;
  for (Index f = 0; f < n; f++)
  {
    if (!in_tree[f])
    {
      sel.emplace_back(gauge.cotree_size(), f, 1.0);
      gauge.cotree.push_back(f);
    }
  }
  gauge.cotree_selector.resize(gauge.cotree_size(), n);
  gauge.cotree_selector.setFromTriplets(sel.begin(), sel.end());
  return gauge;
}

Matrix tree_gradient_block(const GaugeDecomposition &gauge, const DiscreteGradient &grad)
{
  const Matrix G(grad.G);
  const Index nv = gauge.tree_size();
  Matrix GT(nv, nv);
  for (Index r = 0; r < nv; r++)
  {
    for (Index c = 0; c < nv; c++)
    {
      GT(r, c) = G(gauge.tree[r], gauge.parent_order[c]);
    }
  }
  return GT;
}

SparseMatrix cotree_operator(const SystemPair &sys, const GaugeDecomposition &gauge)
{
  if (sys.size() != gauge.num_dofs)
  {
    throw UsageError("system size does not match the gauge decomposition");
  }
  SparseMatrix H = gauge.cotree_selector * sys.A;
  H.makeCompressed();
  return H;
}

CotreeSystem build_cotree_system(const SystemPair &sys, const GaugeDecomposition &gauge,
                                 StorageMeter *meter)
{
  return build_cotree_system(CotreeTransform(sys, gauge), meter);
}

CotreeSystem build_cotree_system(const CotreeTransform &transform, StorageMeter *meter)
{
  const SparseMatrix &H = transform.H();
  const Index n = static_cast<Index>(H.cols()), nc = static_cast<Index>(H.rows());
  StorageMeter::Lease lease_x(meter, static_cast<std::int64_t>(n) * nc);
  // X = B^-1 H^T, so that A_hat = X^T A X and B_hat = X^T B X = H X.
  const Matrix X = transform.mass_factor().solve(Matrix(H.transpose()));
  StorageMeter::Lease lease_hat(meter, 2 * static_cast<std::int64_t>(nc) * nc);
  CotreeSystem cs;
  cs.A_hat = X.transpose() * (transform.A() * X);
  cs.B_hat = H * X;
  cs.A_hat = 0.5 * (cs.A_hat + cs.A_hat.transpose()).eval();
  cs.B_hat = 0.5 * (cs.B_hat + cs.B_hat.transpose()).eval();
  return cs;
}

struct CotreeTransform::QrCache
{
  Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<Index>> qr;
};

CotreeTransform::CotreeTransform(const SystemPair &sys, const GaugeDecomposition &gauge,
                                 const SparseMatrix *frozen_H)
  : A_(sys.A), B_(sys.B)
{
  if (sys.size() != gauge.num_dofs)
  {
    throw UsageError("system size does not match the gauge decomposition");
  }
  if (frozen_H)
  {
    if (frozen_H->rows() != gauge.cotree_size() || frozen_H->cols() != sys.size())
    {
      throw UsageError("frozen cotree operator has wrong dimensions");
    }
    H_ = *frozen_H;
  }
  else
  {
    H_ = cotree_operator(sys, gauge);
  }
}

CotreeTransform::CotreeTransform(CotreeTransform &&) noexcept = default;
CotreeTransform &CotreeTransform::operator=(CotreeTransform &&) noexcept = default;
CotreeTransform::~CotreeTransform() = default;

const SpdFactor &CotreeTransform::mass_factor() const
{
  if (!factor_)
  {
    factor_ = std::make_unique<SpdFactor>(B_);
  }
  return *factor_;
}

Matrix CotreeTransform::upscale(const Matrix &v_hat) const
{
  if (v_hat.rows() != H_.rows())
  {
    throw UsageError("cotree vector has wrong dimension");
  }
  return mass_factor().solve(Matrix(H_.transpose() * v_hat));
}

CotreeProjection CotreeTransform::project(const Matrix &v, double tolerance) const
{
  if (v.rows() != B_.rows())
  {
    throw UsageError("full vector has wrong dimension");
  }
  if (!qr_)
  {
    qr_ = std::make_unique<QrCache>();
    SparseMatrix Ht = H_.transpose();
    Ht.makeCompressed();
    qr_->qr.compute(Ht);
    if (qr_->qr.info() != Eigen::Success)
    {
      qr_.reset();
      throw NumericalError("sparse QR of the cotree operator failed");
    }
  }
  const Matrix rhs = B_ * v;
  CotreeProjection out;
  out.v_hat = qr_->qr.solve(rhs);
  const Matrix fit = H_.transpose() * out.v_hat - rhs;
  for (Index j = 0; j < v.cols(); j++)
  {
    const double denom = rhs.col(j).norm();
    const double res = denom > 0.0 ? fit.col(j).norm() / denom : 0.0;
    out.residuals.push_back(res);
    if (!(res <= tolerance))
    {
      throw ProjectionError("cotree projection is inconsistent (relative residual " +
                                std::to_string(res) + " in column " + std::to_string(j) +
                                "): input carries a gradient component",
                            res);
    }
  }
  return out;
}

Vector upscale(const GaugeDecomposition &gauge, const SystemPair &sys, const Vector &v_hat)
{
  return CotreeTransform(sys, gauge).upscale(v_hat);
}

CotreeProjection project_to_cotree(const GaugeDecomposition &gauge, const SystemPair &sys,
                                   const Matrix &v, double tolerance)
{
  return CotreeTransform(sys, gauge).project(v, tolerance);
}

}  // namespace mrb
