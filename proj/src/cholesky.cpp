// SPDX-License-Identifier: Apache-2.0

// Supernodal sparse Cholesky. Eigen's simplicial factorization supplies the fill-reducing
// ordering and the pattern of L; columns with nested patterns are grouped into supernodes
// stored as dense panels, so both factorization and multi-column solves run on dense
// blocks.

#include <algorithm>
#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include "mrb/eigensolvers.hpp"
#include "mrb/error.hpp"

namespace mrb
{

namespace
{

using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, Index>;
using PanelMap = Eigen::Map<Matrix>;

struct Supernode
{
  Index first = 0;
  Index width = 0;
  // Row indices of the panel; the first `width` are first..first+width-1.
  std::vector<Index> rows;
  std::size_t offset = 0;

  Index height() const { return static_cast<Index>(rows.size()); }
};

// Update of one target supernode by the panel rows [begin, end) of a source supernode.
struct Update
{
  Index target = 0;
  Index begin = 0;
  Index end = 0;
  // Position in the target's row list of every source row from `begin` on.
  std::vector<Index> relative;
};

bool same_pattern(const SparseMatrix &M, const std::vector<Index> &outer,
                  const std::vector<Index> &inner)
{
  return static_cast<std::size_t>(M.outerSize() + 1) == outer.size() &&
         static_cast<std::size_t>(M.nonZeros()) == inner.size() &&
         std::equal(outer.begin(), outer.end(), M.outerIndexPtr()) &&
         std::equal(inner.begin(), inner.end(), M.innerIndexPtr());
}

// Lower-trapezoid entry count of a panel.
double panel_entries(double width, double height)
{
  return width * height - width * (width - 1.0) / 2.0;
}

bool accept_merge(Index width, double zeros, double entries)
{
  const double fraction = zeros / entries;
  if (width <= 4)
  {
    return true;
  }
  if (width <= 16)
  {
    return fraction < 0.8;
  }
  if (width <= 48)
  {
    return fraction < 0.1;
  }
  return fraction < 0.05;
}

}  // namespace

struct SpdFactor::Impl
{
  Index n = 0;
  std::vector<Index> outer, inner;
  Permutation P, Pinv;
  std::vector<Supernode> nodes;
  std::vector<std::vector<Update>> updates;
  // Destination in `values` of every stored entry of the input, or -1 when unused.
  std::vector<std::ptrdiff_t> scatter;
  std::vector<double> values;
  std::vector<double> work;

  void analyze(const SparseMatrix &M);
  void numeric(const SparseMatrix &M);
};

void SpdFactor::Impl::analyze(const SparseMatrix &M)
{
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<Index>> llt(M);
  if (llt.info() != Eigen::Success)
  {
    throw NotSpdError("sparse Cholesky factorization failed: matrix is not positive definite");
  }
  n = static_cast<Index>(M.rows());
  P = llt.permutationP();
  Pinv = llt.permutationPinv();
  const SparseMatrix &L = llt.matrixL().nestedExpression();
  const Index *lo = L.outerIndexPtr();
  const Index *li = L.innerIndexPtr();
  auto count = [&](Index j) { return lo[j + 1] - lo[j]; };
  auto parent = [&](Index j) { return count(j) > 1 ? li[lo[j] + 1] : Index(-1); };

  std::vector<Index> start{0};
  for (Index j = 1; j < n; j++)
  {
    if (!(parent(j - 1) == j && count(j) == count(j - 1) - 1))
    {
      start.push_back(j);
    }
  }
  start.push_back(n);

  // Relaxed amalgamation of a supernode with its parent when the parent follows it.
  nodes.clear();
  double zeros = 0.0;
  for (std::size_t s = 0; s + 1 < start.size(); s++)
  {
    const Index f = start[s];
    const Index w = start[s + 1] - f;
    Supernode next;
    next.first = f;
    next.width = w;
    next.rows.resize(static_cast<std::size_t>(w));
    for (Index k = 0; k < w; k++)
    {
      next.rows[k] = f + k;
    }
    const Index l = f + w - 1;
    next.rows.insert(next.rows.end(), li + lo[l] + 1, li + lo[l + 1]);
    if (!nodes.empty())
    {
      Supernode &cur = nodes.back();
      const Index last = cur.first + cur.width - 1;
      if (parent(last) == f)
      {
        const Index width = cur.width + w;
        const Index height = cur.width + next.height();
        const double merged = panel_entries(width, height);
        const double added = merged - panel_entries(cur.width, cur.height()) -
                             panel_entries(w, next.height());
        if (accept_merge(width, zeros + added, merged))
        {
          zeros += added;
          cur.width = width;
          cur.rows.resize(static_cast<std::size_t>(cur.width - w));
          cur.rows.insert(cur.rows.end(), next.rows.begin(), next.rows.end());
          continue;
        }
      }
    }
    zeros = 0.0;
    nodes.push_back(std::move(next));
  }

  std::vector<Index> node_of(static_cast<std::size_t>(n));
  std::size_t total = 0;
  for (std::size_t s = 0; s < nodes.size(); s++)
  {
    Supernode &sn = nodes[s];
    sn.offset = total;
    total += static_cast<std::size_t>(sn.width) * sn.rows.size();
    std::fill(node_of.begin() + sn.first, node_of.begin() + sn.first + sn.width,
              static_cast<Index>(s));
  }
  values.assign(total, 0.0);

  auto position = [](const Supernode &sn, Index row) {
    return static_cast<Index>(std::lower_bound(sn.rows.begin(), sn.rows.end(), row) -
                              sn.rows.begin());
  };

  updates.assign(nodes.size(), {});
  std::size_t work_size = 0;
  for (std::size_t s = 0; s < nodes.size(); s++)
  {
    const Supernode &sn = nodes[s];
    Index a = sn.width;
    while (a < sn.height())
    {
      const Index target = node_of[sn.rows[a]];
      const Supernode &tn = nodes[target];
      Index b = a;
      while (b < sn.height() && sn.rows[b] < tn.first + tn.width)
      {
        b++;
      }
      Update up;
      up.target = target;
      up.begin = a;
      up.end = b;
      up.relative.reserve(static_cast<std::size_t>(sn.height() - a));
      for (Index i = a; i < sn.height(); i++)
      {
        up.relative.push_back(position(tn, sn.rows[i]));
      }
      work_size = std::max(work_size, static_cast<std::size_t>(sn.height() - a) * (b - a));
      updates[s].push_back(std::move(up));
      a = b;
    }
  }
  work.assign(work_size, 0.0);

  const Index *perm = P.indices().data();
  scatter.assign(static_cast<std::size_t>(M.nonZeros()), -1);
  for (Index c = 0; c < M.outerSize(); c++)
  {
    for (Index p = M.outerIndexPtr()[c]; p < M.outerIndexPtr()[c + 1]; p++)
    {
      const Index r = M.innerIndexPtr()[p];
      if (r < c)
      {
        continue;
      }
      const Index i = std::max(perm[r], perm[c]);
      const Index j = std::min(perm[r], perm[c]);
      const Supernode &sn = nodes[node_of[j]];
      scatter[p] = static_cast<std::ptrdiff_t>(sn.offset) +
                   static_cast<std::ptrdiff_t>(j - sn.first) * sn.height() + position(sn, i);
    }
  }
}

void SpdFactor::Impl::numeric(const SparseMatrix &M)
{
  std::fill(values.begin(), values.end(), 0.0);
  const double *mv = M.valuePtr();
  for (std::size_t p = 0; p < scatter.size(); p++)
  {
    if (scatter[p] >= 0)
    {
      values[scatter[p]] += mv[p];
    }
  }
  for (std::size_t s = 0; s < nodes.size(); s++)
  {
    const Supernode &sn = nodes[s];
    const Index m = sn.height();
    const Index w = sn.width;
    PanelMap panel(values.data() + sn.offset, m, w);
    auto diag = panel.topRows(w);
    Eigen::LLT<Eigen::Ref<Matrix>> llt(diag);
    if (llt.info() != Eigen::Success)
    {
      throw NotSpdError("sparse Cholesky factorization failed: matrix is not positive definite");
    }
    if (m == w)
    {
      continue;
    }
    auto below = panel.bottomRows(m - w);
    diag.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(below);
    for (const Update &up : updates[s])
    {
      const Index r = m - up.begin;
      const Index c = up.end - up.begin;
      PanelMap U(work.data(), r, c);
      U.noalias() = panel.middleRows(up.begin, r) * panel.middleRows(up.begin, c).transpose();
      const Supernode &tn = nodes[up.target];
      PanelMap target(values.data() + tn.offset, tn.height(), tn.width);
      for (Index jj = 0; jj < c; jj++)
      {
        const Index col = sn.rows[up.begin + jj] - tn.first;
        for (Index ii = jj; ii < r; ii++)
        {
          target(up.relative[ii], col) -= U(ii, jj);
        }
      }
    }
  }
}

SpdFactor::SpdFactor() : impl_(std::make_unique<Impl>()) {}
SpdFactor::SpdFactor(const SparseMatrix &M) : SpdFactor() { factorize(M); }
SpdFactor::SpdFactor(SpdFactor &&) noexcept = default;
SpdFactor &SpdFactor::operator=(SpdFactor &&) noexcept = default;
SpdFactor::~SpdFactor() = default;

void SpdFactor::factorize(const SparseMatrix &M)
{
  if (M.rows() != M.cols())
  {
    throw UsageError("Cholesky factorization requires a square matrix");
  }
  SparseMatrix Mc = M;
  Mc.makeCompressed();
  try
  {
    if (impl_->n == 0 || !same_pattern(Mc, impl_->outer, impl_->inner))
    {
      impl_->n = 0;
      impl_->analyze(Mc);
      impl_->outer.assign(Mc.outerIndexPtr(), Mc.outerIndexPtr() + Mc.outerSize() + 1);
      impl_->inner.assign(Mc.innerIndexPtr(), Mc.innerIndexPtr() + Mc.nonZeros());
    }
    impl_->numeric(Mc);
  }
  catch (...)
  {
    impl_->n = 0;
    throw;
  }
  impl_->n = static_cast<Index>(Mc.rows());
}

Matrix SpdFactor::solve(const Matrix &rhs) const
{
  RowMatrix X = rhs;
  solve_in_place(X);
  return X;
}

void SpdFactor::solve_in_place(RowMatrix &X) const
{
  if (X.rows() != impl_->n)
  {
    throw UsageError("right-hand side dimension does not match the factorization");
  }
  if (X.cols() == 0 || impl_->n == 0)
  {
    return;
  }
  const Index r = static_cast<Index>(X.cols());
  X = impl_->P * X;
  RowMatrix T;
  for (const Supernode &sn : impl_->nodes)
  {
    const Index m = sn.height();
    const Index w = sn.width;
    Eigen::Map<const Matrix> panel(impl_->values.data() + sn.offset, m, w);
    auto Xs = X.middleRows(sn.first, w);
    panel.topRows(w).triangularView<Eigen::Lower>().solveInPlace(Xs);
    if (m > w)
    {
      T.noalias() = panel.bottomRows(m - w) * Xs;
      for (Index i = 0; i < m - w; i++)
      {
        X.row(sn.rows[w + i]) -= T.row(i);
      }
    }
  }
  for (auto it = impl_->nodes.rbegin(); it != impl_->nodes.rend(); ++it)
  {
    const Supernode &sn = *it;
    const Index m = sn.height();
    const Index w = sn.width;
    Eigen::Map<const Matrix> panel(impl_->values.data() + sn.offset, m, w);
    auto Xs = X.middleRows(sn.first, w);
    if (m > w)
    {
      T.resize(m - w, r);
      for (Index i = 0; i < m - w; i++)
      {
        T.row(i) = X.row(sn.rows[w + i]);
      }
      Xs.noalias() -= panel.bottomRows(m - w).transpose() * T;
    }
    panel.topRows(w).transpose().triangularView<Eigen::Upper>().solveInPlace(Xs);
  }
  X = impl_->Pinv * X;
}

Index SpdFactor::size() const { return impl_->n; }
bool SpdFactor::empty() const { return impl_->n == 0; }

SpdFactor factorize(const SparseMatrix &B) { return SpdFactor(B); }

Matrix solve_spd(const SpdFactor &factor, const Matrix &rhs) { return factor.solve(rhs); }

}  // namespace mrb
