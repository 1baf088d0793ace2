// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_ASSEMBLY_HPP
#define MRB_ASSEMBLY_HPP

#include <span>
#include <string>
#include <vector>
#include "mrb/mesh.hpp"
#include "mrb/types.hpp"

namespace mrb
{

// Curl-curl stiffness A and mass B restricted to the free (non-PEC) edges. Eigenvalues of
// (A, B) are omega^2 / c0^2 with c0 = 1 and unit material coefficients.
struct SystemPair
{
  SparseMatrix A, B;
  std::string geometry_tag;

  Index size() const { return static_cast<Index>(A.rows()); }
};

// Lowest-order edge elements on trilinearly mapped hexahedra, 2x2x2 Gauss quadrature.
SystemPair assemble(const CavityMesh &mesh);

// Assemble on the mesh topology with overridden vertex coordinates (one per mesh vertex).
// Throws NumericalError if any cell has a non-positive Jacobian determinant.
SystemPair assemble(const CavityMesh &mesh, std::span<const Point> coords);

// Affine family A(t) = (1-t) A0 + t A1, B(t) = (1-t) B0 + t B1 on t in [0,1]. The
// endpoints must share the DoF numbering; both are stored on their union sparsity pattern
// so interpolation is a single pass over the value arrays.
class ParametrizedSystem
{
public:
  ParametrizedSystem(SystemPair endpoint0, SystemPair endpoint1);

  SystemPair interpolate(double t) const;

  const SystemPair &endpoint0() const { return end0_; }
  const SystemPair &endpoint1() const { return end1_; }
  Index size() const { return end0_.size(); }

private:
  SystemPair end0_, end1_;
};

SystemPair interpolate(const ParametrizedSystem &sys, double t);

// Smallest nonzero Maxwell eigenvalues pi^2 (m^2/a^2 + n^2/b^2 + p^2/c^2) of the PEC brick
// with edge lengths dims, repeated by multiplicity (2 if m,n,p >= 1, 1 if exactly one index
// vanishes), ascending.
std::vector<double> analytic_brick_eigenvalues(const Point &dims, int count);

}  // namespace mrb

#endif  // MRB_ASSEMBLY_HPP
