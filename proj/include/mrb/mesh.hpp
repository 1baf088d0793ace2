// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_MESH_HPP
#define MRB_MESH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>
#include <json.hpp>
#include "mrb/types.hpp"

namespace mrb
{

using Point = std::array<double, 3>;

// Structured hexahedral mesh of the brick [0,a]x[0,b]x[0,c].
//
// Vertices are numbered lexicographically with x fastest and z slowest. Edges are emitted
// by walking the tail vertices in the same order and emitting the +x, +y, +z edge leaving
// each one, so every edge is oriented from its lower to its higher vertex index. Edges
// lying in one of the six boundary planes carry PEC conditions and are eliminated; the
// remaining free edges get a dense index used as the DoF numbering.
class CavityMesh
{
public:
  struct Cell
  {
    // Local vertex (i,j,k) in {0,1}^3 is stored at i + 2j + 4k.
    std::array<Index, 8> vertices;
    // x-edges 0..3 at (j,k) = (0,0),(1,0),(0,1),(1,1); y-edges 4..7 at (i,k); z-edges 8..11
    // at (i,j).
    std::array<Index, 12> edges;
  };

  CavityMesh(const Point &dims, const std::array<Index, 3> &resolution);

  const Point &dims() const { return dims_; }
  const std::array<Index, 3> &resolution() const { return res_; }

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  Index num_cells() const { return static_cast<Index>(cells_.size()); }
  Index num_free_edges() const { return num_free_edges_; }
  Index num_interior_vertices() const { return num_interior_vertices_; }

  const std::vector<Point> &vertices() const { return vertices_; }
  const std::vector<std::array<Index, 2>> &edges() const { return edges_; }
  const std::vector<Cell> &cells() const { return cells_; }
  const std::vector<bool> &boundary_vertex() const { return boundary_vertex_; }
  const std::vector<bool> &boundary_edge() const { return boundary_edge_; }

  // -1 for boundary entities.
  const std::vector<Index> &free_edge_index() const { return free_edge_index_; }
  const std::vector<Index> &interior_vertex_index() const { return interior_vertex_index_; }

  // Inverse maps: dense index -> global entity index.
  const std::vector<Index> &free_edges() const { return free_edges_; }
  const std::vector<Index> &interior_vertices() const { return interior_vertices_; }

  Index vertex_id(Index i, Index j, Index k) const
  {
    return i + (res_[0] + 1) * (j + (res_[1] + 1) * k);
  }

  nlohmann::json summary() const;

private:
  Point dims_{};
  std::array<Index, 3> res_{};
  std::vector<Point> vertices_;
  std::vector<std::array<Index, 2>> edges_;
  std::vector<Cell> cells_;
  std::vector<bool> boundary_vertex_, boundary_edge_;
  std::vector<Index> free_edge_index_, interior_vertex_index_;
  std::vector<Index> free_edges_, interior_vertices_;
  Index num_free_edges_ = 0, num_interior_vertices_ = 0;
};

CavityMesh build_mesh(const Point &dims, const std::array<Index, 3> &resolution);

// Vertex coordinates with the lid pushed outwards: z is scaled by
// 1 + amplitude * sin(pi x / a) * sin(pi y / b). The side walls and the floor stay planar.
// amplitude = 0 reproduces the brick. Requires amplitude > -1.
std::vector<Point> bulged_vertices(const CavityMesh &mesh, double amplitude);

// Incidence matrix between free edges (rows) and interior vertices (columns): +1 where the
// vertex is the edge's head, -1 where it is the tail. Its range spans the nullspace of the
// curl-curl operator.
struct DiscreteGradient
{
  SparseMatrix G;
};

DiscreteGradient discrete_gradient(const CavityMesh &mesh);

}  // namespace mrb

#endif  // MRB_MESH_HPP
