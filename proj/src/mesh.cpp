// SPDX-License-Identifier: Apache-2.0

#include "mrb/mesh.hpp"

#include <cmath>
#include <limits>
#include "mrb/error.hpp"

namespace mrb
{

CavityMesh::CavityMesh(const Point &dims, const std::array<Index, 3> &resolution)
  : dims_(dims), res_(resolution)
{
  for (int d = 0; d < 3; d++)
  {
    if (!(dims[d] > 0.0) || !std::isfinite(dims[d]))
    {
      throw UsageError("cavity dimensions must be positive and finite");
    }
    if (resolution[d] < 1)
    {
      throw UsageError("mesh resolution must be at least one cell per axis");
    }
  }
  const std::int64_t nx = res_[0], ny = res_[1], nz = res_[2];
  const std::int64_t n_edges =
      nx * (ny + 1) * (nz + 1) + ny * (nx + 1) * (nz + 1) + nz * (nx + 1) * (ny + 1);
  // Element matrices are accumulated as triplets, 144 per cell, so bound that too.
  const std::int64_t n_triplets = 144 * nx * ny * nz;
  if (n_edges > std::numeric_limits<Index>::max() ||
      n_triplets > std::numeric_limits<Index>::max())
  {
    throw UsageError("mesh resolution too large: entity count overflows the index type");
  }

  const Index vx = res_[0] + 1, vy = res_[1] + 1, vz = res_[2] + 1;
  vertices_.reserve(static_cast<std::size_t>(vx) * vy * vz);
  boundary_vertex_.reserve(vertices_.capacity());
  for (Index k = 0; k < vz; k++)
  {
    for (Index j = 0; j < vy; j++)
    {
      for (Index i = 0; i < vx; i++)
      {
        vertices_.push_back({dims_[0] * i / res_[0], dims_[1] * j / res_[1],
                             dims_[2] * k / res_[2]});
        boundary_vertex_.push_back(i == 0 || i == res_[0] || j == 0 || j == res_[1] ||
                                   k == 0 || k == res_[2]);
      }
    }
  }

  // Edge ids of the +x/+y/+z edge leaving each vertex, -1 where none exists.
  std::vector<std::array<Index, 3>> out_edge(vertices_.size(), {-1, -1, -1});
  edges_.reserve(static_cast<std::size_t>(n_edges));
  boundary_edge_.reserve(static_cast<std::size_t>(n_edges));
  for (Index k = 0; k < vz; k++)
  {
    for (Index j = 0; j < vy; j++)
    {
      for (Index i = 0; i < vx; i++)
      {
        const Index v = vertex_id(i, j, k);
        const bool j_bnd = (j == 0 || j == res_[1]), k_bnd = (k == 0 || k == res_[2]);
        const bool i_bnd = (i == 0 || i == res_[0]);
        if (i < res_[0])
        {
          out_edge[v][0] = num_edges();
          edges_.push_back({v, vertex_id(i + 1, j, k)});
          boundary_edge_.push_back(j_bnd || k_bnd);
        }
        if (j < res_[1])
        {
          out_edge[v][1] = num_edges();
          edges_.push_back({v, vertex_id(i, j + 1, k)});
          boundary_edge_.push_back(i_bnd || k_bnd);
        }
        if (k < res_[2])
        {
          out_edge[v][2] = num_edges();
          edges_.push_back({v, vertex_id(i, j, k + 1)});
          boundary_edge_.push_back(i_bnd || j_bnd);
        }
      }
    }
  }

  cells_.reserve(static_cast<std::size_t>(res_[0]) * res_[1] * res_[2]);
  for (Index k = 0; k < res_[2]; k++)
  {
    for (Index j = 0; j < res_[1]; j++)
    {
      for (Index i = 0; i < res_[0]; i++)
      {
        Cell cell;
        for (int c = 0; c < 8; c++)
        {
          cell.vertices[c] = vertex_id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
        }
        for (int a = 0; a < 2; a++)
        {
          for (int b = 0; b < 2; b++)
          {
            cell.edges[0 + a + 2 * b] = out_edge[vertex_id(i, j + a, k + b)][0];
            cell.edges[4 + a + 2 * b] = out_edge[vertex_id(i + a, j, k + b)][1];
            cell.edges[8 + a + 2 * b] = out_edge[vertex_id(i + a, j + b, k)][2];
          }
        }
        cells_.push_back(cell);
      }
    }
  }

  free_edge_index_.assign(edges_.size(), -1);
  for (Index e = 0; e < num_edges(); e++)
  {
    if (!boundary_edge_[e])
    {
      free_edge_index_[e] = num_free_edges_++;
      free_edges_.push_back(e);
    }
  }
  interior_vertex_index_.assign(vertices_.size(), -1);
  for (Index v = 0; v < num_vertices(); v++)
  {
    if (!boundary_vertex_[v])
    {
      interior_vertex_index_[v] = num_interior_vertices_++;
      interior_vertices_.push_back(v);
    }
  }
}

nlohmann::json CavityMesh::summary() const
{
  return {{"dims", dims_},
          {"resolution", res_},
          {"vertices", num_vertices()},
          {"edges", num_edges()},
          {"cells", num_cells()},
          {"free_edges", num_free_edges()},
          {"interior_vertices", num_interior_vertices()}};
}

CavityMesh build_mesh(const Point &dims, const std::array<Index, 3> &resolution)
{
  return CavityMesh(dims, resolution);
}

std::vector<Point> bulged_vertices(const CavityMesh &mesh, double amplitude)
{
  if (!(amplitude > -1.0) || !std::isfinite(amplitude))
  {
    throw UsageError("bulge amplitude must be finite and greater than -1");
  }
  const double pi = std::acos(-1.0);
  const Point &d = mesh.dims();
  std::vector<Point> out = mesh.vertices();
  for (Point &p : out)
  {
    p[2] *= 1.0 + amplitude * std::sin(pi * p[0] / d[0]) * std::sin(pi * p[1] / d[1]);
  }
  return out;
}

DiscreteGradient discrete_gradient(const CavityMesh &mesh)
{
  std::vector<Triplet> triplets;
  triplets.reserve(2 * static_cast<std::size_t>(mesh.num_free_edges()));
  const auto &vidx = mesh.interior_vertex_index();
  for (Index row = 0; row < mesh.num_free_edges(); row++)
  {
    const auto &[tail, head] = mesh.edges()[mesh.free_edges()[row]];
    if (vidx[tail] >= 0)
    {
      triplets.emplace_back(row, vidx[tail], -1.0);
    }
    if (vidx[head] >= 0)
    {
      triplets.emplace_back(row, vidx[head], 1.0);
    }
  }
  DiscreteGradient grad;
  grad.G.resize(mesh.num_free_edges(), mesh.num_interior_vertices());
  grad.G.setFromTriplets(triplets.begin(), triplets.end());
  return grad;
}

}  // namespace mrb
