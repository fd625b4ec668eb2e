#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fembatch/kernel_config.hpp"

namespace fembatch {

/// Simplicial mesh: flat vertex coordinates plus element-to-vertex
/// connectivity. Every cell must be positively oriented.
struct Mesh {
  int dim = 0;
  std::vector<double> vertices;     ///< vertex-major, dim coordinates each
  std::vector<std::int32_t> cells;  ///< element-major, dim+1 vertex ids each

  std::int64_t num_vertices() const
  {
    return dim == 0 ? 0 : static_cast<std::int64_t>(vertices.size()) / dim;
  }
  std::int64_t num_elements() const
  {
    return dim == 0 ? 0 : static_cast<std::int64_t>(cells.size()) / (dim + 1);
  }
  double vertex(std::int64_t v, int c) const
  {
    return vertices[static_cast<std::size_t>(v) * dim + c];
  }
  std::int32_t cell_vertex(std::int64_t e, int k) const
  {
    return cells[static_cast<std::size_t>(e) * (dim + 1) + k];
  }
};

/// Throws if any cell index is out of range or any cell is degenerate or
/// negatively oriented.
void validate_mesh(const Mesh& mesh);

/// Unit square into 2*n^2 triangles, or unit cube into 6*n^3 tetrahedra,
/// all positively oriented.
Mesh structured_simplicial_mesh(int dim, int n);

/// Displace interior vertices by uniform offsets in [-magnitude*h, magnitude*h]
/// per coordinate, where h is the shortest edge incident to the vertex.
/// Boundary vertices stay fixed. Deterministic in seed; magnitude in [0, 0.2].
Mesh jitter_mesh(const Mesh& mesh, double magnitude, std::uint64_t seed);

/// Affine element map x = J xi + x0; columns of J are edge vectors from the
/// first cell vertex. det > 0 is enforced.
struct ElementJacobian {
  int dim = 0;
  std::array<double, 9> j{};     ///< row-major, dim x dim used
  std::array<double, 9> jinv{};  ///< row-major inverse
  double det = 0.0;
};

/// Jacobian from (dim+1)*dim packed vertex coordinates.
ElementJacobian jacobian_from_vertices(int dim, const double* vertex_coords);
ElementJacobian element_jacobian(const Mesh& mesh, std::int64_t cell);

/// G = J^-1 J^-T |J|: symmetric positive definite, scales as c^(dim-2) under
/// vertex scaling by c and is invariant under translation.
struct GeometryTensor {
  int dim = 0;
  std::array<double, 9> g{};  ///< row-major, dim x dim used

  double entry(int mu, int nu) const { return g[mu * dim + nu]; }
};

GeometryTensor geometry_tensor(const ElementJacobian& jac);

/// Geometry tensors packed for batched integration, cast to engine precision.
/// Entry (batch g, batch-local element e, mu, nu) lives at flat index
///   g * dim*dim * element_batch_size + e * dim*dim + mu*dim + nu.
/// The final partial batch is padded with copies of the last element's G.
struct PackedGeometry {
  int dim = 0;
  int element_batch_size = 0;
  std::int64_t num_batches = 0;
  std::int64_t num_elements = 0;  ///< real elements, excluding padding
  Precision precision = Precision::f64;
  ScalarArray data;
};

std::int64_t packed_geometry_index(int dim, int element_batch_size,
                                   std::int64_t batch, int element_in_batch,
                                   int mu, int nu);

PackedGeometry pack_geometry(const Mesh& mesh, const KernelConfig& config);

/// Text format: header "dim num_vertices num_elements", one line per vertex,
/// one line of 0-based indices per cell. Full round-trip precision.
void write_mesh_text(std::ostream& os, const Mesh& mesh);
Mesh read_mesh_text(std::istream& is);

}  // namespace fembatch
