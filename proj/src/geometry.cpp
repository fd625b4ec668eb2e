#include "fembatch/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace fembatch {

namespace {

void check_dim(int dim)
{
  if (dim != 2 and dim != 3)
    throw std::invalid_argument("unsupported spatial dimension "
                                + std::to_string(dim));
}

bool compute_jacobian(int dim, const double* x, ElementJacobian& jac)
{
  jac.dim = dim;
  // Column c of J is the edge vector from vertex 0 to vertex c+1.
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r)
      jac.j[r * dim + c] = x[(c + 1) * dim + r] - x[r];

  const auto& j = jac.j;
  if (dim == 2)
  {
    const double det = j[0] * j[3] - j[1] * j[2];
    if (!(det > 0.0))
      return false;
    jac.det = det;
    jac.jinv[0] = j[3] / det;
    jac.jinv[1] = -j[1] / det;
    jac.jinv[2] = -j[2] / det;
    jac.jinv[3] = j[0] / det;
  }
  else
  {
    const double det = j[0] * (j[4] * j[8] - j[5] * j[7])
                       - j[1] * (j[3] * j[8] - j[5] * j[6])
                       + j[2] * (j[3] * j[7] - j[4] * j[6]);
    if (!(det > 0.0))
      return false;
    jac.det = det;
    jac.jinv[0] = (j[4] * j[8] - j[5] * j[7]) / det;
    jac.jinv[1] = (j[2] * j[7] - j[1] * j[8]) / det;
    jac.jinv[2] = (j[1] * j[5] - j[2] * j[4]) / det;
    jac.jinv[3] = (j[5] * j[6] - j[3] * j[8]) / det;
    jac.jinv[4] = (j[0] * j[8] - j[2] * j[6]) / det;
    jac.jinv[5] = (j[2] * j[3] - j[0] * j[5]) / det;
    jac.jinv[6] = (j[3] * j[7] - j[4] * j[6]) / det;
    jac.jinv[7] = (j[1] * j[6] - j[0] * j[7]) / det;
    jac.jinv[8] = (j[0] * j[4] - j[1] * j[3]) / det;
  }
  return true;
}

void gather_cell_coords(const Mesh& mesh, std::int64_t cell, double* coords)
{
  for (int k = 0; k <= mesh.dim; ++k)
  {
    const std::int32_t v = mesh.cell_vertex(cell, k);
    for (int c = 0; c < mesh.dim; ++c)
      coords[k * mesh.dim + c] = mesh.vertex(v, c);
  }
}

// Vertices lying on a facet shared by exactly one cell.
std::vector<char> boundary_vertex_mask(const Mesh& mesh)
{
  const std::int64_t nv = mesh.num_vertices();
  std::unordered_map<std::int64_t, int> facet_count;
  facet_count.reserve(static_cast<std::size_t>(mesh.num_elements())
                      * (mesh.dim + 1));

  auto facet_key = [nv](std::array<std::int64_t, 3> f, int len)
  {
    std::sort(f.begin(), f.begin() + len);
    std::int64_t key = 0;
    for (int i = 0; i < len; ++i)
      key = key * nv + f[i];
    return key;
  };

  const int nfv = mesh.dim;  // vertices per facet
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    for (int omit = 0; omit <= mesh.dim; ++omit)
    {
      std::array<std::int64_t, 3> f{};
      int len = 0;
      for (int k = 0; k <= mesh.dim; ++k)
        if (k != omit)
          f[len++] = mesh.cell_vertex(e, k);
      facet_count[facet_key(f, nfv)] += 1;
    }

  std::vector<char> boundary(static_cast<std::size_t>(nv), 0);
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    for (int omit = 0; omit <= mesh.dim; ++omit)
    {
      std::array<std::int64_t, 3> f{};
      int len = 0;
      for (int k = 0; k <= mesh.dim; ++k)
        if (k != omit)
          f[len++] = mesh.cell_vertex(e, k);
      if (facet_count.at(facet_key(f, nfv)) == 1)
        for (int i = 0; i < nfv; ++i)
          boundary[static_cast<std::size_t>(f[i])] = 1;
    }
  return boundary;
}

std::vector<double> min_incident_edge(const Mesh& mesh)
{
  std::vector<double> h(static_cast<std::size_t>(mesh.num_vertices()),
                        std::numeric_limits<double>::infinity());
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    for (int a = 0; a <= mesh.dim; ++a)
      for (int b = a + 1; b <= mesh.dim; ++b)
      {
        const std::int32_t va = mesh.cell_vertex(e, a);
        const std::int32_t vb = mesh.cell_vertex(e, b);
        double len2 = 0.0;
        for (int c = 0; c < mesh.dim; ++c)
        {
          const double d = mesh.vertex(va, c) - mesh.vertex(vb, c);
          len2 += d * d;
        }
        const double len = std::sqrt(len2);
        h[static_cast<std::size_t>(va)] = std::min(h[va], len);
        h[static_cast<std::size_t>(vb)] = std::min(h[vb], len);
      }
  return h;
}

}  // namespace

void validate_mesh(const Mesh& mesh)
{
  check_dim(mesh.dim);
  if (mesh.vertices.size() % mesh.dim != 0)
    throw std::invalid_argument("vertex array length not a multiple of dim");
  if (mesh.cells.size() % (mesh.dim + 1) != 0)
    throw std::invalid_argument("cell array length not a multiple of dim+1");
  const std::int64_t nv = mesh.num_vertices();
  for (std::size_t i = 0; i < mesh.cells.size(); ++i)
    if (mesh.cells[i] < 0 or mesh.cells[i] >= nv)
      throw std::invalid_argument("cell vertex index " + std::to_string(mesh.cells[i])
                                  + " out of range");
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    element_jacobian(mesh, e);  // throws on degenerate or inverted cells
}

Mesh structured_simplicial_mesh(int dim, int n)
{
  check_dim(dim);
  if (n < 1)
    throw std::invalid_argument("mesh resolution must be >= 1");

  Mesh mesh;
  mesh.dim = dim;
  const int m = n + 1;

  if (dim == 2)
  {
    mesh.vertices.reserve(static_cast<std::size_t>(m) * m * 2);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
      {
        mesh.vertices.push_back(static_cast<double>(i) / n);
        mesh.vertices.push_back(static_cast<double>(j) / n);
      }
    auto vid = [m](int i, int j) { return i + j * m; };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
      {
        const std::int32_t v00 = vid(i, j);
        const std::int32_t v10 = vid(i + 1, j);
        const std::int32_t v01 = vid(i, j + 1);
        const std::int32_t v11 = vid(i + 1, j + 1);
        mesh.cells.insert(mesh.cells.end(), {v00, v10, v11});
        mesh.cells.insert(mesh.cells.end(), {v00, v11, v01});
      }
  }
  else
  {
    mesh.vertices.reserve(static_cast<std::size_t>(m) * m * m * 3);
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
        {
          mesh.vertices.push_back(static_cast<double>(i) / n);
          mesh.vertices.push_back(static_cast<double>(j) / n);
          mesh.vertices.push_back(static_cast<double>(k) / n);
        }
    auto vid = [m](int i, int j, int k)
    { return i + m * (j + static_cast<std::int64_t>(m) * k); };

    // Six tetrahedra per cube along vertex paths (0,0,0) -> (1,1,1); odd
    // permutations get two vertices swapped to keep det(J) positive.
    constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                 {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    constexpr bool odd[6] = {false, true, true, false, false, true};
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          for (int p = 0; p < 6; ++p)
          {
            int step[3] = {0, 0, 0};
            std::int32_t tet[4];
            tet[0] = static_cast<std::int32_t>(vid(i, j, k));
            for (int s = 0; s < 3; ++s)
            {
              step[perms[p][s]] = 1;
              tet[s + 1] = static_cast<std::int32_t>(
                  vid(i + step[0], j + step[1], k + step[2]));
            }
            if (odd[p])
              std::swap(tet[1], tet[2]);
            mesh.cells.insert(mesh.cells.end(), {tet[0], tet[1], tet[2], tet[3]});
          }
  }
  return mesh;
}

Mesh jitter_mesh(const Mesh& mesh, double magnitude, std::uint64_t seed)
{
  if (!(magnitude >= 0.0) or magnitude > 0.2)
    throw std::invalid_argument("jitter magnitude must lie in [0, 0.2]");

  Mesh out = mesh;
  const std::vector<char> boundary = boundary_vertex_mask(mesh);
  const std::vector<double> h = min_incident_edge(mesh);

  // Fixed mapping from the raw 64-bit stream keeps meshes bit-identical for
  // a given seed across standard library implementations.
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  for (std::int64_t v = 0; v < mesh.num_vertices(); ++v)
    for (int c = 0; c < mesh.dim; ++c)
    {
      const double u = unit();
      if (!boundary[static_cast<std::size_t>(v)])
        out.vertices[static_cast<std::size_t>(v) * mesh.dim + c]
            += (2.0 * u - 1.0) * magnitude * h[static_cast<std::size_t>(v)];
    }

  for (std::int64_t e = 0; e < out.num_elements(); ++e)
    element_jacobian(out, e);  // reject tangled results
  return out;
}

ElementJacobian jacobian_from_vertices(int dim, const double* vertex_coords)
{
  check_dim(dim);
  ElementJacobian jac;
  if (!compute_jacobian(dim, vertex_coords, jac))
    throw std::runtime_error("degenerate element: det(J) <= 0");
  return jac;
}

ElementJacobian element_jacobian(const Mesh& mesh, std::int64_t cell)
{
  if (cell < 0 or cell >= mesh.num_elements())
    throw std::out_of_range("cell index out of range");
  double coords[12];
  gather_cell_coords(mesh, cell, coords);
  ElementJacobian jac;
  if (!compute_jacobian(mesh.dim, coords, jac))
    throw std::runtime_error("degenerate element: det(J) <= 0 in cell "
                             + std::to_string(cell));
  return jac;
}

GeometryTensor geometry_tensor(const ElementJacobian& jac)
{
  GeometryTensor g;
  g.dim = jac.dim;
  const int dim = jac.dim;
  for (int mu = 0; mu < dim; ++mu)
    for (int nu = mu; nu < dim; ++nu)
    {
      double s = 0.0;
      for (int alpha = 0; alpha < dim; ++alpha)
        s += jac.jinv[mu * dim + alpha] * jac.jinv[nu * dim + alpha];
      s *= jac.det;
      g.g[mu * dim + nu] = s;
      g.g[nu * dim + mu] = s;  // exact symmetry by construction
    }
  return g;
}

std::int64_t packed_geometry_index(int dim, int element_batch_size,
                                   std::int64_t batch, int element_in_batch,
                                   int mu, int nu)
{
  return batch * dim * dim * element_batch_size + element_in_batch * dim * dim
         + mu * dim + nu;
}

PackedGeometry pack_geometry(const Mesh& mesh, const KernelConfig& config)
{
  check_dim(mesh.dim);
  config.validate();

  const int dim = mesh.dim;
  const int bs = config.element_batch_size;
  const std::int64_t ne = mesh.num_elements();
  const std::int64_t num_batches = (ne + bs - 1) / bs;

  PackedGeometry packed;
  packed.dim = dim;
  packed.element_batch_size = bs;
  packed.num_batches = num_batches;
  packed.num_elements = ne;
  packed.precision = config.precision;
  packed.data = make_scalar_array(config.precision,
                                  num_batches * dim * dim * bs);

  std::visit(
      [&](auto& data)
      {
        using Scalar = typename std::decay_t<decltype(data)>::value_type;
        GeometryTensor g{};
        for (std::int64_t slot = 0; slot < num_batches * bs; ++slot)
        {
          if (slot < ne)
            g = geometry_tensor(element_jacobian(mesh, slot));
          const std::int64_t batch = slot / bs;
          const int e = static_cast<int>(slot % bs);
          const std::int64_t base
              = packed_geometry_index(dim, bs, batch, e, 0, 0);
          for (int t = 0; t < dim * dim; ++t)
            data[static_cast<std::size_t>(base + t)]
                = static_cast<Scalar>(g.g[t]);
        }
      },
      packed.data);
  return packed;
}

void write_mesh_text(std::ostream& os, const Mesh& mesh)
{
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << mesh.dim << " " << mesh.num_vertices() << " " << mesh.num_elements()
     << "\n";
  for (std::int64_t v = 0; v < mesh.num_vertices(); ++v)
  {
    for (int c = 0; c < mesh.dim; ++c)
      os << (c == 0 ? "" : " ") << mesh.vertex(v, c);
    os << "\n";
  }
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
  {
    for (int k = 0; k <= mesh.dim; ++k)
      os << (k == 0 ? "" : " ") << mesh.cell_vertex(e, k);
    os << "\n";
  }
}

Mesh read_mesh_text(std::istream& is)
{
  Mesh mesh;
  std::int64_t nv = 0;
  std::int64_t ne = 0;
  if (!(is >> mesh.dim >> nv >> ne))
    throw std::runtime_error("malformed mesh header");
  check_dim(mesh.dim);
  if (nv < 0 or ne < 0)
    throw std::runtime_error("malformed mesh header");

  mesh.vertices.resize(static_cast<std::size_t>(nv) * mesh.dim);
  for (double& x : mesh.vertices)
    if (!(is >> x))
      throw std::runtime_error("truncated vertex data");

  mesh.cells.resize(static_cast<std::size_t>(ne) * (mesh.dim + 1));
  for (std::int32_t& v : mesh.cells)
    if (!(is >> v))
      throw std::runtime_error("truncated cell data");

  validate_mesh(mesh);
  return mesh;
}

}  // namespace fembatch
