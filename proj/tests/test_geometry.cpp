#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fembatch/geometry.hpp"
#include "test_util.hpp"

using namespace fembatch;

TEST_CASE("structured meshes have the expected element counts")
{
  const Mesh m1 = structured_simplicial_mesh(2, 1);
  CHECK(m1.num_elements() == 2);
  CHECK(m1.num_vertices() == 4);

  CHECK(structured_simplicial_mesh(2, 4).num_elements() == 32);
  CHECK(structured_simplicial_mesh(3, 2).num_elements() == 48);
  CHECK(structured_simplicial_mesh(3, 2).num_vertices() == 27);

  CHECK_THROWS_AS(structured_simplicial_mesh(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(structured_simplicial_mesh(4, 2), std::invalid_argument);
}

TEST_CASE("structured meshes are positively oriented and valid")
{
  for (int dim : {2, 3})
  {
    const Mesh mesh = structured_simplicial_mesh(dim, 3);
    CHECK_NOTHROW(validate_mesh(mesh));
    for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
      CHECK(element_jacobian(mesh, e).det > 0.0);
  }
}

TEST_CASE("structured meshes tile the unit domain exactly")
{
  for (int dim : {2, 3})
  {
    const int n = 3;
    const Mesh mesh = structured_simplicial_mesh(dim, n);
    double total = 0.0;
    const double cell_factor = dim == 2 ? 0.5 : 1.0 / 6.0;
    for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
      total += element_jacobian(mesh, e).det * cell_factor;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("jitter of magnitude zero is the identity")
{
  const Mesh mesh = structured_simplicial_mesh(2, 4);
  const Mesh same = jitter_mesh(mesh, 0.0, 42);
  REQUIRE(same.vertices.size() == mesh.vertices.size());
  for (std::size_t t = 0; t < mesh.vertices.size(); ++t)
    CHECK(same.vertices[t] == mesh.vertices[t]);
}

TEST_CASE("jitter is deterministic in the seed")
{
  const Mesh mesh = structured_simplicial_mesh(3, 3);
  const Mesh a = jitter_mesh(mesh, 0.15, 42);
  const Mesh b = jitter_mesh(mesh, 0.15, 42);
  const Mesh c = jitter_mesh(mesh, 0.15, 43);
  bool identical = true;
  bool differs_from_c = false;
  for (std::size_t t = 0; t < mesh.vertices.size(); ++t)
  {
    identical = identical and a.vertices[t] == b.vertices[t];
    differs_from_c = differs_from_c or a.vertices[t] != c.vertices[t];
  }
  CHECK(identical);
  CHECK(differs_from_c);
}

TEST_CASE("jitter moves only interior vertices")
{
  for (int dim : {2, 3})
  {
    const Mesh mesh = structured_simplicial_mesh(dim, 4);
    const Mesh moved = jitter_mesh(mesh, 0.15, 42);
    bool any_interior_moved = false;
    for (std::int64_t v = 0; v < mesh.num_vertices(); ++v)
    {
      bool on_boundary = false;
      for (int c = 0; c < dim; ++c)
        if (mesh.vertex(v, c) == 0.0 or mesh.vertex(v, c) == 1.0)
          on_boundary = true;
      bool vertex_moved = false;
      for (int c = 0; c < dim; ++c)
        if (moved.vertex(v, c) != mesh.vertex(v, c))
          vertex_moved = true;
      if (on_boundary)
        CHECK(!vertex_moved);
      any_interior_moved = any_interior_moved or vertex_moved;
    }
    CHECK(any_interior_moved);
  }
}

TEST_CASE("jitter keeps all elements positively oriented")
{
  const Mesh mesh = jitter_mesh(structured_simplicial_mesh(2, 8), 0.15, 42);
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    CHECK(element_jacobian(mesh, e).det > 0.0);
}

TEST_CASE("jitter magnitude is bounded")
{
  const Mesh mesh = structured_simplicial_mesh(2, 2);
  CHECK_THROWS_AS(jitter_mesh(mesh, 0.25, 42), std::invalid_argument);
  CHECK_THROWS_AS(jitter_mesh(mesh, -0.1, 42), std::invalid_argument);
}

TEST_CASE("element Jacobians match hand-computed examples")
{
  Mesh tri = testutil::reference_element_mesh(2);
  ElementJacobian jac = element_jacobian(tri, 0);
  CHECK(jac.j[0] == 1.0);
  CHECK(jac.j[1] == 0.0);
  CHECK(jac.j[2] == 0.0);
  CHECK(jac.j[3] == 1.0);
  CHECK(jac.det == 1.0);

  tri.vertices = {0.0, 0.0, 2.0, 0.0, 0.0, 2.0};
  jac = element_jacobian(tri, 0);
  CHECK(jac.j[0] == 2.0);
  CHECK(jac.j[3] == 2.0);
  CHECK(jac.det == 4.0);

  tri.vertices = {0.0, 0.0, 1.0, 0.0, 1.0, 1.0};
  jac = element_jacobian(tri, 0);
  CHECK(jac.j[0] == 1.0);
  CHECK(jac.j[1] == 1.0);
  CHECK(jac.j[2] == 0.0);
  CHECK(jac.j[3] == 1.0);
  CHECK(jac.det == 1.0);
}

TEST_CASE("Jacobian inverse satisfies J * Jinv = I")
{
  const Mesh mesh = jitter_mesh(structured_simplicial_mesh(3, 3), 0.15, 7);
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
  {
    const ElementJacobian jac = element_jacobian(mesh, e);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
      {
        double s = 0.0;
        for (int t = 0; t < 3; ++t)
          s += jac.j[r * 3 + t] * jac.jinv[t * 3 + c];
        CHECK(std::abs(s - (r == c ? 1.0 : 0.0)) <= 1e-12);
      }
  }
}

TEST_CASE("degenerate and inverted elements are rejected by name")
{
  Mesh bad = testutil::reference_element_mesh(2);
  bad.cells = {0, 2, 1};  // negative orientation
  CHECK_THROWS_WITH_AS(element_jacobian(bad, 0),
                       doctest::Contains("cell 0"), std::runtime_error);

  double degenerate[6] = {0.0, 0.0, 1.0, 1.0, 2.0, 2.0};  // collinear
  CHECK_THROWS_AS(jacobian_from_vertices(2, degenerate), std::runtime_error);

  CHECK_THROWS_AS(element_jacobian(bad, 5), std::out_of_range);
}

TEST_CASE("geometry tensors match hand-computed examples")
{
  Mesh tri = testutil::reference_element_mesh(2);
  GeometryTensor g = geometry_tensor(element_jacobian(tri, 0));
  CHECK(g.entry(0, 0) == 1.0);
  CHECK(g.entry(0, 1) == 0.0);
  CHECK(g.entry(1, 0) == 0.0);
  CHECK(g.entry(1, 1) == 1.0);

  // 2D scaling leaves G invariant: Jinv carries 1/2 twice, det carries 4.
  tri.vertices = {0.0, 0.0, 2.0, 0.0, 0.0, 2.0};
  g = geometry_tensor(element_jacobian(tri, 0));
  CHECK(g.entry(0, 0) == 1.0);
  CHECK(g.entry(0, 1) == 0.0);
  CHECK(g.entry(1, 1) == 1.0);

  tri.vertices = {0.0, 0.0, 1.0, 0.0, 1.0, 1.0};
  g = geometry_tensor(element_jacobian(tri, 0));
  CHECK(g.entry(0, 0) == 2.0);
  CHECK(g.entry(0, 1) == -1.0);
  CHECK(g.entry(1, 0) == -1.0);
  CHECK(g.entry(1, 1) == 1.0);
}

TEST_CASE("geometry tensors are exactly symmetric and positive definite")
{
  const Mesh mesh = jitter_mesh(structured_simplicial_mesh(3, 3), 0.15, 11);
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
  {
    const GeometryTensor g = geometry_tensor(element_jacobian(mesh, e));
    for (int mu = 0; mu < 3; ++mu)
      for (int nu = 0; nu < 3; ++nu)
        CHECK(g.entry(mu, nu) == g.entry(nu, mu));  // bitwise by construction
    const double probes[4][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, -2, 3}};
    for (const double* x : probes)
    {
      double quad = 0.0;
      for (int mu = 0; mu < 3; ++mu)
        for (int nu = 0; nu < 3; ++nu)
          quad += x[mu] * g.entry(mu, nu) * x[nu];
      CHECK(quad > 0.0);
    }
  }
}

TEST_CASE("uniform scaling maps G to c^(dim-2) G bitwise")
{
  for (int dim : {2, 3})
  {
    const Mesh mesh = jitter_mesh(structured_simplicial_mesh(dim, 2), 0.1, 3);
    Mesh scaled = mesh;
    for (double& x : scaled.vertices)
      x *= 2.0;
    const double factor = dim == 2 ? 1.0 : 2.0;
    for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    {
      const GeometryTensor g = geometry_tensor(element_jacobian(mesh, e));
      const GeometryTensor gs
          = geometry_tensor(element_jacobian(scaled, e));
      for (int t = 0; t < dim * dim; ++t)
        CHECK(gs.g[t] == factor * g.g[t]);  // power-of-two scaling is exact
    }
  }
}

TEST_CASE("translation leaves G bitwise unchanged")
{
  const Mesh mesh = structured_simplicial_mesh(2, 8);
  Mesh moved = mesh;
  for (std::int64_t v = 0; v < moved.num_vertices(); ++v)
  {
    moved.vertices[static_cast<std::size_t>(v) * 2 + 0] += 0.5;
    moved.vertices[static_cast<std::size_t>(v) * 2 + 1] += 0.25;
  }
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
  {
    const GeometryTensor g = geometry_tensor(element_jacobian(mesh, e));
    const GeometryTensor gm = geometry_tensor(element_jacobian(moved, e));
    for (int t = 0; t < 4; ++t)
      CHECK(gm.g[t] == g.g[t]);
  }
}

TEST_CASE("packed geometry follows the flat batch layout")
{
  CHECK(packed_geometry_index(2, 5, 1, 0, 1, 0) == 22);
  CHECK(packed_geometry_index(3, 128, 0, 0, 0, 0) == 0);
  CHECK(packed_geometry_index(3, 128, 2, 1, 2, 1) == 2 * 9 * 128 + 9 + 7);
}

TEST_CASE("packing two identity elements produces flat identities")
{
  const Mesh mesh = testutil::reference_element_mesh(2, 2);
  KernelConfig config;
  config.element_batch_size = 2;
  config.precision = Precision::f64;
  const PackedGeometry packed = pack_geometry(mesh, config);
  CHECK(packed.num_batches == 1);
  CHECK(packed.num_elements == 2);
  const double expected[8] = {1, 0, 0, 1, 1, 0, 0, 1};
  REQUIRE(scalar_array_size(packed.data) == 8);
  for (int t = 0; t < 8; ++t)
    CHECK(scalar_array_at(packed.data, t) == expected[t]);
}

TEST_CASE("a partial final batch is padded with the last element's G")
{
  const Mesh mesh = testutil::reference_element_mesh(2, 3);
  KernelConfig config;
  config.element_batch_size = 2;
  config.precision = Precision::f64;
  const PackedGeometry packed = pack_geometry(mesh, config);
  CHECK(packed.num_batches == 2);
  REQUIRE(scalar_array_size(packed.data) == 16);
  // slot 3 (batch 1, element 1) replicates element 2
  for (int mu = 0; mu < 2; ++mu)
    for (int nu = 0; nu < 2; ++nu)
      CHECK(scalar_array_at(packed.data,
                            packed_geometry_index(2, 2, 1, 1, mu, nu))
            == scalar_array_at(packed.data,
                               packed_geometry_index(2, 2, 1, 0, mu, nu)));
}

TEST_CASE("packing round-trips every element's G bitwise in double")
{
  const Mesh mesh = jitter_mesh(structured_simplicial_mesh(2, 5), 0.15, 9);
  KernelConfig config;
  config.element_batch_size = 16;
  config.precision = Precision::f64;
  const PackedGeometry packed = pack_geometry(mesh, config);
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
  {
    const GeometryTensor g = geometry_tensor(element_jacobian(mesh, e));
    const std::int64_t batch = e / config.element_batch_size;
    const int slot = static_cast<int>(e % config.element_batch_size);
    for (int mu = 0; mu < 2; ++mu)
      for (int nu = 0; nu < 2; ++nu)
        CHECK(scalar_array_at(packed.data,
                              packed_geometry_index(2, 16, batch, slot, mu, nu))
              == g.entry(mu, nu));
  }
}

TEST_CASE("single-precision packing casts each entry")
{
  const Mesh mesh = jitter_mesh(structured_simplicial_mesh(2, 3), 0.15, 5);
  KernelConfig config;
  config.element_batch_size = 8;
  config.precision = Precision::f32;
  const PackedGeometry packed = pack_geometry(mesh, config);
  CHECK(packed.precision == Precision::f32);
  const GeometryTensor g = geometry_tensor(element_jacobian(mesh, 0));
  for (int t = 0; t < 4; ++t)
    CHECK(scalar_array_at(packed.data, t)
          == static_cast<double>(static_cast<float>(g.g[t])));
}

TEST_CASE("mesh text io round-trips")
{
  const Mesh mesh = jitter_mesh(structured_simplicial_mesh(2, 3), 0.15, 13);
  std::stringstream ss;
  write_mesh_text(ss, mesh);
  const Mesh back = read_mesh_text(ss);
  CHECK(back.dim == mesh.dim);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.cells.size() == mesh.cells.size());
  for (std::size_t t = 0; t < mesh.vertices.size(); ++t)
    CHECK(back.vertices[t] == mesh.vertices[t]);
  for (std::size_t t = 0; t < mesh.cells.size(); ++t)
    CHECK(back.cells[t] == mesh.cells[t]);
}

TEST_CASE("mesh text reader rejects malformed input")
{
  std::stringstream empty("");
  CHECK_THROWS_AS(read_mesh_text(empty), std::runtime_error);
  std::stringstream truncated("2 3 1\n0 0\n1 0\n");
  CHECK_THROWS_AS(read_mesh_text(truncated), std::runtime_error);
}

TEST_CASE("mesh validation catches out-of-range cell indices")
{
  Mesh mesh = testutil::reference_element_mesh(2);
  mesh.cells[2] = 9;
  CHECK_THROWS_AS(validate_mesh(mesh), std::invalid_argument);
}
