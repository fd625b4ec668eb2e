#pragma once

#include <cstddef>
#include <vector>

namespace fembatch {

/// Canonical unit simplex: triangle (0,0),(1,0),(0,1) or tetrahedron
/// (0,0,0),(1,0,0),(0,1,0),(0,0,1).
struct ReferenceCell {
  int dim = 0;
  std::vector<double> vertices;  ///< dim+1 vertices, dim coordinates each
  double volume = 0.0;
};

/// Quadrature rule on the reference simplex, exact for all polynomials of
/// total degree <= degree. Weights sum to the cell volume.
struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<double> points;   ///< num_points() x dim, row-major
  std::vector<double> weights;  ///< num_points()

  int num_points() const { return static_cast<int>(weights.size()); }
  double point(int q, int c) const
  {
    return points[static_cast<std::size_t>(q) * dim + c];
  }
};

/// Values and reference-space gradients of the P1 Lagrange basis at the
/// points of one quadrature rule.
struct TabulatedBasis {
  int dim = 0;
  int num_basis_funcs = 0;
  int num_points = 0;
  std::vector<double> values;     ///< [function][point]
  std::vector<double> gradients;  ///< [function][point][direction]

  double value(int f, int q) const
  {
    return values[static_cast<std::size_t>(f) * num_points + q];
  }
  double gradient(int f, int q, int d) const
  {
    return gradients[(static_cast<std::size_t>(f) * num_points + q) * dim + d];
  }
};

/// Reference simplex for dim in {2, 3}.
ReferenceCell make_reference_cell(int dim);

/// Tabulated symmetric simplex rule for degree in {1, 2, 3}. Throws
/// std::invalid_argument for degrees outside the table.
QuadratureRule make_quadrature(int dim, int degree);

/// Tabulate the dim+1 barycentric hat functions at the rule points.
TabulatedBasis tabulate_p1_basis(const ReferenceCell& cell,
                                 const QuadratureRule& rule);

}  // namespace fembatch
