#include "fembatch/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fembatch {

namespace {

void check_dim(int dim)
{
  if (dim != 2 and dim != 3)
    throw std::invalid_argument("unsupported spatial dimension "
                                + std::to_string(dim) + " (expected 2 or 3)");
}

}  // namespace

ReferenceCell make_reference_cell(int dim)
{
  check_dim(dim);
  ReferenceCell cell;
  cell.dim = dim;
  if (dim == 2)
  {
    cell.vertices = {0.0, 0.0, 1.0, 0.0, 0.0, 1.0};
    cell.volume = 0.5;
  }
  else
  {
    cell.vertices = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0,
                     0.0, 1.0, 0.0, 0.0, 0.0, 1.0};
    cell.volume = 1.0 / 6.0;
  }
  return cell;
}

QuadratureRule make_quadrature(int dim, int degree)
{
  check_dim(dim);
  if (degree < 1)
    throw std::invalid_argument("quadrature degree must be >= 1");
  if (degree > 3)
    throw std::invalid_argument("no tabulated simplex rule for degree "
                                + std::to_string(degree) + " (table covers 1..3)");

  QuadratureRule rule;
  rule.dim = dim;
  rule.degree = degree;
  if (dim == 2)
  {
    switch (degree)
    {
    case 1:
      rule.points = {1.0 / 3.0, 1.0 / 3.0};
      rule.weights = {1.0 / 2.0};
      break;
    case 2:
      rule.points = {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0,
                     1.0 / 6.0, 2.0 / 3.0};
      rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
      break;
    case 3:
      rule.points = {1.0 / 3.0, 1.0 / 3.0, 3.0 / 5.0, 1.0 / 5.0,
                     1.0 / 5.0, 3.0 / 5.0, 1.0 / 5.0, 1.0 / 5.0};
      rule.weights = {-27.0 / 96.0, 25.0 / 96.0, 25.0 / 96.0, 25.0 / 96.0};
      break;
    }
  }
  else
  {
    switch (degree)
    {
    case 1:
      rule.points = {1.0 / 4.0, 1.0 / 4.0, 1.0 / 4.0};
      rule.weights = {1.0 / 6.0};
      break;
    case 2:
    {
      const double a = (5.0 - std::sqrt(5.0)) / 20.0;
      const double b = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
      rule.points = {a, a, a, b, a, a, a, b, a, a, a, b};
      rule.weights = {1.0 / 24.0, 1.0 / 24.0, 1.0 / 24.0, 1.0 / 24.0};
      break;
    }
    case 3:
      rule.points = {1.0 / 4.0, 1.0 / 4.0, 1.0 / 4.0, 1.0 / 6.0, 1.0 / 6.0,
                     1.0 / 6.0, 1.0 / 2.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0,
                     1.0 / 2.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 2.0};
      rule.weights = {-2.0 / 15.0, 3.0 / 40.0, 3.0 / 40.0, 3.0 / 40.0,
                      3.0 / 40.0};
      break;
    }
  }
  return rule;
}

TabulatedBasis tabulate_p1_basis(const ReferenceCell& cell,
                                 const QuadratureRule& rule)
{
  if (cell.dim != rule.dim)
    throw std::invalid_argument("cell and rule dimensions differ");

  const int dim = cell.dim;
  const int nb = dim + 1;
  const int nq = rule.num_points();

  TabulatedBasis basis;
  basis.dim = dim;
  basis.num_basis_funcs = nb;
  basis.num_points = nq;
  basis.values.resize(static_cast<std::size_t>(nb) * nq);
  basis.gradients.assign(static_cast<std::size_t>(nb) * nq * dim, 0.0);

  for (int q = 0; q < nq; ++q)
  {
    double first = 1.0;
    for (int d = 0; d < dim; ++d)
    {
      const double xi = rule.point(q, d);
      first -= xi;
      basis.values[static_cast<std::size_t>(d + 1) * nq + q] = xi;
    }
    basis.values[q] = first;
  }

  // Hat-function gradients are constant over the cell.
  for (int q = 0; q < nq; ++q)
  {
    for (int d = 0; d < dim; ++d)
    {
      basis.gradients[static_cast<std::size_t>(q) * dim + d] = -1.0;
      basis.gradients[(static_cast<std::size_t>(d + 1) * nq + q) * dim + d] = 1.0;
    }
  }
  return basis;
}

}  // namespace fembatch
