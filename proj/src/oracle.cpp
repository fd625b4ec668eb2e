#include "fembatch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fembatch/reference.hpp"

namespace fembatch {

namespace {

// Quadrature degree sufficient for the exact integrand of each form: the
// coefficient-free forms integrate products of two (constant-gradient)
// pullbacks against an affine Jacobian, the coefficient form adds one P1
// value factor.
int oracle_quadrature_degree(const FormSpec& spec)
{
  return spec.coefficient_arity == 0 ? 2 : 3;
}

}  // namespace

std::vector<double> assemble_element_direct(const FormSpec& spec,
                                            std::span<const double> vertex_coords,
                                            std::span<const double> coefficients)
{
  const int dim = spec.dim;
  const int nb = spec.num_basis_funcs;
  const int krows = spec.krows();
  if (std::ssize(vertex_coords) != static_cast<std::int64_t>(dim + 1) * dim)
    throw std::invalid_argument("wrong vertex coordinate count");
  if (spec.coefficient_arity == 0)
  {
    if (!coefficients.empty())
      throw std::invalid_argument("form takes no coefficients");
  }
  else if (std::ssize(coefficients) != nb)
    throw std::invalid_argument("form needs one nodal value per basis function");

  const ElementJacobian jac
      = jacobian_from_vertices(dim, vertex_coords.data());
  const ReferenceCell cell = make_reference_cell(dim);
  const QuadratureRule rule = make_quadrature(dim, oracle_quadrature_degree(spec));
  const TabulatedBasis basis = tabulate_p1_basis(cell, rule);

  std::vector<double> m(static_cast<std::size_t>(krows) * krows, 0.0);

  // Physical gradients by pullback: pg[alpha] = sum_mu jinv[mu][alpha] rg[mu].
  std::vector<double> pg(static_cast<std::size_t>(nb) * dim);
  for (int q = 0; q < rule.num_points(); ++q)
  {
    for (int f = 0; f < nb; ++f)
      for (int alpha = 0; alpha < dim; ++alpha)
      {
        double s = 0.0;
        for (int mu = 0; mu < dim; ++mu)
          s += jac.jinv[mu * dim + alpha] * basis.gradient(f, q, mu);
        pg[static_cast<std::size_t>(f) * dim + alpha] = s;
      }

    double wq = rule.weights[q] * jac.det;
    if (spec.coefficient_arity == 1)
    {
      double field = 0.0;
      for (int k = 0; k < nb; ++k)
        field += coefficients[k] * basis.value(k, q);
      wq *= field;
    }

    if (spec.num_components == 1)
    {
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
        {
          double dot = 0.0;
          for (int alpha = 0; alpha < dim; ++alpha)
            dot += pg[static_cast<std::size_t>(i) * dim + alpha]
                   * pg[static_cast<std::size_t>(j) * dim + alpha];
          m[static_cast<std::size_t>(i) * krows + j] += wq * dot;
        }
    }
    else
    {
      // Vector-valued form: one quarter of the scalar stiffness integrand
      // on diagonal component pairs (c == d), zero elsewhere. Multi-indices
      // flatten as i = a + c * nb.
      for (int c = 0; c < spec.num_components; ++c)
        for (int d = 0; d < spec.num_components; ++d)
          for (int a = 0; a < nb; ++a)
            for (int b = 0; b < nb; ++b)
            {
              double val = 0.0;
              if (c == d)
              {
                double dot = 0.0;
                for (int alpha = 0; alpha < dim; ++alpha)
                  dot += pg[static_cast<std::size_t>(a) * dim + alpha]
                         * pg[static_cast<std::size_t>(b) * dim + alpha];
                val = 0.25 * dot;
              }
              const int i = a + c * nb;
              const int j = b + d * nb;
              m[static_cast<std::size_t>(i) * krows + j] += wq * val;
            }
    }
  }
  return m;
}

OracleReport verify(const ElementMatrixStore& store, const Mesh& mesh,
                    const FormSpec& spec, const KernelConfig& config,
                    const CoefficientField* coefficients, double tolerance)
{
  if (mesh.num_elements() != store.num_elements)
    throw std::invalid_argument("store and mesh disagree on element count");

  OracleReport report;
  report.tolerance = tolerance;

  const int dim = spec.dim;
  const int nb = spec.num_basis_funcs;
  const int krows = spec.krows();
  std::vector<double> coords(static_cast<std::size_t>(dim + 1) * dim);

  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
  {
    for (int k = 0; k <= dim; ++k)
    {
      const std::int32_t v = mesh.cell_vertex(e, k);
      for (int c = 0; c < dim; ++c)
        coords[static_cast<std::size_t>(k) * dim + c] = mesh.vertex(v, c);
    }

    std::span<const double> w;
    if (spec.coefficient_arity == 1)
    {
      if (coefficients == nullptr)
        throw std::invalid_argument("form requires a coefficient field");
      w = std::span<const double>(coefficients->values)
              .subspan(static_cast<std::size_t>(e) * nb, nb);
    }

    const std::vector<double> exact = assemble_element_direct(spec, coords, w);
    const std::vector<double> got
        = unpack_element_matrix(store, config, spec, e);

    for (int i = 0; i < krows; ++i)
      for (int j = 0; j < krows; ++j)
      {
        const double o = exact[static_cast<std::size_t>(i) * krows + j];
        const double v = got[static_cast<std::size_t>(i) * krows + j];
        const double abs_err = std::abs(v - o);
        const double rel_err = abs_err / std::max(std::abs(o), 1e-14);
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        if (rel_err > report.max_rel_error)
        {
          report.max_rel_error = rel_err;
          report.worst_element = e;
          report.worst_test_index = i;
          report.worst_trial_index = j;
        }
      }
  }

  report.passed = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace fembatch
