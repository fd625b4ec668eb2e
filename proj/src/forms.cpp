#include "fembatch/forms.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fembatch {

const char* operator_name(Operator op)
{
  switch (op)
  {
  case Operator::laplacian:
    return "laplacian";
  case Operator::elasticity:
    return "elasticity";
  case Operator::weighted_laplacian:
    return "weighted-laplacian";
  }
  throw std::invalid_argument("unknown operator");
}

Operator operator_from_name(std::string_view name)
{
  if (name == "laplacian")
    return Operator::laplacian;
  if (name == "elasticity")
    return Operator::elasticity;
  if (name == "weighted-laplacian")
    return Operator::weighted_laplacian;
  throw std::invalid_argument("unknown operator name: " + std::string(name));
}

FormSpec make_form_spec(Operator op, int dim)
{
  if (dim != 2 and dim != 3)
    throw std::invalid_argument("unsupported spatial dimension "
                                + std::to_string(dim));
  FormSpec spec;
  spec.op = op;
  spec.dim = dim;
  spec.num_basis_funcs = dim + 1;
  spec.num_components = op == Operator::elasticity ? dim : 1;
  spec.coefficient_arity = op == Operator::weighted_laplacian ? 1 : 0;
  spec.geometry_arity = 2;
  return spec;
}

std::int64_t AnalyticTensor::block_offset(int i, int j, int k) const
{
  const std::int64_t kidx = i + static_cast<std::int64_t>(j) * spec.krows();
  return (kidx * spec.num_coefficient_blocks() + k) * spec.dim * spec.dim;
}

double AnalyticTensor::entry(int i, int j, int k, int mu, int nu) const
{
  return blocks[block_offset(i, j, k) + mu * spec.dim + nu];
}

JetProductTensor integrate_jet_product(const TabulatedBasis& basis,
                                       const QuadratureRule& rule,
                                       std::span<const JetFactor> factors)
{
  if (factors.empty())
    throw std::invalid_argument("jet product needs at least one factor");
  if (basis.dim != rule.dim or basis.num_points != rule.num_points())
    throw std::invalid_argument("basis was tabulated for a different rule");

  int num_slots = 0;
  for (const JetFactor& f : factors)
  {
    if (f.slot < 0)
      throw std::invalid_argument("negative basis slot");
    num_slots = std::max(num_slots, f.slot + 1);
  }
  std::vector<char> seen(num_slots, 0);
  for (const JetFactor& f : factors)
    seen[f.slot] = 1;
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument("factor slots must cover 0..S-1");

  // P1 values are degree 1, P1 derivatives degree 0.
  int integrand_degree = 0;
  for (const JetFactor& f : factors)
    if (f.part == JetPart::value)
      integrand_degree += 1;
  if (rule.degree < integrand_degree)
    throw std::invalid_argument(
        "quadrature degree " + std::to_string(rule.degree)
        + " insufficient for integrand degree "
        + std::to_string(integrand_degree));

  const int nb = basis.num_basis_funcs;
  const int dim = basis.dim;
  const int num_factors = static_cast<int>(factors.size());

  JetProductTensor result;
  for (int s = 0; s < num_slots; ++s)
    result.extents.push_back(nb);
  for (const JetFactor& f : factors)
    if (f.part == JetPart::gradient)
      result.extents.push_back(dim);

  std::int64_t total = 1;
  for (int e : result.extents)
    total *= e;
  result.data.assign(total, 0.0);

  std::vector<int> index(result.extents.size());
  for (std::int64_t flat = 0; flat < total; ++flat)
  {
    std::int64_t rest = flat;
    for (int d = static_cast<int>(index.size()) - 1; d >= 0; --d)
    {
      index[d] = static_cast<int>(rest % result.extents[d]);
      rest /= result.extents[d];
    }

    double sum = 0.0;
    for (int q = 0; q < rule.num_points(); ++q)
    {
      double product = 1.0;
      int grad_pos = num_slots;
      for (int fi = 0; fi < num_factors; ++fi)
      {
        const JetFactor& f = factors[fi];
        if (f.part == JetPart::value)
          product *= basis.value(index[f.slot], q);
        else
          product *= basis.gradient(index[f.slot], q, index[grad_pos++]);
      }
      sum += rule.weights[q] * product;
    }
    result.data[flat] = sum;
  }
  return result;
}

namespace {

// Scalar gradient-gradient jet T[i][j][mu][nu] shared by all three builders.
JetProductTensor gradient_pair_jet(int dim, const QuadratureRule& rule)
{
  const ReferenceCell cell = make_reference_cell(dim);
  const TabulatedBasis basis = tabulate_p1_basis(cell, rule);
  const JetFactor factors[] = {{0, JetPart::gradient}, {1, JetPart::gradient}};
  return integrate_jet_product(basis, rule, factors);
}

}  // namespace

AnalyticTensor build_k_laplacian(int dim)
{
  const FormSpec spec = make_form_spec(Operator::laplacian, dim);
  const QuadratureRule rule = make_quadrature(dim, 2);
  const JetProductTensor t = gradient_pair_jet(dim, rule);

  const int nb = spec.num_basis_funcs;
  AnalyticTensor k{spec, std::vector<double>(
                             static_cast<std::size_t>(spec.krows())
                             * spec.krows() * dim * dim)};
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j)
      for (int mu = 0; mu < dim; ++mu)
        for (int nu = 0; nu < dim; ++nu)
          k.blocks[k.block_offset(i, j) + mu * dim + nu]
              = t.data[((static_cast<std::size_t>(i) * nb + j) * dim + mu) * dim
                       + nu];
  return k;
}

AnalyticTensor build_k_elasticity(int dim)
{
  const FormSpec spec = make_form_spec(Operator::elasticity, dim);
  const QuadratureRule rule = make_quadrature(dim, 2);
  const JetProductTensor t = gradient_pair_jet(dim, rule);

  const int nb = spec.num_basis_funcs;
  AnalyticTensor k{spec, std::vector<double>(
                             static_cast<std::size_t>(spec.krows())
                             * spec.krows() * dim * dim)};
  // Vector basis v_(a,c) = phi_a e_c; component gradients are diagonal in
  // (c, d), so only those blocks are nonzero.
  for (int a = 0; a < nb; ++a)
    for (int b = 0; b < nb; ++b)
      for (int c = 0; c < dim; ++c)
      {
        const int i = a + c * nb;
        const int j = b + c * nb;
        for (int mu = 0; mu < dim; ++mu)
          for (int nu = 0; nu < dim; ++nu)
            k.blocks[k.block_offset(i, j) + mu * dim + nu]
                = 0.25
                  * t.data[((static_cast<std::size_t>(a) * nb + b) * dim + mu)
                               * dim
                           + nu];
      }
  return k;
}

AnalyticTensor build_k_weighted_laplacian(int dim)
{
  const FormSpec spec = make_form_spec(Operator::weighted_laplacian, dim);
  const QuadratureRule rule = make_quadrature(dim, 2);
  const ReferenceCell cell = make_reference_cell(dim);
  const TabulatedBasis basis = tabulate_p1_basis(cell, rule);
  const JetFactor factors[] = {{0, JetPart::gradient},
                               {1, JetPart::gradient},
                               {2, JetPart::value}};
  const JetProductTensor t = integrate_jet_product(basis, rule, factors);

  const int nb = spec.num_basis_funcs;
  AnalyticTensor k{spec, std::vector<double>(
                             static_cast<std::size_t>(spec.krows())
                             * spec.krows() * nb * dim * dim)};
  // t is indexed [i][j][k][mu][nu] (slots first, directions after).
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j)
      for (int c = 0; c < nb; ++c)
        for (int mu = 0; mu < dim; ++mu)
          for (int nu = 0; nu < dim; ++nu)
            k.blocks[k.block_offset(i, j, c) + mu * dim + nu]
                = t.data[(((static_cast<std::size_t>(i) * nb + j) * nb + c)
                              * dim
                          + mu)
                             * dim
                         + nu];
  return k;
}

AnalyticTensor build_analytic_tensor(Operator op, int dim)
{
  switch (op)
  {
  case Operator::laplacian:
    return build_k_laplacian(dim);
  case Operator::elasticity:
    return build_k_elasticity(dim);
  case Operator::weighted_laplacian:
    return build_k_weighted_laplacian(dim);
  }
  throw std::invalid_argument("unknown operator");
}

void dump_analytic_tensor(std::ostream& os, const AnalyticTensor& k)
{
  const FormSpec& spec = k.spec;
  const int dim = spec.dim;
  os << "# " << operator_name(spec.op) << " dim=" << dim
     << " krows=" << spec.krows()
     << " coefficient_blocks=" << spec.num_coefficient_blocks() << "\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < spec.krows(); ++i)
    for (int j = 0; j < spec.krows(); ++j)
      for (int c = 0; c < spec.num_coefficient_blocks(); ++c)
      {
        os << "block i=" << i << " j=" << j;
        if (spec.coefficient_arity > 0)
          os << " k=" << c;
        os << "\n";
        for (int mu = 0; mu < dim; ++mu)
        {
          for (int nu = 0; nu < dim; ++nu)
            os << (nu == 0 ? "" : " ") << k.entry(i, j, c, mu, nu);
          os << "\n";
        }
        os << "\n";
      }
}

}  // namespace fembatch
