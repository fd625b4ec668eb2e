#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "fembatch/reference.hpp"

namespace fembatch {

enum class Operator { laplacian, elasticity, weighted_laplacian };

const char* operator_name(Operator op);
Operator operator_from_name(std::string_view name);

/// Shape of a bilinear form's element tensor. Test/trial indices run over
/// krows() = num_basis_funcs * num_components; vector-valued forms flatten
/// the multi-index (a, c) as a + c * num_basis_funcs.
struct FormSpec {
  Operator op = Operator::laplacian;
  int dim = 0;
  int num_components = 1;
  int num_basis_funcs = 0;
  int coefficient_arity = 0;  ///< number of P1 coefficient fields (0 or 1)
  int geometry_arity = 2;     ///< rank of the geometric tensor contraction

  int krows() const { return num_basis_funcs * num_components; }
  int num_coefficient_blocks() const
  {
    return coefficient_arity == 0 ? 1 : num_basis_funcs;
  }
  friend bool operator==(const FormSpec&, const FormSpec&) = default;
};

FormSpec make_form_spec(Operator op, int dim);

/// Mesh-independent analytic tensor K, stored as dim x dim blocks.
///
/// Flat layout: block index Kidx = i + j * krows (i test, j trial), then the
/// coefficient index k (innermost among (i, j, k) when present), then the
/// row-major (mu, nu) block:
///   offset(i, j, k, mu, nu) =
///     ((i + j*krows) * num_coefficient_blocks + k) * dim*dim + mu*dim + nu
/// For coefficient-free forms this reduces to Kidx * dim * dim.
struct AnalyticTensor {
  FormSpec spec;
  std::vector<double> blocks;

  std::int64_t block_offset(int i, int j, int k = 0) const;
  double entry(int i, int j, int k, int mu, int nu) const;
};

AnalyticTensor build_k_laplacian(int dim);
AnalyticTensor build_k_elasticity(int dim);
AnalyticTensor build_k_weighted_laplacian(int dim);
AnalyticTensor build_analytic_tensor(Operator op, int dim);

/// One factor of a basis-jet product: the basis function occupying `slot`
/// enters either by value or by one free reference-space derivative.
enum class JetPart { value, gradient };

struct JetFactor {
  int slot = 0;
  JetPart part = JetPart::value;
};

/// Row-major result tensor of integrate_jet_product: one basis index per
/// slot (in slot order), then one direction index per gradient factor (in
/// factor order).
struct JetProductTensor {
  std::vector<int> extents;
  std::vector<double> data;
};

/// Exact quadrature of a product of basis values/derivatives over the
/// reference cell. Throws if the rule degree is below the integrand degree.
JetProductTensor integrate_jet_product(const TabulatedBasis& basis,
                                       const QuadratureRule& rule,
                                       std::span<const JetFactor> factors);

/// Plain-text dump of K: one block per stanza, row-major rows.
void dump_analytic_tensor(std::ostream& os, const AnalyticTensor& k);

}  // namespace fembatch
