#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fembatch/engine.hpp"

namespace fembatch {

/// Worst-case comparison between an engine store and the direct oracle.
/// Relative error uses max(|oracle entry|, 1e-14) as denominator.
struct OracleReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::int64_t worst_element = -1;
  int worst_test_index = -1;
  int worst_trial_index = -1;
  double tolerance = 0.0;
  bool passed = false;
};

/// One element matrix by direct quadrature in physical space: the integrand
/// is evaluated per quadrature point from pulled-back basis gradients
/// (J^-T grad), never through the geometric or analytic tensors. All
/// arithmetic is double precision. `vertex_coords` holds (dim+1)*dim packed
/// coordinates; `coefficients` holds num_basis_funcs nodal values for
/// arity-1 forms and must be empty otherwise.
std::vector<double> assemble_element_direct(
    const FormSpec& spec, std::span<const double> vertex_coords,
    std::span<const double> coefficients = {});

/// Compare every real element of the store against the direct oracle.
OracleReport verify(const ElementMatrixStore& store, const Mesh& mesh,
                    const FormSpec& spec, const KernelConfig& config,
                    const CoefficientField* coefficients, double tolerance);

}  // namespace fembatch
