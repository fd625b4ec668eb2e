#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fembatch/forms.hpp"
#include "fembatch/geometry.hpp"
#include "fembatch/kernel_config.hpp"

namespace fembatch {

/// Upper bound on krows^2 * num_concurrent_elements, the number of logical
/// work items advanced together per batch step.
inline constexpr int work_group_bound = 1024;

/// An executable contraction kernel with every tuning axis frozen and the
/// analytic tensor cast to engine precision.
struct KernelVariant {
  FormSpec spec;
  KernelConfig config;
  ScalarArray k;            ///< engine-precision copy of AnalyticTensor blocks
  std::string description;  ///< e.g. "bs128_ce2_is_unroll"
};

/// Element matrices in the batched output layout. Entry (batch g, serial
/// step b, concurrent slot z, test i, trial j) lives at flat index
///   g * krows^2 * element_batch_size
///     + b * (num_concurrent_elements * krows^2)
///     + z * krows^2 + i + j*krows
/// and covers batch-local element b * num_concurrent_elements + z. Slots for
/// padding elements are present but their values are unspecified.
struct ElementMatrixStore {
  int dim = 0;
  int krows = 0;
  int element_batch_size = 0;
  int num_concurrent_elements = 0;
  std::int64_t num_batches = 0;
  std::int64_t num_elements = 0;  ///< real elements, excluding padding
  Precision precision = Precision::f64;
  ScalarArray data;
};

/// Flat index of entry (i, j) of one element's matrix in the store layout.
std::int64_t element_matrix_index(int krows, int element_batch_size,
                                  int num_concurrent_elements,
                                  std::int64_t element, int i, int j);

/// Per-element nodal values of a P1 coefficient field, element-major:
/// values[e * num_basis_funcs + k].
struct CoefficientField {
  int num_basis_funcs = 0;
  std::vector<double> values;
};

/// Validate the config against the form and freeze a kernel variant.
/// Throws on divisibility violations, on krows^2 * num_concurrent_elements
/// exceeding work_group_bound, and on a tensor/spec mismatch.
KernelVariant specialize_kernel(const FormSpec& spec, const AnalyticTensor& k,
                                const KernelConfig& config);

/// Contract every batch of geometry tensors with the variant's analytic
/// tensor. Results are bitwise identical for identical inputs across all
/// variants of the same precision and any worker count. `coefficients` is
/// required exactly when the form has coefficient arity 1.
ElementMatrixStore integrate_batches(const KernelVariant& variant,
                                     const PackedGeometry& geom,
                                     const CoefficientField* coefficients = nullptr,
                                     int workers = 1);

/// Documented counting rule for reported flop rates: per real element,
/// krows^2 * 2*dim^2 for coefficient-free forms and
/// krows^2 * num_basis_funcs * (2*dim^2 + 2) for arity-1 forms.
std::int64_t flop_count(const FormSpec& spec, const KernelConfig& config,
                        std::int64_t num_elements);

/// Row-major krows x krows matrix (test index i = row) of one real element,
/// converted to double.
std::vector<double> unpack_element_matrix(const ElementMatrixStore& store,
                                          const KernelConfig& config,
                                          const FormSpec& spec,
                                          std::int64_t element);

/// Binary dump: 8-byte magic, then dim, krows, element_batch_size,
/// num_concurrent_elements (u32), num_elements (u64), precision code (u32,
/// 0 = f32, 1 = f64), then the flat scalar array, all little-endian.
void write_store(std::ostream& os, const ElementMatrixStore& store);
ElementMatrixStore read_store(std::istream& is);

}  // namespace fembatch
