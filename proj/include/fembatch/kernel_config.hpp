#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

namespace fembatch {

enum class Precision { f32, f64 };

const char* precision_name(Precision p);
Precision precision_from_name(std::string_view name);

/// Scalar storage in engine precision.
using ScalarArray = std::variant<std::vector<float>, std::vector<double>>;

std::int64_t scalar_array_size(const ScalarArray& a);
double scalar_array_at(const ScalarArray& a, std::int64_t index);
ScalarArray make_scalar_array(Precision p, std::int64_t size);

/// Kernel tuning axes. Variants differ only in speed, never in values.
struct KernelConfig {
  int element_batch_size = 128;      ///< elements integrated per batch
  int num_concurrent_elements = 1;   ///< elements advanced together per step
  bool interleave_stores = false;    ///< write each result as computed
  bool loop_unroll = false;          ///< straight-line contraction body
  Precision precision = Precision::f64;

  int serial_batch_size() const
  {
    return element_batch_size / num_concurrent_elements;
  }
  /// Throws std::invalid_argument unless both sizes are positive and
  /// num_concurrent_elements divides element_batch_size.
  void validate() const;
};

}  // namespace fembatch
