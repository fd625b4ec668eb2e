#include "fembatch/kernel_config.hpp"

#include <stdexcept>
#include <string>

namespace fembatch {

const char* precision_name(Precision p)
{
  return p == Precision::f32 ? "f32" : "f64";
}

Precision precision_from_name(std::string_view name)
{
  if (name == "f32")
    return Precision::f32;
  if (name == "f64")
    return Precision::f64;
  throw std::invalid_argument("unknown precision name: " + std::string(name));
}

std::int64_t scalar_array_size(const ScalarArray& a)
{
  return std::visit(
      [](const auto& v) { return static_cast<std::int64_t>(v.size()); }, a);
}

double scalar_array_at(const ScalarArray& a, std::int64_t index)
{
  return std::visit(
      [index](const auto& v)
      { return static_cast<double>(v[static_cast<std::size_t>(index)]); },
      a);
}

ScalarArray make_scalar_array(Precision p, std::int64_t size)
{
  if (p == Precision::f32)
    return std::vector<float>(static_cast<std::size_t>(size));
  return std::vector<double>(static_cast<std::size_t>(size));
}

void KernelConfig::validate() const
{
  if (element_batch_size < 1)
    throw std::invalid_argument("element_batch_size must be positive");
  if (num_concurrent_elements < 1)
    throw std::invalid_argument("num_concurrent_elements must be positive");
  if (element_batch_size % num_concurrent_elements != 0)
    throw std::invalid_argument(
        "num_concurrent_elements ("
        + std::to_string(num_concurrent_elements)
        + ") must divide element_batch_size ("
        + std::to_string(element_batch_size) + ")");
}

}  // namespace fembatch
