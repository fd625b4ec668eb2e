#include "fembatch/engine.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

namespace fembatch {

namespace {

static_assert(std::endian::native == std::endian::little,
              "store files are defined little-endian");

/// Runtime loop bounds frozen into a kernel invocation.
struct KernelDims {
  int dim = 0;
  int krows = 0;
  int ncoef = 0;  ///< coefficient blocks per (i, j) pair
  int batch = 0;  ///< elements per batch
  int ce = 0;     ///< elements advanced together per step
  int sbs = 0;    ///< serial steps per batch (batch / ce)
};

// The accumulation below is the single numerical contract of the engine:
// every variant issues the same scalar operations in the same order, so all
// results agree bitwise for a given precision. Unrolled bodies replay the
// loop order through a comma fold; rolled bodies pin the loop shape so the
// optimizer cannot restructure the reduction.

template <class Scalar, int Dim, bool Unroll>
inline Scalar contract_block(const Scalar* g, const Scalar* k)
{
  Scalar acc = Scalar(0);
  if constexpr (Unroll)
  {
    [&]<std::size_t... T>(std::index_sequence<T...>)
    { ((acc += g[T] * k[T]), ...); }(std::make_index_sequence<Dim * Dim>{});
  }
  else
  {
#pragma GCC unroll 1
    for (int t = 0; t < Dim * Dim; ++t)
      acc += g[t] * k[t];
  }
  return acc;
}

template <class Scalar, int Dim, std::size_t C>
inline void accumulate_weighted_block(Scalar& acc, const Scalar* g,
                                      const Scalar* k, const Scalar* w)
{
  [&]<std::size_t... T>(std::index_sequence<T...>)
  { ((acc += (w[C] * g[T]) * k[C * Dim * Dim + T]), ...); }(
      std::make_index_sequence<Dim * Dim>{});
}

template <class Scalar, int Dim, bool Unroll>
inline Scalar contract_block_weighted(const Scalar* g, const Scalar* k,
                                      const Scalar* w)
{
  // k points at Dim+1 consecutive dim x dim blocks for one (i, j) pair.
  Scalar acc = Scalar(0);
  if constexpr (Unroll)
  {
    [&]<std::size_t... C>(std::index_sequence<C...>)
    { (accumulate_weighted_block<Scalar, Dim, C>(acc, g, k, w), ...); }(
        std::make_index_sequence<Dim + 1>{});
  }
  else
  {
#pragma GCC unroll 1
    for (int c = 0; c < Dim + 1; ++c)
    {
      const Scalar wc = w[c];
      const Scalar* kb = k + c * Dim * Dim;
#pragma GCC unroll 1
      for (int t = 0; t < Dim * Dim; ++t)
        acc += (wc * g[t]) * kb[t];
    }
  }
  return acc;
}

template <class Scalar, int Dim, bool Interleave, bool Unroll, bool Weighted>
void run_batches(const void* gv, const void* kv, const void* wv, void* outv,
                 const KernelDims& d, std::int64_t batch_begin,
                 std::int64_t batch_end, void* scratchv)
{
  const Scalar* g = static_cast<const Scalar*>(gv);
  const Scalar* k = static_cast<const Scalar*>(kv);
  const Scalar* w = static_cast<const Scalar*>(wv);
  Scalar* out = static_cast<Scalar*>(outv);
  Scalar* serial = static_cast<Scalar*>(scratchv);

  constexpr int dd = Dim * Dim;
  constexpr int ncoef = Weighted ? Dim + 1 : 1;
  const int nk = d.krows * d.krows;
  const std::int64_t gstride = static_cast<std::int64_t>(dd) * d.batch;
  const std::int64_t wstride = static_cast<std::int64_t>(ncoef) * d.batch;
  const std::int64_t estride = static_cast<std::int64_t>(nk) * d.batch;

  for (std::int64_t gb = batch_begin; gb < batch_end; ++gb)
  {
    const Scalar* gbase = g + gb * gstride;
    const Scalar* wbase = Weighted ? w + gb * wstride : nullptr;
    Scalar* obase = out + gb * estride;
    for (int kidx = 0; kidx < nk; ++kidx)
    {
      const Scalar* kblk = k + static_cast<std::int64_t>(kidx) * ncoef * dd;
      for (int z = 0; z < d.ce; ++z)
      {
        if constexpr (Interleave)
        {
          for (int b = 0; b < d.sbs; ++b)
          {
            const int e = b * d.ce + z;
            Scalar val;
            if constexpr (Weighted)
              val = contract_block_weighted<Scalar, Dim, Unroll>(
                  gbase + e * dd, kblk, wbase + e * ncoef);
            else
              val = contract_block<Scalar, Dim, Unroll>(gbase + e * dd, kblk);
            obase[static_cast<std::int64_t>(e) * nk + kidx] = val;
          }
        }
        else
        {
          for (int b = 0; b < d.sbs; ++b)
          {
            const int e = b * d.ce + z;
            if constexpr (Weighted)
              serial[b] = contract_block_weighted<Scalar, Dim, Unroll>(
                  gbase + e * dd, kblk, wbase + e * ncoef);
            else
              serial[b]
                  = contract_block<Scalar, Dim, Unroll>(gbase + e * dd, kblk);
          }
          for (int b = 0; b < d.sbs; ++b)
            obase[static_cast<std::int64_t>(b * d.ce + z) * nk + kidx]
                = serial[b];
        }
      }
    }
  }
}

using RunFn = void (*)(const void*, const void*, const void*, void*,
                       const KernelDims&, std::int64_t, std::int64_t, void*);

template <class Scalar, int Dim, bool Interleave, bool Unroll>
RunFn pick_weighted(bool weighted)
{
  return weighted ? &run_batches<Scalar, Dim, Interleave, Unroll, true>
                  : &run_batches<Scalar, Dim, Interleave, Unroll, false>;
}

template <class Scalar, int Dim, bool Interleave>
RunFn pick_unroll(bool unroll, bool weighted)
{
  return unroll ? pick_weighted<Scalar, Dim, Interleave, true>(weighted)
                : pick_weighted<Scalar, Dim, Interleave, false>(weighted);
}

template <class Scalar, int Dim>
RunFn pick_interleave(bool interleave, bool unroll, bool weighted)
{
  return interleave ? pick_unroll<Scalar, Dim, true>(unroll, weighted)
                    : pick_unroll<Scalar, Dim, false>(unroll, weighted);
}

template <class Scalar>
RunFn pick_dim(int dim, bool interleave, bool unroll, bool weighted)
{
  if (dim == 2)
    return pick_interleave<Scalar, 2>(interleave, unroll, weighted);
  return pick_interleave<Scalar, 3>(interleave, unroll, weighted);
}

RunFn pick_kernel(Precision p, int dim, bool interleave, bool unroll,
                  bool weighted)
{
  if (p == Precision::f32)
    return pick_dim<float>(dim, interleave, unroll, weighted);
  return pick_dim<double>(dim, interleave, unroll, weighted);
}

template <class Scalar>
ElementMatrixStore run_typed(const KernelVariant& variant,
                             const PackedGeometry& geom,
                             const CoefficientField* coefficients, int workers)
{
  const FormSpec& spec = variant.spec;
  const KernelConfig& config = variant.config;
  const int krows = spec.krows();
  const int nk = krows * krows;
  const int ncoef = spec.num_coefficient_blocks();
  const bool weighted = spec.coefficient_arity == 1;
  const std::int64_t num_batches = geom.num_batches;

  ElementMatrixStore store;
  store.dim = spec.dim;
  store.krows = krows;
  store.element_batch_size = config.element_batch_size;
  store.num_concurrent_elements = config.num_concurrent_elements;
  store.num_batches = num_batches;
  store.num_elements = geom.num_elements;
  store.precision = config.precision;
  store.data = make_scalar_array(
      config.precision,
      num_batches * static_cast<std::int64_t>(nk) * config.element_batch_size);

  // Coefficients are repacked batch-padded in engine precision; padding
  // slots replicate the last real element so every slot reads valid data.
  std::vector<Scalar> packed_w;
  if (weighted)
  {
    const std::int64_t ne = geom.num_elements;
    packed_w.resize(static_cast<std::size_t>(num_batches)
                    * config.element_batch_size * ncoef);
    for (std::int64_t slot = 0; slot < num_batches * config.element_batch_size;
         ++slot)
    {
      const std::int64_t e = slot < ne ? slot : ne - 1;
      for (int k = 0; k < ncoef; ++k)
        packed_w[static_cast<std::size_t>(slot) * ncoef + k]
            = static_cast<Scalar>(
                coefficients->values[static_cast<std::size_t>(e) * ncoef + k]);
    }
  }

  KernelDims dims;
  dims.dim = spec.dim;
  dims.krows = krows;
  dims.ncoef = ncoef;
  dims.batch = config.element_batch_size;
  dims.ce = config.num_concurrent_elements;
  dims.sbs = config.serial_batch_size();

  RunFn run = pick_kernel(config.precision, spec.dim, config.interleave_stores,
                          config.loop_unroll, weighted);

  const Scalar* gptr = std::get<std::vector<Scalar>>(geom.data).data();
  const Scalar* kptr = std::get<std::vector<Scalar>>(variant.k).data();
  const Scalar* wptr = weighted ? packed_w.data() : nullptr;
  Scalar* optr = std::get<std::vector<Scalar>>(store.data).data();

  const int nthreads
      = static_cast<int>(std::min<std::int64_t>(workers, num_batches));
  if (nthreads <= 1)
  {
    std::vector<Scalar> scratch(config.element_batch_size);
    run(gptr, kptr, wptr, optr, dims, 0, num_batches, scratch.data());
  }
  else
  {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    const std::int64_t chunk = num_batches / nthreads;
    const std::int64_t rem = num_batches % nthreads;
    std::int64_t begin = 0;
    for (int t = 0; t < nthreads; ++t)
    {
      const std::int64_t end = begin + chunk + (t < rem ? 1 : 0);
      pool.emplace_back(
          [=]()
          {
            std::vector<Scalar> scratch(dims.batch);
            run(gptr, kptr, wptr, optr, dims, begin, end, scratch.data());
          });
      begin = end;
    }
    for (std::thread& t : pool)
      t.join();
  }
  return store;
}

}  // namespace

std::int64_t element_matrix_index(int krows, int element_batch_size,
                                  int num_concurrent_elements,
                                  std::int64_t element, int i, int j)
{
  const std::int64_t nk = static_cast<std::int64_t>(krows) * krows;
  const std::int64_t batch = element / element_batch_size;
  const int r = static_cast<int>(element % element_batch_size);
  const int b = r / num_concurrent_elements;
  const int z = r % num_concurrent_elements;
  return batch * nk * element_batch_size
         + static_cast<std::int64_t>(b) * num_concurrent_elements * nk
         + static_cast<std::int64_t>(z) * nk + i + static_cast<std::int64_t>(j) * krows;
}

KernelVariant specialize_kernel(const FormSpec& spec, const AnalyticTensor& k,
                                const KernelConfig& config)
{
  config.validate();
  if (!(k.spec == spec))
    throw std::invalid_argument("analytic tensor was built for a different form");

  const int krows = spec.krows();
  const std::int64_t group = static_cast<std::int64_t>(krows) * krows
                             * config.num_concurrent_elements;
  if (group > work_group_bound)
    throw std::invalid_argument(
        "work-group bound exceeded: krows^2 * num_concurrent_elements = "
        + std::to_string(group) + " > " + std::to_string(work_group_bound));

  KernelVariant variant;
  variant.spec = spec;
  variant.config = config;
  variant.k = make_scalar_array(config.precision,
                                static_cast<std::int64_t>(k.blocks.size()));
  std::visit(
      [&](auto& dst)
      {
        using Scalar = typename std::decay_t<decltype(dst)>::value_type;
        for (std::size_t t = 0; t < k.blocks.size(); ++t)
          dst[t] = static_cast<Scalar>(k.blocks[t]);
      },
      variant.k);

  variant.description = "bs" + std::to_string(config.element_batch_size)
                        + "_ce" + std::to_string(config.num_concurrent_elements);
  if (config.interleave_stores)
    variant.description += "_is";
  if (config.loop_unroll)
    variant.description += "_unroll";
  return variant;
}

ElementMatrixStore integrate_batches(const KernelVariant& variant,
                                     const PackedGeometry& geom,
                                     const CoefficientField* coefficients,
                                     int workers)
{
  const FormSpec& spec = variant.spec;
  const KernelConfig& config = variant.config;
  config.validate();

  if (geom.dim != spec.dim)
    throw std::invalid_argument("geometry dimension does not match form");
  if (geom.element_batch_size != config.element_batch_size)
    throw std::invalid_argument("geometry was packed for a different batch size");
  if (geom.precision != config.precision)
    throw std::invalid_argument("geometry was packed in a different precision");
  if (workers < 1)
    throw std::invalid_argument("worker count must be >= 1");

  const bool weighted = spec.coefficient_arity == 1;
  if (weighted)
  {
    if (coefficients == nullptr)
      throw std::invalid_argument("form requires a coefficient field");
    if (coefficients->num_basis_funcs != spec.num_basis_funcs)
      throw std::invalid_argument("coefficient field has wrong block size");
    if (std::ssize(coefficients->values)
        < geom.num_elements * spec.num_basis_funcs)
      throw std::invalid_argument("coefficient field is shorter than the mesh");
    if (geom.num_elements == 0)
      throw std::invalid_argument("cannot integrate a coefficient form over zero elements");
  }
  else if (coefficients != nullptr)
    throw std::invalid_argument("form takes no coefficient field");

  if (config.precision == Precision::f32)
    return run_typed<float>(variant, geom, coefficients, workers);
  return run_typed<double>(variant, geom, coefficients, workers);
}

std::int64_t flop_count(const FormSpec& spec, const KernelConfig& config,
                        std::int64_t num_elements)
{
  (void)config;
  const std::int64_t nk = static_cast<std::int64_t>(spec.krows()) * spec.krows();
  const std::int64_t dd = static_cast<std::int64_t>(spec.dim) * spec.dim;
  if (spec.coefficient_arity == 0)
    return num_elements * nk * 2 * dd;
  return num_elements * nk * spec.num_basis_funcs * (2 * dd + 2);
}

std::vector<double> unpack_element_matrix(const ElementMatrixStore& store,
                                          const KernelConfig& config,
                                          const FormSpec& spec,
                                          std::int64_t element)
{
  if (spec.krows() != store.krows or spec.dim != store.dim)
    throw std::invalid_argument("store does not match form");
  if (config.element_batch_size != store.element_batch_size
      or config.num_concurrent_elements != store.num_concurrent_elements)
    throw std::invalid_argument("store does not match kernel config");
  if (element < 0 or element >= store.num_elements)
    throw std::out_of_range("element index out of range");

  const int krows = store.krows;
  std::vector<double> m(static_cast<std::size_t>(krows) * krows);
  for (int i = 0; i < krows; ++i)
    for (int j = 0; j < krows; ++j)
      m[static_cast<std::size_t>(i) * krows + j] = scalar_array_at(
          store.data,
          element_matrix_index(krows, store.element_batch_size,
                               store.num_concurrent_elements, element, i, j));
  return m;
}

namespace {

constexpr char store_magic[8] = {'F', 'B', 'E', 'M', 'A', 'T', '0', '1'};

void write_u32(std::ostream& os, std::uint32_t v)
{
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& os, std::uint64_t v)
{
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is)
{
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t read_u64(std::istream& is)
{
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void write_store(std::ostream& os, const ElementMatrixStore& store)
{
  os.write(store_magic, sizeof store_magic);
  write_u32(os, static_cast<std::uint32_t>(store.dim));
  write_u32(os, static_cast<std::uint32_t>(store.krows));
  write_u32(os, static_cast<std::uint32_t>(store.element_batch_size));
  write_u32(os, static_cast<std::uint32_t>(store.num_concurrent_elements));
  write_u64(os, static_cast<std::uint64_t>(store.num_elements));
  write_u32(os, store.precision == Precision::f32 ? 0u : 1u);
  std::visit(
      [&](const auto& data)
      {
        using Scalar = typename std::decay_t<decltype(data)>::value_type;
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(Scalar)));
      },
      store.data);
  if (!os)
    throw std::runtime_error("failed to write element-matrix store");
}

ElementMatrixStore read_store(std::istream& is)
{
  char magic[8] = {};
  is.read(magic, sizeof magic);
  if (!is or std::memcmp(magic, store_magic, sizeof magic) != 0)
    throw std::runtime_error("not an element-matrix store file");

  ElementMatrixStore store;
  store.dim = static_cast<int>(read_u32(is));
  store.krows = static_cast<int>(read_u32(is));
  store.element_batch_size = static_cast<int>(read_u32(is));
  store.num_concurrent_elements = static_cast<int>(read_u32(is));
  store.num_elements = static_cast<std::int64_t>(read_u64(is));
  const std::uint32_t pcode = read_u32(is);
  if (!is)
    throw std::runtime_error("truncated element-matrix store header");

  if (store.dim != 2 and store.dim != 3)
    throw std::runtime_error("store header: bad dimension");
  if (store.krows <= 0 or store.element_batch_size <= 0
      or store.num_concurrent_elements <= 0 or store.num_elements < 0
      or store.element_batch_size % store.num_concurrent_elements != 0)
    throw std::runtime_error("store header: bad batch shape");
  if (pcode > 1)
    throw std::runtime_error("store header: bad precision code");
  store.precision = pcode == 0 ? Precision::f32 : Precision::f64;

  store.num_batches = (store.num_elements + store.element_batch_size - 1)
                      / store.element_batch_size;
  const std::int64_t len = store.num_batches
                           * static_cast<std::int64_t>(store.krows)
                           * store.krows * store.element_batch_size;
  store.data = make_scalar_array(store.precision, len);
  std::visit(
      [&](auto& data)
      {
        using Scalar = typename std::decay_t<decltype(data)>::value_type;
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(Scalar)));
      },
      store.data);
  if (!is)
    throw std::runtime_error("truncated element-matrix store data");
  return store;
}

}  // namespace fembatch
