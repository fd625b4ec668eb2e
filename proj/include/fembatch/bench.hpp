#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fembatch/engine.hpp"
#include "fembatch/oracle.hpp"

namespace fembatch {

/// One benchmark run over a structured (optionally jittered) mesh.
struct BenchOptions {
  Operator op = Operator::laplacian;
  int dim = 3;
  int n = 16;            ///< structured mesh resolution
  double jitter = 0.0;
  std::uint64_t seed = 42;
  KernelConfig config;
  int workers = 1;
  int repetitions = 3;
  bool include_packing = false;  ///< time pack_geometry inside each rep
  bool verify_first = false;     ///< oracle-verify before timing; throw on fail
};

/// One emitted record; matches the CSV schema field for field.
struct BenchRecord {
  std::string op;
  int dim = 0;
  std::int64_t num_elements = 0;
  int batch_size = 0;
  int concurrent = 0;
  bool interleave = false;
  bool unroll = false;
  std::string precision;
  int workers = 0;
  int reps = 0;
  double seconds_min = 0.0;
  double seconds_mean = 0.0;
  double gflops = 0.0;
  double checksum = 0.0;
  std::string status;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

/// Cartesian variant grid over one prepared problem. Axis values are sorted
/// ascending and deduplicated; rows come out in lexicographic order
/// (batch size, concurrent, interleave, unroll). Invalid grid points produce
/// rows with an explanatory status instead of timings.
struct SweepGrid {
  BenchOptions base;
  std::vector<int> batch_sizes{16, 32, 64, 128};
  std::vector<int> concurrent{1, 2, 4};
  std::vector<bool> interleave{false, true};
  std::vector<bool> unroll{false, true};
};

/// Default coefficient field for benchmark runs: w(x) = 1 + x0 at vertices.
CoefficientField default_coefficient_field(const Mesh& mesh);

/// Sum of all real-element matrix entries, accumulated in double in element
/// order. Identical across variants of the same problem and precision.
double store_checksum(const ElementMatrixStore& store);

/// Verification tolerance by precision: 1e-12 for f64, 5e-5 for f32.
double default_tolerance(Precision p);

/// Timing covers integrate_batches only (plus pack_geometry when
/// include_packing is set); mesh generation and K construction are excluded.
BenchRecord run_benchmark(const BenchOptions& options);

std::vector<BenchRecord> sweep(const SweepGrid& grid);

/// Exact CSV header emitted and required by the readers below.
extern const char* const csv_header;

/// String fields quoted, numeric fields at full round-trip precision.
void write_csv(std::ostream& os, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_csv(std::istream& is);
void write_json(std::ostream& os, const std::vector<BenchRecord>& records);

}  // namespace fembatch
