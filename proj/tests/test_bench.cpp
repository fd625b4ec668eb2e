#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fembatch/bench.hpp"
#include "test_util.hpp"

using namespace fembatch;

namespace {

KernelConfig config_of(int bs, int ce, Precision p)
{
  KernelConfig config;
  config.element_batch_size = bs;
  config.num_concurrent_elements = ce;
  config.precision = p;
  return config;
}

BenchRecord sample_record()
{
  BenchRecord r;
  r.op = "laplacian";
  r.dim = 3;
  r.num_elements = 48;
  r.batch_size = 16;
  r.concurrent = 2;
  r.interleave = true;
  r.unroll = false;
  r.precision = "f32";
  r.workers = 4;
  r.reps = 3;
  r.seconds_min = 0.001953125;
  r.seconds_mean = 0.0087890625;
  r.gflops = 7.0588235294117645;
  r.checksum = 1.0000000000000002;
  r.status = "ok";
  return r;
}

}  // namespace

TEST_CASE("the default coefficient field samples 1 + x0 at cell vertices")
{
  const Mesh mesh = structured_simplicial_mesh(2, 2);
  const CoefficientField field = default_coefficient_field(mesh);
  CHECK(field.num_basis_funcs == 3);
  REQUIRE(std::ssize(field.values) == mesh.num_elements() * 3);
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < 3; ++k)
      CHECK(field.values[static_cast<std::size_t>(e) * 3 + k]
            == 1.0 + mesh.vertex(mesh.cell_vertex(e, k), 0));
}

TEST_CASE("the store checksum sums real elements and skips padding")
{
  const Mesh mesh = jitter_mesh(structured_simplicial_mesh(2, 2), 0.15, 3);
  REQUIRE(mesh.num_elements() == 8);
  // batch size 3 over 8 elements: last batch holds one padding slot
  const KernelConfig config = config_of(3, 1, Precision::f64);
  const FormSpec spec = make_form_spec(Operator::laplacian, 2);
  const AnalyticTensor k = build_analytic_tensor(Operator::laplacian, 2);
  const KernelVariant variant = specialize_kernel(spec, k, config);
  const PackedGeometry geom = pack_geometry(mesh, config);
  const ElementMatrixStore store = integrate_batches(variant, geom);

  double manual = 0.0;
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    for (double v : unpack_element_matrix(store, config, spec, e))
      manual += v;
  CHECK(store_checksum(store) == manual);
}

TEST_CASE("the store checksum ignores padding slots entirely")
{
  // Synthetic store: 3 real elements in batches of 2, so the final batch
  // carries one padding slot. Real entries are small and known; the padding
  // slot holds a large sentinel that must not leak into the checksum.
  ElementMatrixStore store;
  store.dim = 2;
  store.krows = 3;
  store.element_batch_size = 2;
  store.num_concurrent_elements = 1;
  store.num_batches = 2;
  store.num_elements = 3;
  store.precision = Precision::f64;
  store.data = make_scalar_array(Precision::f64, 2 * 2 * 9);
  auto& data = std::get<std::vector<double>>(store.data);
  for (std::int64_t slot = 0; slot < 4; ++slot)
    for (int t = 0; t < 9; ++t)
      data[static_cast<std::size_t>(slot) * 9 + t]
          = slot < 3 ? static_cast<double>(slot + 1) : 1000.0;
  CHECK(store_checksum(store) == 9.0 * (1.0 + 2.0 + 3.0));
}

TEST_CASE("default tolerances are pinned per precision")
{
  CHECK(default_tolerance(Precision::f64) == 1e-12);
  CHECK(default_tolerance(Precision::f32) == 5e-5);
}

TEST_CASE("a benchmark run reports timing, throughput and checksum")
{
  BenchOptions options;
  options.op = Operator::laplacian;
  options.dim = 2;
  options.n = 4;
  options.jitter = 0.15;
  options.config = config_of(16, 2, Precision::f64);
  options.repetitions = 2;
  options.verify_first = true;

  const BenchRecord record = run_benchmark(options);
  CHECK(record.status == "ok");
  CHECK(record.op == "laplacian");
  CHECK(record.dim == 2);
  CHECK(record.num_elements == 32);
  CHECK(record.batch_size == 16);
  CHECK(record.concurrent == 2);
  CHECK(record.precision == "f64");
  CHECK(record.reps == 2);
  CHECK(record.seconds_min > 0.0);
  CHECK(record.seconds_mean >= record.seconds_min);
  CHECK(record.gflops > 0.0);
  CHECK(std::isfinite(record.checksum));
}

TEST_CASE("benchmark checksums do not depend on repetition count")
{
  BenchOptions options;
  options.op = Operator::weighted_laplacian;
  options.dim = 2;
  options.n = 3;
  options.jitter = 0.1;
  options.config = config_of(8, 2, Precision::f32);
  options.repetitions = 1;
  const double once = run_benchmark(options).checksum;
  options.repetitions = 5;
  const double many = run_benchmark(options).checksum;
  CHECK(once == many);

  options.repetitions = 0;
  CHECK_THROWS_AS(run_benchmark(options), std::invalid_argument);
}

TEST_CASE("invalid configurations yield status rows instead of throws")
{
  BenchOptions options;
  options.op = Operator::laplacian;
  options.dim = 2;
  options.n = 2;
  options.config = config_of(6, 4, Precision::f64);
  const BenchRecord divisibility = run_benchmark(options);
  CHECK(divisibility.status == "invalid: divisibility");
  CHECK(divisibility.seconds_min == 0.0);
  CHECK(divisibility.gflops == 0.0);

  options.op = Operator::elasticity;
  options.dim = 3;
  options.config = config_of(16, 8, Precision::f64);
  const BenchRecord bound = run_benchmark(options);
  CHECK(bound.status == "invalid: work-group bound");
}

TEST_CASE("sweeps walk the grid lexicographically with uniform checksums")
{
  SweepGrid grid;
  grid.base.op = Operator::laplacian;
  grid.base.dim = 2;
  grid.base.n = 4;
  grid.base.jitter = 0.15;
  grid.base.config.precision = Precision::f32;
  grid.base.repetitions = 1;
  grid.batch_sizes = {128, 32};  // deliberately unsorted
  grid.concurrent = {2, 1};
  grid.interleave = {false, true};
  grid.unroll = {false, true};

  const std::vector<BenchRecord> records = sweep(grid);
  REQUIRE(records.size() == 16);

  std::size_t idx = 0;
  std::set<double> checksums;
  for (int bs : {32, 128})
    for (int ce : {1, 2})
      for (bool is : {false, true})
        for (bool ur : {false, true})
        {
          const BenchRecord& r = records[idx++];
          CHECK(r.batch_size == bs);
          CHECK(r.concurrent == ce);
          CHECK(r.interleave == is);
          CHECK(r.unroll == ur);
          CHECK(r.status == "ok");
          checksums.insert(r.checksum);
        }
  CHECK(checksums.size() == 1);
}

TEST_CASE("sweeps mark non-dividing concurrency as invalid rows")
{
  SweepGrid grid;
  grid.base.dim = 2;
  grid.base.n = 2;
  grid.base.repetitions = 1;
  grid.batch_sizes = {16};
  grid.concurrent = {3};
  grid.interleave = {false};
  grid.unroll = {false};
  const std::vector<BenchRecord> records = sweep(grid);
  REQUIRE(records.size() == 1);
  CHECK(records[0].status == "invalid: divisibility");
}

TEST_CASE("CSV output round-trips records exactly")
{
  std::vector<BenchRecord> records{sample_record(), sample_record()};
  records[1].op = "weighted-laplacian";
  records[1].precision = "f64";
  records[1].interleave = false;
  records[1].unroll = true;
  records[1].checksum = -3.0517578125e-05;
  records[1].status = "error: a \"quoted\" message, with commas";

  std::stringstream ss;
  write_csv(ss, records);

  std::string header;
  std::getline(ss, header);
  CHECK(header == csv_header);
  ss.seekg(0);

  const std::vector<BenchRecord> back = read_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == records[0]);
  CHECK(back[1] == records[1]);
}

TEST_CASE("the CSV header is stable")
{
  CHECK(std::string(csv_header)
        == "operator,dim,num_elements,batch_size,concurrent,interleave,"
           "unroll,precision,workers,reps,seconds_min,seconds_mean,gflops,"
           "checksum,status");
}

TEST_CASE("the CSV reader rejects malformed input")
{
  {
    std::stringstream ss("wrong,header\n");
    CHECK_THROWS_AS(read_csv(ss), std::runtime_error);
  }
  {
    std::stringstream ss;
    ss << csv_header << "\n"
       << "\"laplacian\",3,48\n";  // too few fields
    CHECK_THROWS_AS(read_csv(ss), std::runtime_error);
  }
  {
    std::stringstream ss;
    ss << csv_header << "\n"
       << "\"laplacian\",3,48,16,2,maybe,\"off\",\"f32\",4,3,0.001,0.002,"
          "7.05,1.0,\"ok\"\n";  // bad flag value
    CHECK_THROWS_AS(read_csv(ss), std::runtime_error);
  }
}

TEST_CASE("JSON output parses back with the same values")
{
  const std::vector<BenchRecord> records{sample_record()};
  std::stringstream ss;
  write_json(ss, records);
  const nlohmann::json parsed = nlohmann::json::parse(ss.str());
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 1);
  const nlohmann::json& r = parsed[0];
  CHECK(r.at("operator") == "laplacian");
  CHECK(r.at("dim") == 3);
  CHECK(r.at("num_elements") == 48);
  CHECK(r.at("batch_size") == 16);
  CHECK(r.at("concurrent") == 2);
  CHECK(r.at("interleave") == "on");
  CHECK(r.at("unroll") == "off");
  CHECK(r.at("precision") == "f32");
  CHECK(r.at("workers") == 4);
  CHECK(r.at("reps") == 3);
  CHECK(r.at("seconds_min").get<double>() == 0.001953125);
  CHECK(r.at("seconds_mean").get<double>() == 0.0087890625);
  CHECK(r.at("gflops").get<double>()
        == doctest::Approx(7.0588235294117645).epsilon(1e-15));
  CHECK(r.at("checksum").get<double>() == 1.0000000000000002);
  CHECK(r.at("status") == "ok");
}
