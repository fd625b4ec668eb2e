#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fembatch/bench.hpp"
#include "fembatch/engine.hpp"
#include "fembatch/forms.hpp"
#include "fembatch/geometry.hpp"
#include "fembatch/oracle.hpp"

namespace {

struct Options {
  std::string op = "laplacian";
  int dim = 3;
  int n = 16;
  int batch_size = 128;
  int concurrent = 1;
  std::string interleave = "off";
  std::string unroll = "off";
  std::string precision = "f32";
  int workers = 1;
  int reps = 3;
  std::uint64_t seed = 42;
  double jitter = 0.0;
  std::string output;
  std::string format = "csv";
  bool include_packing = false;
  bool verify_gate = false;

  // sweep axes (comma lists)
  std::vector<int> batch_sizes;
  std::vector<int> concurrents;
  std::vector<std::string> interleaves;
  std::vector<std::string> unrolls;
};

void add_mesh_flags(CLI::App* cmd, Options& o)
{
  cmd->add_option("--operator", o.op, "Bilinear form to integrate")
      ->check(CLI::IsMember({"laplacian", "elasticity", "weighted-laplacian"}))
      ->capture_default_str();
  cmd->add_option("--dim", o.dim, "Spatial dimension")
      ->check(CLI::IsMember({2, 3}))
      ->capture_default_str();
  cmd->add_option("--n", o.n, "Structured mesh resolution per axis")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--jitter", o.jitter,
                  "Interior-vertex displacement as a fraction of local spacing")
      ->check(CLI::Range(0.0, 0.2))
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Jitter RNG seed")->capture_default_str();
}

void add_kernel_flags(CLI::App* cmd, Options& o, const char* precision_default)
{
  cmd->add_option("--batch-size", o.batch_size, "Elements per batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--concurrent", o.concurrent,
                  "Elements advanced together per batch step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--interleave", o.interleave,
                  "Write each contraction result immediately")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd->add_option("--unroll", o.unroll, "Straight-line contraction body")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd->add_option("--precision", o.precision, "Engine scalar type")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->default_str(precision_default);
  cmd->add_option("--workers", o.workers, "Engine worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_output_flags(CLI::App* cmd, Options& o)
{
  cmd->add_option("--output", o.output, "Write records here instead of stdout");
  cmd->add_option("--format", o.format, "Record format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

fembatch::BenchOptions make_bench_options(const Options& o)
{
  fembatch::BenchOptions b;
  b.op = fembatch::operator_from_name(o.op);
  b.dim = o.dim;
  b.n = o.n;
  b.jitter = o.jitter;
  b.seed = o.seed;
  b.config.element_batch_size = o.batch_size;
  b.config.num_concurrent_elements = o.concurrent;
  b.config.interleave_stores = o.interleave == "on";
  b.config.loop_unroll = o.unroll == "on";
  b.config.precision = fembatch::precision_from_name(o.precision);
  b.workers = o.workers;
  b.repetitions = o.reps;
  b.include_packing = o.include_packing;
  b.verify_first = o.verify_gate;
  return b;
}

/// Stream records to --output or stdout in the chosen format.
void emit_records(const Options& o, const std::vector<fembatch::BenchRecord>& records)
{
  std::ofstream file;
  if (!o.output.empty())
  {
    file.open(o.output);
    if (!file)
      throw std::runtime_error("cannot open output file '" + o.output + "'");
  }
  std::ostream& os = o.output.empty() ? std::cout : file;
  if (o.format == "json")
    fembatch::write_json(os, records);
  else
    fembatch::write_csv(os, records);
}

int run_verify(const Options& o)
{
  const fembatch::BenchOptions b = make_bench_options(o);
  const fembatch::FormSpec spec = fembatch::make_form_spec(b.op, b.dim);
  const fembatch::AnalyticTensor k = fembatch::build_analytic_tensor(b.op, b.dim);
  fembatch::Mesh mesh = fembatch::structured_simplicial_mesh(b.dim, b.n);
  if (b.jitter > 0.0)
    mesh = fembatch::jitter_mesh(mesh, b.jitter, b.seed);

  const fembatch::KernelVariant variant
      = fembatch::specialize_kernel(spec, k, b.config);
  const fembatch::PackedGeometry geom = fembatch::pack_geometry(mesh, b.config);

  fembatch::CoefficientField coeff;
  const fembatch::CoefficientField* cp = nullptr;
  if (spec.coefficient_arity == 1)
  {
    coeff = fembatch::default_coefficient_field(mesh);
    cp = &coeff;
  }

  const fembatch::ElementMatrixStore store
      = fembatch::integrate_batches(variant, geom, cp, b.workers);
  const double tolerance = fembatch::default_tolerance(b.config.precision);
  const fembatch::OracleReport report
      = fembatch::verify(store, mesh, spec, b.config, cp, tolerance);

  std::printf("operator=%s dim=%d elements=%lld variant=%s precision=%s workers=%d\n",
              o.op.c_str(), o.dim, static_cast<long long>(mesh.num_elements()),
              variant.description.c_str(), o.precision.c_str(), o.workers);
  std::printf("max relative error %.6e (tolerance %.1e), max absolute error %.6e\n",
              report.max_rel_error, report.tolerance, report.max_abs_error);
  if (report.worst_element >= 0)
    std::printf("worst entry: element %lld, (i, j) = (%d, %d)\n",
                static_cast<long long>(report.worst_element),
                report.worst_test_index, report.worst_trial_index);
  std::printf("verification %s\n", report.passed ? "PASSED" : "FAILED");
  return report.passed ? 0 : 1;
}

int run_bench(const Options& o)
{
  const fembatch::BenchRecord record
      = fembatch::run_benchmark(make_bench_options(o));
  emit_records(o, {record});
  return record.status == "ok" ? 0 : 1;
}

int run_sweep(const Options& o)
{
  fembatch::SweepGrid grid;
  grid.base = make_bench_options(o);
  if (!o.batch_sizes.empty())
    grid.batch_sizes = o.batch_sizes;
  if (!o.concurrents.empty())
    grid.concurrent = o.concurrents;
  if (!o.interleaves.empty())
  {
    grid.interleave.clear();
    for (const std::string& s : o.interleaves)
      grid.interleave.push_back(s == "on");
  }
  if (!o.unrolls.empty())
  {
    grid.unroll.clear();
    for (const std::string& s : o.unrolls)
      grid.unroll.push_back(s == "on");
  }

  const std::vector<fembatch::BenchRecord> records = fembatch::sweep(grid);
  emit_records(o, records);
  for (const fembatch::BenchRecord& r : records)
    if (r.status.rfind("error:", 0) == 0)
      return 1;
  return 0;
}

int run_dump_k(const Options& o)
{
  const fembatch::AnalyticTensor k = fembatch::build_analytic_tensor(
      fembatch::operator_from_name(o.op), o.dim);
  std::ofstream file;
  if (!o.output.empty())
  {
    file.open(o.output);
    if (!file)
      throw std::runtime_error("cannot open output file '" + o.output + "'");
  }
  fembatch::dump_analytic_tensor(o.output.empty() ? std::cout : file, k);
  return 0;
}

int run_dump_mesh(const Options& o)
{
  fembatch::Mesh mesh = fembatch::structured_simplicial_mesh(o.dim, o.n);
  if (o.jitter > 0.0)
    mesh = fembatch::jitter_mesh(mesh, o.jitter, o.seed);
  std::ofstream file;
  if (!o.output.empty())
  {
    file.open(o.output);
    if (!file)
      throw std::runtime_error("cannot open output file '" + o.output + "'");
  }
  fembatch::write_mesh_text(o.output.empty() ? std::cout : file, mesh);
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Batched finite-element element-matrix integration"};
  app.require_subcommand(1);

  Options o;

  CLI::App* verify = app.add_subcommand(
      "verify", "Integrate one problem and compare against direct quadrature");
  add_mesh_flags(verify, o);
  add_kernel_flags(verify, o, "f64");

  CLI::App* bench = app.add_subcommand(
      "bench", "Time one kernel configuration and emit a record");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Time a Cartesian grid of kernel configurations");
  for (CLI::App* cmd : {bench, sweep})
  {
    add_mesh_flags(cmd, o);
    cmd->add_option("--reps", o.reps, "Timed repetitions per configuration")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--include-packing", o.include_packing,
                  "Time geometry packing inside each repetition");
    cmd->add_flag("--verify", o.verify_gate,
                  "Check against direct quadrature before timing; "
                  "a failure aborts with a nonzero exit code");
    add_output_flags(cmd, o);
  }
  add_kernel_flags(bench, o, "f32");

  // Sweep takes comma-separated lists on the tuning axes.
  sweep->add_option("--batch-size", o.batch_sizes, "Elements per batch (list)")
      ->delimiter(',');
  sweep->add_option("--concurrent", o.concurrents,
                    "Elements advanced together per step (list)")
      ->delimiter(',');
  sweep->add_option("--interleave", o.interleaves,
                    "Immediate-store settings (list of on/off)")
      ->delimiter(',')
      ->check(CLI::IsMember({"on", "off"}));
  sweep->add_option("--unroll", o.unrolls,
                    "Straight-line body settings (list of on/off)")
      ->delimiter(',')
      ->check(CLI::IsMember({"on", "off"}));
  sweep->add_option("--precision", o.precision, "Engine scalar type")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  sweep->add_option("--workers", o.workers, "Engine worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  CLI::App* dump_k = app.add_subcommand(
      "dump-k", "Print the analytic tensor of a form");
  dump_k->add_option("--operator", o.op, "Bilinear form")
      ->check(CLI::IsMember({"laplacian", "elasticity", "weighted-laplacian"}))
      ->capture_default_str();
  dump_k->add_option("--dim", o.dim, "Spatial dimension")
      ->check(CLI::IsMember({2, 3}))
      ->capture_default_str();
  dump_k->add_option("--output", o.output, "Write here instead of stdout");

  CLI::App* dump_mesh = app.add_subcommand(
      "dump-mesh", "Print a structured (optionally jittered) mesh as text");
  add_mesh_flags(dump_mesh, o);
  dump_mesh->add_option("--output", o.output, "Write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (app.got_subcommand(verify))
    {
      // verification defaults to double precision
      if (verify->count("--precision") == 0)
        o.precision = "f64";
      return run_verify(o);
    }
    if (app.got_subcommand(bench))
      return run_bench(o);
    if (app.got_subcommand(sweep))
      return run_sweep(o);
    if (app.got_subcommand(dump_k))
      return run_dump_k(o);
    return run_dump_mesh(o);
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
