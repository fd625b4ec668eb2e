#include "fembatch/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace fembatch {

const char* const csv_header
    = "operator,dim,num_elements,batch_size,concurrent,interleave,unroll,"
      "precision,workers,reps,seconds_min,seconds_mean,gflops,checksum,status";

CoefficientField default_coefficient_field(const Mesh& mesh)
{
  CoefficientField field;
  field.num_basis_funcs = mesh.dim + 1;
  field.values.resize(static_cast<std::size_t>(mesh.num_elements())
                      * field.num_basis_funcs);
  for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k <= mesh.dim; ++k)
      field.values[static_cast<std::size_t>(e) * field.num_basis_funcs + k]
          = 1.0 + mesh.vertex(mesh.cell_vertex(e, k), 0);
  return field;
}

double store_checksum(const ElementMatrixStore& store)
{
  const std::int64_t nk = static_cast<std::int64_t>(store.krows) * store.krows;
  double sum = 0.0;
  for (std::int64_t e = 0; e < store.num_elements; ++e)
  {
    const std::int64_t base
        = element_matrix_index(store.krows, store.element_batch_size,
                               store.num_concurrent_elements, e, 0, 0);
    for (std::int64_t t = 0; t < nk; ++t)
      sum += scalar_array_at(store.data, base + t);
  }
  return sum;
}

double default_tolerance(Precision p)
{
  return p == Precision::f64 ? 1e-12 : 5e-5;
}

namespace {

struct PreparedCase {
  FormSpec spec;
  AnalyticTensor k;
  Mesh mesh;
  CoefficientField coefficients;  ///< unused for coefficient-free forms
};

std::int64_t structured_element_count(int dim, int n)
{
  const std::int64_t nn = n;
  return dim == 2 ? 2 * nn * nn : 6 * nn * nn * nn;
}

PreparedCase prepare_case(const BenchOptions& options)
{
  PreparedCase pc;
  pc.spec = make_form_spec(options.op, options.dim);
  pc.k = build_analytic_tensor(options.op, options.dim);
  pc.mesh = structured_simplicial_mesh(options.dim, options.n);
  if (options.jitter > 0.0)
    pc.mesh = jitter_mesh(pc.mesh, options.jitter, options.seed);
  if (pc.spec.coefficient_arity == 1)
    pc.coefficients = default_coefficient_field(pc.mesh);
  return pc;
}

BenchRecord describe(const BenchOptions& options)
{
  BenchRecord rec;
  rec.op = operator_name(options.op);
  rec.dim = options.dim;
  rec.num_elements = structured_element_count(options.dim, options.n);
  rec.batch_size = options.config.element_batch_size;
  rec.concurrent = options.config.num_concurrent_elements;
  rec.interleave = options.config.interleave_stores;
  rec.unroll = options.config.loop_unroll;
  rec.precision = precision_name(options.config.precision);
  rec.workers = options.workers;
  rec.reps = options.repetitions;
  rec.status = "ok";
  return rec;
}

BenchRecord run_prepared(const PreparedCase& pc, const BenchOptions& options)
{
  BenchRecord rec = describe(options);

  const KernelConfig& config = options.config;
  if (config.element_batch_size <= 0 or config.num_concurrent_elements <= 0
      or config.element_batch_size % config.num_concurrent_elements != 0)
  {
    rec.status = "invalid: divisibility";
    return rec;
  }
  const std::int64_t group = static_cast<std::int64_t>(pc.spec.krows())
                             * pc.spec.krows()
                             * config.num_concurrent_elements;
  if (group > work_group_bound)
  {
    rec.status = "invalid: work-group bound";
    return rec;
  }

  if (options.repetitions < 1)
    throw std::invalid_argument("repetition count must be >= 1");

  const KernelVariant variant = specialize_kernel(pc.spec, pc.k, config);
  const CoefficientField* coeff
      = pc.spec.coefficient_arity == 1 ? &pc.coefficients : nullptr;

  PackedGeometry geom;
  if (!options.include_packing)
    geom = pack_geometry(pc.mesh, config);

  if (options.verify_first)
  {
    if (options.include_packing)
      geom = pack_geometry(pc.mesh, config);
    const ElementMatrixStore store
        = integrate_batches(variant, geom, coeff, options.workers);
    const OracleReport report
        = verify(store, pc.mesh, pc.spec, config, coeff,
                 default_tolerance(config.precision));
    if (!report.passed)
    {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "verification failed: max relative error %.3e > %.3e "
                    "at element %lld entry (%d, %d)",
                    report.max_rel_error, report.tolerance,
                    static_cast<long long>(report.worst_element),
                    report.worst_test_index, report.worst_trial_index);
      throw std::runtime_error(buf);
    }
  }

  using clock = std::chrono::steady_clock;
  double min_s = 0.0;
  double sum_s = 0.0;
  ElementMatrixStore store;
  for (int rep = 0; rep < options.repetitions; ++rep)
  {
    const auto t0 = clock::now();
    if (options.include_packing)
      geom = pack_geometry(pc.mesh, config);
    store = integrate_batches(variant, geom, coeff, options.workers);
    const auto t1 = clock::now();
    const double s = std::chrono::duration<double>(t1 - t0).count();
    min_s = rep == 0 ? s : std::min(min_s, s);
    sum_s += s;
  }

  rec.num_elements = pc.mesh.num_elements();
  rec.seconds_min = min_s;
  rec.seconds_mean = sum_s / options.repetitions;
  rec.gflops = min_s > 0.0 ? static_cast<double>(flop_count(
                                 pc.spec, config, pc.mesh.num_elements()))
                                 / min_s * 1e-9
                           : 0.0;
  rec.checksum = store_checksum(store);
  return rec;
}

}  // namespace

BenchRecord run_benchmark(const BenchOptions& options)
{
  return run_prepared(prepare_case(options), options);
}

std::vector<BenchRecord> sweep(const SweepGrid& grid)
{
  PreparedCase pc = prepare_case(grid.base);

  auto sorted_unique = [](auto values)
  {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
  };
  const std::vector<int> batch_sizes = sorted_unique(grid.batch_sizes);
  const std::vector<int> concurrent = sorted_unique(grid.concurrent);
  std::vector<bool> interleave = grid.interleave;
  std::sort(interleave.begin(), interleave.end());
  interleave.erase(std::unique(interleave.begin(), interleave.end()),
                   interleave.end());
  std::vector<bool> unroll = grid.unroll;
  std::sort(unroll.begin(), unroll.end());
  unroll.erase(std::unique(unroll.begin(), unroll.end()), unroll.end());

  std::vector<BenchRecord> records;
  records.reserve(batch_sizes.size() * concurrent.size() * interleave.size()
                  * unroll.size());
  for (int bs : batch_sizes)
    for (int ce : concurrent)
      for (bool is : interleave)
        for (bool ur : unroll)
        {
          BenchOptions options = grid.base;
          options.config.element_batch_size = bs;
          options.config.num_concurrent_elements = ce;
          options.config.interleave_stores = is;
          options.config.loop_unroll = ur;
          try
          {
            records.push_back(run_prepared(pc, options));
          }
          catch (const std::exception& e)
          {
            BenchRecord rec = describe(options);
            rec.status = std::string("error: ") + e.what();
            records.push_back(rec);
          }
        }
  return records;
}

namespace {

std::string csv_quote(const std::string& s)
{
  std::string out = "\"";
  for (char c : s)
  {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i)
  {
    const char c = line[i];
    if (quoted)
    {
      if (c == '"')
      {
        if (i + 1 < line.size() and line[i + 1] == '"')
        {
          cur += '"';
          ++i;
        }
        else
          quoted = false;
      }
      else
        cur += c;
    }
    else if (c == '"')
      quoted = true;
    else if (c == ',')
    {
      fields.push_back(std::move(cur));
      cur.clear();
    }
    else
      cur += c;
  }
  fields.push_back(std::move(cur));
  return fields;
}

bool flag_from_field(const std::string& s)
{
  if (s == "on")
    return true;
  if (s == "off")
    return false;
  throw std::runtime_error("bad flag field '" + s + "' (want on/off)");
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<BenchRecord>& records)
{
  os << csv_header << "\n";
  for (const BenchRecord& r : records)
  {
    os << csv_quote(r.op) << "," << r.dim << "," << r.num_elements << ","
       << r.batch_size << "," << r.concurrent << ","
       << csv_quote(r.interleave ? "on" : "off") << ","
       << csv_quote(r.unroll ? "on" : "off") << "," << csv_quote(r.precision)
       << "," << r.workers << "," << r.reps << ","
       << format_double(r.seconds_min) << "," << format_double(r.seconds_mean)
       << "," << format_double(r.gflops) << "," << format_double(r.checksum)
       << "," << csv_quote(r.status) << "\n";
  }
}

std::vector<BenchRecord> read_csv(std::istream& is)
{
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("empty benchmark table");
  if (!line.empty() and line.back() == '\r')
    line.pop_back();
  if (line != csv_header)
    throw std::runtime_error("unrecognized benchmark table header");

  std::vector<BenchRecord> records;
  while (std::getline(is, line))
  {
    if (!line.empty() and line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 15)
      throw std::runtime_error("benchmark table row has "
                               + std::to_string(f.size())
                               + " fields, expected 15");
    BenchRecord r;
    r.op = f[0];
    r.dim = std::stoi(f[1]);
    r.num_elements = std::stoll(f[2]);
    r.batch_size = std::stoi(f[3]);
    r.concurrent = std::stoi(f[4]);
    r.interleave = flag_from_field(f[5]);
    r.unroll = flag_from_field(f[6]);
    r.precision = f[7];
    r.workers = std::stoi(f[8]);
    r.reps = std::stoi(f[9]);
    r.seconds_min = std::stod(f[10]);
    r.seconds_mean = std::stod(f[11]);
    r.gflops = std::stod(f[12]);
    r.checksum = std::stod(f[13]);
    r.status = f[14];
    records.push_back(std::move(r));
  }
  return records;
}

void write_json(std::ostream& os, const std::vector<BenchRecord>& records)
{
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const BenchRecord& r : records)
  {
    nlohmann::ordered_json row;
    row["operator"] = r.op;
    row["dim"] = r.dim;
    row["num_elements"] = r.num_elements;
    row["batch_size"] = r.batch_size;
    row["concurrent"] = r.concurrent;
    row["interleave"] = r.interleave ? "on" : "off";
    row["unroll"] = r.unroll ? "on" : "off";
    row["precision"] = r.precision;
    row["workers"] = r.workers;
    row["reps"] = r.reps;
    row["seconds_min"] = r.seconds_min;
    row["seconds_mean"] = r.seconds_mean;
    row["gflops"] = r.gflops;
    row["checksum"] = r.checksum;
    row["status"] = r.status;
    out.push_back(std::move(row));
  }
  os << out.dump(2) << "\n";
}

}  // namespace fembatch
