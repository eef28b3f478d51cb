#include "sgd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sgd/assembly.hpp"
#include "sgd/error.hpp"
#include "sgd/forcing.hpp"

namespace sgd {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// config parsing

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kParse, "config field '" + path + "': " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; });
    if (!ok) field_error(join(path, it.key()), "unknown field");
  }
}

const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) field_error(join(path, key), "missing");
  return obj.at(key);
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) field_error(path, "must be finite");
  return d;
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) field_error(path, "expected an integer");
  const auto i = v.get<long long>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) field_error(path, "out of range");
  return static_cast<int>(i);
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) field_error(path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) field_error(path, "expected true or false");
  return v.get<bool>();
}

std::vector<double> as_number_list(const json& v, const std::string& path) {
  if (v.is_number()) return {as_number(v, path)};
  if (!v.is_array()) field_error(path, "expected a number or a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <class F>
void optional_field(const json& obj, const std::string& path, const char* key, F&& f) {
  if (obj.contains(key)) f(obj.at(key), join(path, key));
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("config is not valid JSON: ") + e.what());
  }
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_relative() && !base.empty() ? base / p : p; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_generator(const std::string& g, const std::string& path) {
  if (g != "unit_square" && g != "unit_cube") field_error(path, "unknown generator '" + g + "'");
}

}  // namespace

SimplicialMesh MeshSource::load() const {
  if (generator.empty()) return import_msh_file(msh_path.string());
  if (generator == "unit_square") return generate_unit_square(n);
  if (generator == "unit_cube") return generate_unit_cube(n);
  throw Error(ErrorCode::kInvalidArgument, "unknown mesh generator '" + generator + "'");
}

std::string MeshSource::describe() const {
  return generator.empty() ? msh_path.string() : generator + ":" + std::to_string(n);
}

std::vector<double> AlphaRule::resolve(double gamma) const {
  if (ratio) return {*ratio * gamma};
  return values;
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const fs::path& base_dir) {
  const json root = parse_text(json_text);
  if (!root.is_object()) field_error("<root>", "expected an object");
  reject_unknown(root, "",
                 {"experiment", "mesh", "scheme", "schemes", "nu", "k", "T", "gammas", "alpha", "forcing", "convection",
                  "output_dir", "solver", "diagnostics", "comment"});
  ExperimentConfig c;
  c.name = as_string(require(root, "", "experiment"), "experiment");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    field_error("experiment", "must be a nonempty name without path separators");

  const json& mesh = require(root, "", "mesh");
  if (!mesh.is_object()) field_error("mesh", "expected an object");
  reject_unknown(mesh, "mesh", {"generator", "n", "msh"});
  if (mesh.contains("msh")) {
    if (mesh.contains("generator")) field_error("mesh", "give either generator or msh, not both");
    c.mesh.msh_path = resolve(as_string(mesh.at("msh"), "mesh.msh"), base_dir);
    if (!fs::exists(c.mesh.msh_path)) field_error("mesh.msh", "file not found: " + c.mesh.msh_path.string());
  } else {
    c.mesh.generator = as_string(require(mesh, "mesh", "generator"), "mesh.generator");
    check_generator(c.mesh.generator, "mesh.generator");
    c.mesh.n = as_int(require(mesh, "mesh", "n"), "mesh.n");
    if (c.mesh.n < 1) field_error("mesh.n", "must be positive");
  }

  if (root.contains("scheme") && root.contains("schemes")) field_error("schemes", "give either scheme or schemes");
  auto scheme_of = [](const json& v, const std::string& path) {
    try {
      return parse_scheme(as_string(v, path));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParse) throw;
      field_error(path, e.what());
    }
  };
  optional_field(root, "", "scheme", [&](const json& v, const std::string& p) { c.schemes = {scheme_of(v, p)}; });
  optional_field(root, "", "schemes", [&](const json& v, const std::string& p) {
    if (!v.is_array() || v.empty()) field_error(p, "expected a nonempty list");
    c.schemes.clear();
    for (std::size_t i = 0; i < v.size(); ++i) c.schemes.push_back(scheme_of(v[i], p + "[" + std::to_string(i) + "]"));
  });

  optional_field(root, "", "nu", [&](const json& v, const std::string& p) { c.nu = as_number(v, p); });
  optional_field(root, "", "k", [&](const json& v, const std::string& p) { c.k = as_number(v, p); });
  optional_field(root, "", "T", [&](const json& v, const std::string& p) { c.t_end = as_number(v, p); });
  if (!(c.nu > 0)) field_error("nu", "must be positive");
  if (!(c.k > 0)) field_error("k", "must be positive");
  if (!(c.t_end >= c.k)) field_error("T", "must be at least one time step");

  c.gammas = as_number_list(require(root, "", "gammas"), "gammas");
  if (c.gammas.empty()) field_error("gammas", "must not be empty");
  for (std::size_t i = 0; i < c.gammas.size(); ++i)
    if (c.gammas[i] < 0) field_error("gammas[" + std::to_string(i) + "]", "must be nonnegative");

  const json& alpha = require(root, "", "alpha");
  if (alpha.is_object()) {
    reject_unknown(alpha, "alpha", {"values", "ratio"});
    if (alpha.contains("values") == alpha.contains("ratio")) field_error("alpha", "give exactly one of values or ratio");
    if (alpha.contains("ratio")) {
      c.alpha.ratio = as_number(alpha.at("ratio"), "alpha.ratio");
      if (*c.alpha.ratio < 0) field_error("alpha.ratio", "must be nonnegative");
    } else {
      c.alpha.values = as_number_list(alpha.at("values"), "alpha.values");
      if (c.alpha.values.empty()) field_error("alpha.values", "must not be empty");
    }
  } else {
    c.alpha.values = as_number_list(alpha, "alpha");
    if (c.alpha.values.empty()) field_error("alpha", "must not be empty");
  }
  for (std::size_t i = 0; i < c.alpha.values.size(); ++i)
    if (c.alpha.values[i] < 0) field_error("alpha.values[" + std::to_string(i) + "]", "must be nonnegative");

  optional_field(root, "", "forcing", [&](const json& v, const std::string& p) {
    c.forcing = as_string(v, p);
    const auto names = builtin_forcing_names();
    if (std::find(names.begin(), names.end(), c.forcing) == names.end()) field_error(p, "unknown forcing '" + c.forcing + "'");
  });
  optional_field(root, "", "convection", [&](const json& v, const std::string& p) { c.convection = as_bool(v, p); });
  optional_field(root, "", "output_dir", [&](const json& v, const std::string& p) { c.output_dir = as_string(v, p); });

  optional_field(root, "", "solver", [&](const json& s, const std::string& p) {
    if (!s.is_object()) field_error(p, "expected an object");
    reject_unknown(s, p, {"step2", "cg_tol", "cg_maxit", "blowup_energy"});
    optional_field(s, p, "step2", [&](const json& v, const std::string& q) {
      const std::string name = as_string(v, q);
      if (name == "direct") c.step2_solver = Step2Solver::kDirect;
      else if (name == "cg") c.step2_solver = Step2Solver::kCg;
      else field_error(q, "expected \"direct\" or \"cg\"");
    });
    optional_field(s, p, "cg_tol", [&](const json& v, const std::string& q) {
      c.cg_tol = as_number(v, q);
      if (!(c.cg_tol > 0)) field_error(q, "must be positive");
    });
    optional_field(s, p, "cg_maxit", [&](const json& v, const std::string& q) {
      c.cg_maxit = as_int(v, q);
      if (c.cg_maxit < 1) field_error(q, "must be positive");
    });
    optional_field(s, p, "blowup_energy", [&](const json& v, const std::string& q) {
      c.blowup_energy = as_number(v, q);
      if (!(c.blowup_energy > 0)) field_error(q, "must be positive");
    });
  });
  optional_field(root, "", "diagnostics", [&](const json& d, const std::string& p) {
    if (!d.is_object()) field_error(p, "expected an object");
    reject_unknown(d, p, {"energy_ledger", "time_series"});
    optional_field(d, p, "energy_ledger", [&](const json& v, const std::string& q) { c.energy_ledger = as_bool(v, q); });
    optional_field(d, p, "time_series", [&](const json& v, const std::string& q) { c.time_series = as_bool(v, q); });
  });
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(read_file(path), path.parent_path());
}

CondSweepConfig parse_cond_sweep_config(std::string_view json_text, const fs::path& base_dir) {
  const json root = parse_text(json_text);
  if (!root.is_object()) field_error("<root>", "expected an object");
  reject_unknown(root, "", {"experiment", "mesh", "k", "k_gamma_alpha", "output_dir", "eigen", "comment"});
  CondSweepConfig c;
  c.name = as_string(require(root, "", "experiment"), "experiment");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    field_error("experiment", "must be a nonempty name without path separators");

  const json& mesh = require(root, "", "mesh");
  if (!mesh.is_object()) field_error("mesh", "expected an object");
  reject_unknown(mesh, "mesh", {"generator", "n", "msh"});
  if (mesh.contains("msh")) {
    const json& m = mesh.at("msh");
    std::vector<std::string> paths;
    if (m.is_array()) {
      for (std::size_t i = 0; i < m.size(); ++i) paths.push_back(as_string(m[i], "mesh.msh[" + std::to_string(i) + "]"));
    } else {
      paths.push_back(as_string(m, "mesh.msh"));
    }
    for (const auto& p : paths) c.msh_paths.push_back(resolve(p, base_dir));
    if (c.msh_paths.empty()) field_error("mesh.msh", "must not be empty");
  } else {
    optional_field(mesh, "mesh", "generator", [&](const json& v, const std::string& p) {
      c.generator = as_string(v, p);
      check_generator(c.generator, p);
    });
    const json& n = require(mesh, "mesh", "n");
    if (n.is_array()) {
      for (std::size_t i = 0; i < n.size(); ++i) c.n_values.push_back(as_int(n[i], "mesh.n[" + std::to_string(i) + "]"));
    } else {
      c.n_values.push_back(as_int(n, "mesh.n"));
    }
    if (c.n_values.empty()) field_error("mesh.n", "must not be empty");
    for (int v : c.n_values)
      if (v < 1) field_error("mesh.n", "entries must be positive");
  }
  optional_field(root, "", "k", [&](const json& v, const std::string& p) {
    c.k = as_number(v, p);
    if (!(c.k > 0)) field_error(p, "must be positive");
  });
  c.k_gamma_alpha = as_number_list(require(root, "", "k_gamma_alpha"), "k_gamma_alpha");
  if (c.k_gamma_alpha.empty()) field_error("k_gamma_alpha", "must not be empty");
  for (std::size_t i = 0; i < c.k_gamma_alpha.size(); ++i)
    if (c.k_gamma_alpha[i] < 0) field_error("k_gamma_alpha[" + std::to_string(i) + "]", "must be nonnegative");
  optional_field(root, "", "output_dir", [&](const json& v, const std::string& p) { c.output_dir = as_string(v, p); });
  optional_field(root, "", "eigen", [&](const json& e, const std::string& p) {
    if (!e.is_object()) field_error(p, "expected an object");
    reject_unknown(e, p, {"tol", "max_iterations"});
    optional_field(e, p, "tol", [&](const json& v, const std::string& q) {
      c.eigen.rel_change_tol = as_number(v, q);
      if (!(c.eigen.rel_change_tol > 0)) field_error(q, "must be positive");
    });
    optional_field(e, p, "max_iterations", [&](const json& v, const std::string& q) {
      c.eigen.max_iterations = as_int(v, q);
      if (c.eigen.max_iterations < 1) field_error(q, "must be positive");
    });
  });
  return c;
}

CondSweepConfig load_cond_sweep_config(const fs::path& path) {
  return parse_cond_sweep_config(read_file(path), path.parent_path());
}

RunControl run_control_from_env() {
  RunControl rc;
  if (const char* out = std::getenv("SGD_OUT_DIR"); out && *out) rc.out_dir = fs::path(out);
  if (const char* th = std::getenv("SGD_THREADS"); th && *th) {
    unsigned v = 0;
    const auto [ptr, ec] = std::from_chars(th, th + std::char_traits<char>::length(th), v);
    if (ec != std::errc() || *ptr != '\0' || v == 0)
      throw Error(ErrorCode::kInvalidArgument, std::string("SGD_THREADS must be a positive integer, got '") + th + "'");
    rc.threads = v;
  }
  return rc;
}

// ---------------------------------------------------------------------------
// CSV layer

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::kParse, "not a number: '" + std::string(s) + "'");
  return v;
}

std::string series_file_name(const std::string& experiment, SchemeKind scheme, double gamma, double alpha) {
  return experiment + "_" + to_string(scheme) + "_g" + format_double(gamma) + "_a" + format_double(alpha) + ".csv";
}

std::string summary_file_name(const std::string& experiment, SchemeKind scheme) {
  return experiment + "_" + to_string(scheme) + "_summary.csv";
}

static const char* const kSeriesHeader = "n,t,kinetic_energy,div_norm,E,D,identity_residual,load_pairing";
static const char* const kSummaryHeader = "gamma,alpha,avg_div_sq,final_div,rate_avg,rate_final,blowup_step";

void write_series_csv(std::ostream& os, std::span<const StepRecord> records) {
  os << kSeriesHeader << '\n';
  for (const auto& r : records) {
    os << r.n << ',' << format_double(r.t) << ',' << format_double(r.kinetic_energy) << ','
       << format_double(r.div_norm) << ',' << format_double(r.E) << ',' << format_double(r.D) << ','
       << format_double(r.identity_residual) << ',' << format_double(r.load_pairing) << '\n';
  }
}

void write_summary_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << kSummaryHeader << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    os << format_double(r.gamma) << ',' << format_double(r.alpha) << ',' << format_double(r.avg_div_sq) << ','
       << format_double(r.final_div) << ',' << opt(r.rate_avg) << ',' << opt(r.rate_final) << ','
       << (r.blowup_step ? std::to_string(*r.blowup_step) : std::string()) << '\n';
  }
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Reads a CSV with the given header; calls row(fields, line_no) per data line.
template <class F>
void read_csv(const fs::path& path, const char* header, F&& row) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw Error(ErrorCode::kParse, path.string() + ": unexpected header, expected '" + std::string(header) + "'");
  const std::size_t ncols = split(header).size();
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != ncols)
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(ncols) + " fields");
    try {
      row(fields);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

long parse_long(std::string_view s) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(ErrorCode::kParse, "not an integer: '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::vector<StepRecord> read_series_csv(const fs::path& path) {
  std::vector<StepRecord> out;
  read_csv(path, kSeriesHeader, [&](const std::vector<std::string_view>& f) {
    StepRecord r;
    r.n = parse_long(f[0]);
    r.t = parse_double(f[1]);
    r.kinetic_energy = parse_double(f[2]);
    r.div_norm = parse_double(f[3]);
    r.E = parse_double(f[4]);
    r.D = parse_double(f[5]);
    r.identity_residual = parse_double(f[6]);
    r.load_pairing = parse_double(f[7]);
    r.div_norm_sum = std::numeric_limits<double>::quiet_NaN();
    out.push_back(r);
  });
  return out;
}

std::vector<SweepRow> read_summary_csv(const fs::path& path) {
  std::vector<SweepRow> out;
  read_csv(path, kSummaryHeader, [&](const std::vector<std::string_view>& f) {
    SweepRow r;
    r.gamma = parse_double(f[0]);
    r.alpha = parse_double(f[1]);
    r.avg_div_sq = parse_double(f[2]);
    r.final_div = parse_double(f[3]);
    if (!f[4].empty()) r.rate_avg = parse_double(f[4]);
    if (!f[5].empty()) r.rate_final = parse_double(f[5]);
    if (!f[6].empty()) r.blowup_step = parse_long(f[6]);
    out.push_back(r);
  });
  return out;
}

namespace {

SweepRow summarize(double gamma, double alpha, std::span<const StepRecord> records, std::optional<long> blowup) {
  SweepRow row;
  row.gamma = gamma;
  row.alpha = alpha;
  row.avg_div_sq = records.empty() ? std::numeric_limits<double>::quiet_NaN() : time_average_div(records);
  row.final_div = records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().div_norm;
  row.blowup_step = blowup;
  return row;
}

bool close(double a, double b, double rel_tol) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= rel_tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

VerifyReport verify_summary(const fs::path& summary_csv, double rel_tol) {
  const std::string fname = summary_csv.filename().string();
  const std::string suffix = "_summary.csv";
  if (fname.size() <= suffix.size() || fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) != 0)
    throw Error(ErrorCode::kInvalidArgument, "summary file name must end in " + suffix);
  const std::string prefix = fname.substr(0, fname.size() - suffix.size());

  const auto rows = read_summary_csv(summary_csv);
  std::vector<SweepRow> recomputed;
  VerifyReport rep;
  for (const auto& r : rows) {
    const fs::path series =
        summary_csv.parent_path() / (prefix + "_g" + format_double(r.gamma) + "_a" + format_double(r.alpha) + ".csv");
    const auto records = read_series_csv(series);
    recomputed.push_back(summarize(r.gamma, r.alpha, records, r.blowup_step));
  }
  fill_rates(recomputed);
  auto tag = [](const SweepRow& r) { return "gamma=" + format_double(r.gamma) + " alpha=" + format_double(r.alpha); };
  auto cmp_opt = [&](const char* what, const SweepRow& r, const std::optional<double>& a, const std::optional<double>& b) {
    if (a.has_value() != b.has_value() || (a && !close(*a, *b, rel_tol)))
      rep.mismatches.push_back(tag(r) + ": " + what + " " + (a ? format_double(*a) : "<empty>") + " vs recomputed " +
                               (b ? format_double(*b) : "<empty>"));
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& q = recomputed[i];
    cmp_opt("avg_div_sq", r, r.avg_div_sq, q.avg_div_sq);
    cmp_opt("final_div", r, r.final_div, q.final_div);
    cmp_opt("rate_avg", r, r.rate_avg, q.rate_avg);
    cmp_opt("rate_final", r, r.rate_final, q.rate_final);
    ++rep.rows_checked;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// runners

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

template <class F>
void run_jobs(std::size_t count, unsigned threads, F&& job) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  for (auto& th : pool) th.join();
}

const char* regime_name(LedgerRegime r) {
  switch (r) {
    case LedgerRegime::kBStar: return "bstar";
    case LedgerRegime::kB: return "b";
    case LedgerRegime::kPlanar: return "planar";
    case LedgerRegime::kNone: return "none";
  }
  return "none";
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunControl& control) {
  const fs::path out_dir = control.out_dir.value_or(config.output_dir);
  make_dir(out_dir);

  auto mesh = std::make_shared<const SimplicialMesh>(config.mesh.load());
  auto space = std::make_shared<const TaylorHoodSpace>(mesh);
  auto ops = std::make_shared<const OperatorSet>(assemble_operators(*space));
  const VectorField forcing = builtin_forcing(config.forcing);

  ExperimentOutcome outcome;
  for (SchemeKind s : config.schemes)
    for (double g : config.gammas)
      for (double a : config.alpha.resolve(g)) {
        JobResult j;
        j.scheme = s;
        j.gamma = g;
        j.alpha = a;
        j.regime = config.energy_ledger ? select_ledger(ops->dim, s, g, a) : LedgerRegime::kNone;
        outcome.jobs.push_back(j);
      }

  run_jobs(outcome.jobs.size(), control.threads, [&](std::size_t idx) {
    JobResult& job = outcome.jobs[idx];
    SchemeParams p;
    p.nu = config.nu;
    p.k = config.k;
    p.gamma = job.gamma;
    p.alpha = job.alpha;
    p.scheme = job.scheme;
    p.t_end = config.t_end;
    p.forcing = forcing;
    p.convection = config.convection;
    p.step2_solver = config.step2_solver;
    p.cg_tol = config.cg_tol;
    p.cg_maxit = config.cg_maxit;
    p.blowup_energy = config.blowup_energy;

    RunOptions opts;
    opts.max_steps = control.max_steps;
    opts.energy_ledger = config.energy_ledger;
    std::vector<StepRecord> records;
    std::optional<long> blowup;
    try {
      const SimulationResult res = run_simulation(space, ops, p, std::move(opts));
      records = res.records;
      blowup = res.blowup_step;
      job.max_kinetic_energy = res.max_kinetic_energy;
    } catch (const std::exception& e) {
      job.error = e.what();
    }
    job.steps = static_cast<long>(records.size());
    job.row = summarize(job.gamma, job.alpha, records, blowup);
    if (job.regime != LedgerRegime::kNone && !records.empty()) {
      double worst = 0.0, e_prev = 0.0;
      for (const auto& r : records) {
        worst = std::max(worst, std::abs(r.identity_residual) / std::max(e_prev, 1.0));
        e_prev = r.E;
      }
      job.max_rel_identity_residual = worst;
    }
    if (config.time_series) {
      job.series_file = out_dir / series_file_name(config.name, job.scheme, job.gamma, job.alpha);
      std::ostringstream ss;
      write_series_csv(ss, records);
      try {
        write_text_file(job.series_file, ss.str());
      } catch (const Error& e) {
        if (job.error.empty()) job.error = e.what();
      }
    }
  });

  for (SchemeKind s : config.schemes) {
    std::vector<SweepRow> rows;
    for (const auto& j : outcome.jobs)
      if (j.scheme == s) rows.push_back(j.row);
    fill_rates(rows);
    std::size_t r = 0;
    for (auto& j : outcome.jobs)
      if (j.scheme == s) j.row = rows[r++];
    const fs::path path = out_dir / summary_file_name(config.name, s);
    std::ostringstream ss;
    write_summary_csv(ss, rows);
    write_text_file(path, ss.str());
    outcome.summary_files.push_back(path);
  }

  json manifest;
  manifest["experiment"] = config.name;
  manifest["mesh"] = {{"source", config.mesh.describe()},
                      {"dim", mesh->dim()},
                      {"vertices", mesh->num_vertices()},
                      {"cells", mesh->num_cells()},
                      {"h", mesh->h()}};
  manifest["velocity_dofs"] = ops->n_velocity;
  manifest["pressure_dofs"] = ops->n_pressure;
  manifest["nu"] = config.nu;
  manifest["k"] = config.k;
  manifest["T"] = config.t_end;
  manifest["forcing"] = config.forcing;
  manifest["jobs"] = json::array();
  for (const auto& j : outcome.jobs) {
    if (!j.error.empty()) ++outcome.failures;
    json e;
    e["scheme"] = to_string(j.scheme);
    e["gamma"] = j.gamma;
    e["alpha"] = j.alpha;
    e["ledger"] = regime_name(j.regime);
    e["series"] = j.series_file.empty() ? json(nullptr) : json(j.series_file.filename().string());
    e["steps"] = j.steps;
    e["blowup_step"] = j.row.blowup_step ? json(*j.row.blowup_step) : json(nullptr);
    e["max_kinetic_energy"] = j.max_kinetic_energy;
    e["max_rel_identity_residual"] = opt_json(j.max_rel_identity_residual);
    e["status"] = !j.error.empty() ? "error" : (j.row.blowup_step ? "blowup" : "ok");
    if (!j.error.empty()) e["error"] = j.error;
    manifest["jobs"].push_back(e);
  }
  manifest["summaries"] = json::array();
  for (const auto& s : outcome.summary_files) manifest["summaries"].push_back(s.filename().string());
  outcome.manifest_file = out_dir / (config.name + "_manifest.json");
  write_text_file(outcome.manifest_file, manifest.dump(2) + "\n");
  return outcome;
}

CondSweepOutcome run_cond_sweep(const CondSweepConfig& config, const RunControl& control) {
  const fs::path out_dir = control.out_dir.value_or(config.output_dir);
  make_dir(out_dir);

  std::vector<MeshSource> sources;
  for (const auto& p : config.msh_paths) sources.push_back(MeshSource{"", 0, p});
  for (int n : config.n_values) sources.push_back(MeshSource{config.generator, n, {}});

  std::vector<std::shared_ptr<const TaylorHoodSpace>> spaces;
  for (const auto& s : sources) spaces.push_back(std::make_shared<const TaylorHoodSpace>(
                                    std::make_shared<const SimplicialMesh>(s.load())));

  const std::size_t nk = config.k_gamma_alpha.size();
  CondSweepOutcome out;
  out.rows.resize(sources.size() * nk);
  out.row_n.resize(out.rows.size());
  std::mutex err_mutex;
  std::string first_error;
  run_jobs(out.rows.size(), control.threads, [&](std::size_t idx) {
    const std::size_t m = idx / nk;
    const double kga = config.k_gamma_alpha[idx % nk];
    out.row_n[idx] = sources[m].n;
    try {
      out.rows[idx] = estimate_cond2(*spaces[m], config.k, kga / config.k, config.eigen);
    } catch (const std::exception& e) {
      std::lock_guard lock(err_mutex);
      if (first_error.empty()) first_error = sources[m].describe() + ": " + e.what();
    }
  });
  if (!first_error.empty()) throw Error(ErrorCode::kSingular, "conditioning estimate failed for " + first_error);

  std::ostringstream ss;
  ss << "n,h,k,gamma_plus_alpha,k_gamma_alpha,free_dofs,lambda_max,lambda_min,cond2,bound_shape,ratio,converged\n";
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const auto& r = out.rows[i];
    const double ratio = r.cond2 / r.bound_shape;
    out.max_ratio = std::max(out.max_ratio, ratio);
    ss << out.row_n[i] << ',' << format_double(r.h) << ',' << format_double(r.k) << ','
       << format_double(r.gamma_plus_alpha) << ',' << format_double(config.k_gamma_alpha[i % nk]) << ',' << r.size
       << ',' << format_double(r.lambda_max) << ',' << format_double(r.lambda_min) << ',' << format_double(r.cond2)
       << ',' << format_double(r.bound_shape) << ',' << format_double(ratio) << ',' << (r.converged ? 1 : 0) << '\n';
  }
  out.csv_file = out_dir / (config.name + "_cond.csv");
  write_text_file(out.csv_file, ss.str());
  return out;
}

}  // namespace sgd
