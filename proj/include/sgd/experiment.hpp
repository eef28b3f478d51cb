#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgd/conditioning.hpp"
#include "sgd/diagnostics.hpp"
#include "sgd/mesh.hpp"
#include "sgd/schemes.hpp"

namespace sgd {

/// Generator + resolution, or a path to an MSH file.
struct MeshSource {
  std::string generator;  // "unit_square" | "unit_cube", empty for a file
  int n = 0;
  std::filesystem::path msh_path;

  SimplicialMesh load() const;
  std::string describe() const;
};

/// alpha either from a fixed list (every gamma gets every value) or ratio * gamma.
struct AlphaRule {
  std::vector<double> values;
  std::optional<double> ratio;

  std::vector<double> resolve(double gamma) const;
};

struct ExperimentConfig {
  std::string name;
  MeshSource mesh;
  std::vector<SchemeKind> schemes{SchemeKind::kModularSgd};
  double nu = 1e-4;
  double k = 0.05;
  double t_end = 10.0;
  std::vector<double> gammas;
  AlphaRule alpha;
  std::string forcing = "box_rotational";
  bool convection = true;
  std::filesystem::path output_dir = "out";
  Step2Solver step2_solver = Step2Solver::kDirect;
  double cg_tol = 1e-13;
  int cg_maxit = 5000;
  double blowup_energy = 1e12;
  bool energy_ledger = true;
  bool time_series = true;
};

/// Parses an experiment config. Errors are Error(kParse) naming the field path.
/// Relative msh paths are resolved against base_dir.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct CondSweepConfig {
  std::string name;
  std::string generator = "unit_square";
  std::vector<int> n_values;
  std::vector<std::filesystem::path> msh_paths;  // used instead of generator when nonempty
  double k = 1.0;
  std::vector<double> k_gamma_alpha;
  std::filesystem::path output_dir = "out";
  EigenOptions eigen;
};

CondSweepConfig parse_cond_sweep_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
CondSweepConfig load_cond_sweep_config(const std::filesystem::path& path);

/// Overrides applied on top of a config at run time.
struct RunControl {
  std::optional<std::filesystem::path> out_dir;
  long max_steps = -1;
  unsigned threads = 1;
};

/// Reads SGD_OUT_DIR and SGD_THREADS.
RunControl run_control_from_env();

struct JobResult {
  SchemeKind scheme = SchemeKind::kModularSgd;
  double gamma = 0.0;
  double alpha = 0.0;
  LedgerRegime regime = LedgerRegime::kNone;
  std::filesystem::path series_file;
  SweepRow row;
  long steps = 0;
  double max_kinetic_energy = 0.0;
  std::optional<double> max_rel_identity_residual;  // |residual| / max(E^n, 1)
  std::string error;  // nonempty on a solver failure that is not a blow-up
};

struct ExperimentOutcome {
  std::vector<JobResult> jobs;
  std::vector<std::filesystem::path> summary_files;
  std::filesystem::path manifest_file;
  int failures = 0;
};

/// Runs every (scheme, gamma, alpha) job and writes the CSV and manifest files.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunControl& control = {});

struct CondSweepOutcome {
  std::vector<ConditioningReport> rows;
  std::vector<int> row_n;  // mesh parameter per row, 0 for imported meshes
  std::filesystem::path csv_file;
  double max_ratio = 0.0;  // max cond2 / bound_shape
};

CondSweepOutcome run_cond_sweep(const CondSweepConfig& config, const RunControl& control = {});

// CSV layer

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
/// Parses what format_double writes, including nan and inf.
double parse_double(std::string_view s);

std::string series_file_name(const std::string& experiment, SchemeKind scheme, double gamma, double alpha);
std::string summary_file_name(const std::string& experiment, SchemeKind scheme);

void write_series_csv(std::ostream& os, std::span<const StepRecord> records);
void write_summary_csv(std::ostream& os, std::span<const SweepRow> rows);
/// Only n, t, kinetic_energy, div_norm, E, D, identity_residual, load_pairing are read back.
std::vector<StepRecord> read_series_csv(const std::filesystem::path& path);
std::vector<SweepRow> read_summary_csv(const std::filesystem::path& path);

struct VerifyReport {
  std::size_t rows_checked = 0;
  std::vector<std::string> mismatches;
};

/// Recomputes averages, final values and rates of a summary CSV from the
/// time-series files next to it.
VerifyReport verify_summary(const std::filesystem::path& summary_csv, double rel_tol = 1e-12);

}  // namespace sgd
