// Command-line front end. Talks to the solver only through sgdflow.h.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "sgdflow.h"

namespace {

int report(sgd_status s, const char* what) {
  std::fprintf(stderr, "%s: %s: %s\n", what, sgd_status_name(s), sgd_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse grad-div flow experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sgd_version()));

  std::string config, out_dir, spec, export_path, summary;
  long max_steps = -1;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "run an experiment config and write CSV files");
  run->add_option("config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides config and SGD_OUT_DIR)");
  run->add_option("--max-steps", max_steps, "stop every job after this many steps")->check(CLI::NonNegativeNumber);
  run->add_option("--threads", threads, "concurrent jobs (default SGD_THREADS or 1)");

  auto* cond = app.add_subcommand("cond-sweep", "estimate step-2 block condition numbers");
  cond->add_option("config", config, "conditioning JSON")->required()->check(CLI::ExistingFile);
  cond->add_option("--out", out_dir, "output directory (overrides config and SGD_OUT_DIR)");
  cond->add_option("--threads", threads, "concurrent sweep points");

  auto* info = app.add_subcommand("mesh-info", "print mesh statistics as JSON");
  info->add_option("mesh", spec, "MSH path or gen:unit_square:N / gen:unit_cube:N")->required();
  info->add_option("--export", export_path, "also write the mesh as MSH 2.2");

  auto* verify = app.add_subcommand("verify-summary", "recompute a summary CSV from its time series");
  verify->add_option("summary", summary, "*_summary.csv")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  const char* out = out_dir.empty() ? nullptr : out_dir.c_str();

  if (*run) {
    sgd_experiment_summary s{};
    const sgd_status st = sgd_run_experiment(config.c_str(), out, max_steps, threads, &s);
    if (st != SGD_OK && st != SGD_ERR_JOB_FAILED) return report(st, "run");
    std::printf("jobs=%zu blowups=%zu failures=%zu\n", s.jobs, s.blowups, s.failures);
    if (st == SGD_ERR_JOB_FAILED) return report(st, "run");
    return 0;
  }
  if (*cond) {
    double max_ratio = 0.0;
    const sgd_status st = sgd_run_cond_sweep(config.c_str(), out, threads, &max_ratio);
    if (st != SGD_OK) return report(st, "cond-sweep");
    std::printf("max cond2/bound_shape = %.6g\n", max_ratio);
    return 0;
  }
  if (*info) {
    sgd_mesh* mesh = nullptr;
    sgd_status st = sgd_mesh_load(spec.c_str(), &mesh);
    if (st != SGD_OK) return report(st, "mesh-info");
    sgd_mesh_info mi{};
    st = sgd_mesh_get_info(mesh, &mi);
    if (st == SGD_OK && !export_path.empty()) st = sgd_mesh_export_msh(mesh, export_path.c_str());
    sgd_mesh_free(mesh);
    if (st != SGD_OK) return report(st, "mesh-info");
    std::printf(
        "{\n  \"dim\": %d,\n  \"vertices\": %zu,\n  \"cells\": %zu,\n  \"boundary_facets\": %zu,\n"
        "  \"h\": %.17g,\n  \"min_diameter\": %.17g,\n  \"volume\": %.17g,\n"
        "  \"velocity_dofs\": %zu,\n  \"pressure_dofs\": %zu\n}\n",
        mi.dim, mi.num_vertices, mi.num_cells, mi.num_boundary_facets, mi.h, mi.min_diameter, mi.total_volume,
        mi.velocity_dofs, mi.pressure_dofs);
    return 0;
  }
  if (*verify) {
    size_t rows = 0, bad = 0;
    const sgd_status st = sgd_verify_summary(summary.c_str(), &rows, &bad);
    if (st != SGD_OK) return report(st, "verify-summary");
    std::printf("rows=%zu mismatches=%zu\n", rows, bad);
    if (bad) {
      std::fputs(sgd_last_error(), stderr);
      return 1;
    }
    return 0;
  }
  return 0;
}
