#include "sgdflow.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "sgd/assembly.hpp"
#include "sgd/conditioning.hpp"
#include "sgd/error.hpp"
#include "sgd/experiment.hpp"
#include "sgd/forcing.hpp"
#include "sgd/mesh.hpp"
#include "sgd/schemes.hpp"

struct sgd_mesh {
  std::shared_ptr<const sgd::SimplicialMesh> mesh;
};

struct sgd_simulation {
  std::shared_ptr<const sgd::TaylorHoodSpace> space;
  std::shared_ptr<const sgd::OperatorSet> ops;
  std::unique_ptr<sgd::Simulation> sim;
};

namespace {

thread_local std::string g_last_error;

sgd_status to_status(sgd::ErrorCode code) {
  switch (code) {
    case sgd::ErrorCode::kOk: return SGD_OK;
    case sgd::ErrorCode::kInvalidArgument: return SGD_ERR_INVALID_ARGUMENT;
    case sgd::ErrorCode::kParse: return SGD_ERR_PARSE;
    case sgd::ErrorCode::kMesh: return SGD_ERR_MESH;
    case sgd::ErrorCode::kSingular: return SGD_ERR_SINGULAR;
    case sgd::ErrorCode::kNotConverged: return SGD_ERR_NOT_CONVERGED;
    case sgd::ErrorCode::kBreakdown: return SGD_ERR_BREAKDOWN;
    case sgd::ErrorCode::kBlowUp: return SGD_ERR_BLOWUP;
    case sgd::ErrorCode::kIo: return SGD_ERR_IO;
    case sgd::ErrorCode::kInternal: return SGD_ERR_INTERNAL;
  }
  return SGD_ERR_INTERNAL;
}

sgd_status fail(sgd_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
sgd_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const sgd::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SGD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SGD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SGD_ERR_INTERNAL, "unknown exception");
  }
}

#define SGD_REQUIRE(cond, what) \
  if (!(cond)) return fail(SGD_ERR_INVALID_ARGUMENT, what)

sgd_status wrap_mesh(sgd::SimplicialMesh m, sgd_mesh** out) {
  auto* h = new sgd_mesh{std::make_shared<const sgd::SimplicialMesh>(std::move(m))};
  *out = h;
  return SGD_OK;
}

sgd::SchemeKind to_kind(sgd_scheme s) {
  switch (s) {
    case SGD_SCHEME_MODULAR: return sgd::SchemeKind::kModularSgd;
    case SGD_SCHEME_SGD1: return sgd::SchemeKind::kSgd1;
    case SGD_SCHEME_COUPLED: return sgd::SchemeKind::kCoupledGradDiv;
  }
  throw sgd::Error(sgd::ErrorCode::kInvalidArgument, "unknown scheme value " + std::to_string(static_cast<int>(s)));
}

void copy_record(const sgd::StepRecord& r, sgd_step_record* out) {
  out->n = r.n;
  out->t = r.t;
  out->kinetic_energy = r.kinetic_energy;
  out->div_norm = r.div_norm;
  out->E = r.E;
  out->D = r.D;
  out->identity_residual = r.identity_residual;
  out->load_pairing = r.load_pairing;
}

}  // namespace

extern "C" {

const char* sgd_version(void) { return "1.0.0"; }

const char* sgd_last_error(void) { return g_last_error.c_str(); }

const char* sgd_status_name(sgd_status status) {
  switch (status) {
    case SGD_OK: return "ok";
    case SGD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SGD_ERR_PARSE: return "parse error";
    case SGD_ERR_MESH: return "mesh error";
    case SGD_ERR_SINGULAR: return "singular matrix";
    case SGD_ERR_NOT_CONVERGED: return "not converged";
    case SGD_ERR_BREAKDOWN: return "solver breakdown";
    case SGD_ERR_BLOWUP: return "blow-up";
    case SGD_ERR_IO: return "i/o error";
    case SGD_ERR_INTERNAL: return "internal error";
    case SGD_ERR_JOB_FAILED: return "job failed";
  }
  return "unknown status";
}

sgd_status sgd_mesh_generate(const char* kind, int n, sgd_mesh** out) {
  return guarded([&] {
    SGD_REQUIRE(kind && out, "null argument");
    *out = nullptr;
    const std::string k(kind);
    if (k == "unit_square") return wrap_mesh(sgd::generate_unit_square(n), out);
    if (k == "unit_cube") return wrap_mesh(sgd::generate_unit_cube(n), out);
    return fail(SGD_ERR_INVALID_ARGUMENT, "unknown mesh generator '" + k + "'");
  });
}

sgd_status sgd_mesh_load(const char* spec, sgd_mesh** out) {
  return guarded([&] {
    SGD_REQUIRE(spec && out, "null argument");
    *out = nullptr;
    return wrap_mesh(sgd::load_mesh_spec(spec), out);
  });
}

sgd_status sgd_mesh_import_msh(const char* text, size_t length, sgd_mesh** out) {
  return guarded([&] {
    SGD_REQUIRE(text && out, "null argument");
    *out = nullptr;
    std::istringstream in(std::string(text, length));
    return wrap_mesh(sgd::import_msh(in), out);
  });
}

sgd_status sgd_mesh_export_msh(const sgd_mesh* mesh, const char* path) {
  return guarded([&] {
    SGD_REQUIRE(mesh && path, "null argument");
    std::ofstream os(path);
    if (!os) return fail(SGD_ERR_IO, std::string("cannot write '") + path + "'");
    sgd::export_msh(*mesh->mesh, os);
    os.close();
    if (!os) return fail(SGD_ERR_IO, std::string("write failed for '") + path + "'");
    return SGD_OK;
  });
}

sgd_status sgd_mesh_get_info(const sgd_mesh* mesh, sgd_mesh_info* info) {
  return guarded([&] {
    SGD_REQUIRE(mesh && info, "null argument");
    const auto& m = *mesh->mesh;
    info->dim = m.dim();
    info->num_vertices = m.num_vertices();
    info->num_cells = m.num_cells();
    info->num_boundary_facets = m.num_boundary_facets();
    info->h = m.h();
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m.num_cells(); ++c) dmin = std::min(dmin, m.cell_diameter(c));
    info->min_diameter = dmin;
    info->total_volume = m.total_volume();
    const sgd::TaylorHoodSpace space(mesh->mesh);
    info->velocity_dofs = space.num_velocity_dofs();
    info->pressure_dofs = space.num_pressure_dofs();
    return SGD_OK;
  });
}

void sgd_mesh_free(sgd_mesh* mesh) { delete mesh; }

void sgd_params_default(sgd_params* params) {
  if (!params) return;
  const sgd::SchemeParams d;
  params->nu = d.nu;
  params->k = d.k;
  params->gamma = d.gamma;
  params->alpha = d.alpha;
  params->t_end = d.t_end;
  params->scheme = SGD_SCHEME_MODULAR;
  params->forcing = "box_rotational";
  params->convection = 1;
  params->step2_solver = SGD_STEP2_DIRECT;
  params->cg_tol = d.cg_tol;
  params->cg_maxit = d.cg_maxit;
  params->blowup_energy = d.blowup_energy;
  params->energy_ledger = 1;
}

sgd_status sgd_simulation_create(const sgd_mesh* mesh, const sgd_params* params, sgd_simulation** out) {
  return guarded([&] {
    SGD_REQUIRE(mesh && params && out, "null argument");
    *out = nullptr;
    sgd::SchemeParams p;
    p.nu = params->nu;
    p.k = params->k;
    p.gamma = params->gamma;
    p.alpha = params->alpha;
    p.t_end = params->t_end;
    p.scheme = to_kind(params->scheme);
    p.forcing = sgd::builtin_forcing(params->forcing ? params->forcing : "zero");
    p.convection = params->convection != 0;
    if (params->step2_solver != SGD_STEP2_DIRECT && params->step2_solver != SGD_STEP2_CG)
      return fail(SGD_ERR_INVALID_ARGUMENT, "unknown step-2 solver value");
    p.step2_solver = params->step2_solver == SGD_STEP2_CG ? sgd::Step2Solver::kCg : sgd::Step2Solver::kDirect;
    p.cg_tol = params->cg_tol;
    p.cg_maxit = params->cg_maxit;
    p.blowup_energy = params->blowup_energy;
    p.validate();

    auto h = std::make_unique<sgd_simulation>();
    h->space = std::make_shared<const sgd::TaylorHoodSpace>(mesh->mesh);
    h->ops = std::make_shared<const sgd::OperatorSet>(sgd::assemble_operators(*h->space));
    sgd::RunOptions opts;
    opts.energy_ledger = params->energy_ledger != 0;
    h->sim = std::make_unique<sgd::Simulation>(h->space, h->ops, p, std::move(opts));
    *out = h.release();
    return SGD_OK;
  });
}

sgd_status sgd_simulation_step(sgd_simulation* sim, sgd_step_record* record) {
  return guarded([&] {
    SGD_REQUIRE(sim, "null simulation");
    if (sim->sim->finished()) return fail(SGD_ERR_INVALID_ARGUMENT, "simulation already finished");
    const sgd::StepOutcome o = sim->sim->step();
    if (o.record && record) copy_record(*o.record, record);
    if (o.blowup) return fail(SGD_ERR_BLOWUP, "blow-up detected at step " + std::to_string(o.n));
    return SGD_OK;
  });
}

int sgd_simulation_finished(const sgd_simulation* sim) { return sim ? (sim->sim->finished() ? 1 : 0) : 1; }

long sgd_simulation_steps_taken(const sgd_simulation* sim) { return sim ? sim->sim->steps_taken() : 0; }

long sgd_simulation_steps_planned(const sgd_simulation* sim) { return sim ? sim->sim->steps_planned() : 0; }

size_t sgd_simulation_velocity_size(const sgd_simulation* sim) { return sim ? sim->ops->n_velocity : 0; }

sgd_status sgd_simulation_get_velocity(const sgd_simulation* sim, double* buffer, size_t length) {
  return guarded([&] {
    SGD_REQUIRE(sim && buffer, "null argument");
    const auto& u = sim->sim->state().u_prev;
    if (length != u.size())
      return fail(SGD_ERR_INVALID_ARGUMENT, "buffer length " + std::to_string(length) + " != " + std::to_string(u.size()));
    std::copy(u.begin(), u.end(), buffer);
    return SGD_OK;
  });
}

void sgd_simulation_free(sgd_simulation* sim) { delete sim; }

double sgd_bound_shape(double h, double k_gamma_alpha) {
  if (!(h > 0.0) || !(k_gamma_alpha >= 0.0)) {
    g_last_error = "bound_shape needs h > 0 and k(gamma+alpha) >= 0";
    return std::numeric_limits<double>::quiet_NaN();
  }
  return sgd::bound_shape(h, k_gamma_alpha);
}

sgd_status sgd_estimate_cond2(const sgd_mesh* mesh, double k, double gamma_plus_alpha, sgd_cond_report* out) {
  return guarded([&] {
    SGD_REQUIRE(mesh && out, "null argument");
    const sgd::TaylorHoodSpace space(mesh->mesh);
    const auto r = sgd::estimate_cond2(space, k, gamma_plus_alpha);
    out->h = r.h;
    out->k = r.k;
    out->gamma_plus_alpha = r.gamma_plus_alpha;
    out->lambda_max = r.lambda_max;
    out->lambda_min = r.lambda_min;
    out->cond2 = r.cond2;
    out->bound_shape = r.bound_shape;
    out->converged = r.converged ? 1 : 0;
    out->size = r.size;
    return r.converged ? SGD_OK : fail(SGD_ERR_NOT_CONVERGED, "eigenvalue iteration did not converge");
  });
}

sgd_status sgd_rate(double q1, double q2, double g1, double g2, double* out) {
  return guarded([&] {
    SGD_REQUIRE(out, "null argument");
    *out = sgd::rate(q1, q2, g1, g2);
    return SGD_OK;
  });
}

namespace {

sgd::RunControl make_control(const char* out_dir, long max_steps, unsigned threads) {
  sgd::RunControl rc = sgd::run_control_from_env();
  if (out_dir) rc.out_dir = std::filesystem::path(out_dir);
  rc.max_steps = max_steps;
  if (threads > 0) rc.threads = threads;
  return rc;
}

}  // namespace

sgd_status sgd_run_experiment(const char* config_path, const char* out_dir, long max_steps, unsigned threads,
                              sgd_experiment_summary* summary) {
  return guarded([&] {
    SGD_REQUIRE(config_path, "null config path");
    const auto cfg = sgd::load_experiment_config(config_path);
    const auto outcome = sgd::run_experiment(cfg, make_control(out_dir, max_steps, threads));
    std::size_t blowups = 0;
    std::string first_error;
    for (const auto& j : outcome.jobs) {
      if (j.row.blowup_step) ++blowups;
      if (!j.error.empty() && first_error.empty())
        first_error = sgd::to_string(j.scheme) + " gamma=" + sgd::format_double(j.gamma) +
                      " alpha=" + sgd::format_double(j.alpha) + ": " + j.error;
    }
    if (summary) {
      summary->jobs = outcome.jobs.size();
      summary->blowups = blowups;
      summary->failures = static_cast<size_t>(outcome.failures);
    }
    if (outcome.failures > 0)
      return fail(SGD_ERR_JOB_FAILED, std::to_string(outcome.failures) + " job(s) failed; first: " + first_error);
    return SGD_OK;
  });
}

sgd_status sgd_run_cond_sweep(const char* config_path, const char* out_dir, unsigned threads, double* max_ratio) {
  return guarded([&] {
    SGD_REQUIRE(config_path, "null config path");
    const auto cfg = sgd::load_cond_sweep_config(config_path);
    const auto outcome = sgd::run_cond_sweep(cfg, make_control(out_dir, -1, threads));
    if (max_ratio) *max_ratio = outcome.max_ratio;
    for (const auto& r : outcome.rows)
      if (!r.converged) return fail(SGD_ERR_NOT_CONVERGED, "eigenvalue iteration did not converge for some rows");
    return SGD_OK;
  });
}

sgd_status sgd_verify_summary(const char* summary_csv, size_t* rows_checked, size_t* mismatches) {
  return guarded([&] {
    SGD_REQUIRE(summary_csv, "null path");
    const auto rep = sgd::verify_summary(summary_csv);
    if (rows_checked) *rows_checked = rep.rows_checked;
    if (mismatches) *mismatches = rep.mismatches.size();
    if (!rep.mismatches.empty()) {
      std::string msg;
      for (const auto& m : rep.mismatches) msg += m + "\n";
      g_last_error = msg;
    }
    return SGD_OK;
  });
}

}  // extern "C"
