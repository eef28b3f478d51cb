#include "sgd/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgd/error.hpp"

namespace sgd {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kModularSgd: return "modular_sgd";
    case SchemeKind::kSgd1: return "sgd1";
    case SchemeKind::kCoupledGradDiv: return "coupled_graddiv";
  }
  return "unknown";
}

SchemeKind parse_scheme(const std::string& name) {
  if (name == "modular_sgd") return SchemeKind::kModularSgd;
  if (name == "sgd1") return SchemeKind::kSgd1;
  if (name == "coupled_graddiv") return SchemeKind::kCoupledGradDiv;
  throw Error(ErrorCode::kInvalidArgument, "unknown scheme '" + name + "'");
}

void SchemeParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (!(nu > 0.0)) bad("nu must be positive");
  if (!(k > 0.0)) bad("time step k must be positive");
  if (!(gamma >= 0.0)) bad("gamma must be nonnegative");
  if (!(alpha >= 0.0)) bad("alpha must be nonnegative");
  if (!(t_end >= k * (1.0 - 1e-12))) bad("t_end must be at least one time step");
  if (!(cg_tol > 0.0) || cg_maxit < 1) bad("invalid CG settings");
  if (!(blowup_energy > 0.0)) bad("blow-up energy cap must be positive");
}

long SchemeParams::num_steps() const { return static_cast<long>(std::ceil(t_end / k - 1e-9)); }

namespace {

// Copies a velocity-sized matrix into the top-left corner of an n x n matrix.
CsrMatrix embed(const CsrMatrix& block, std::size_t n) {
  std::vector<std::size_t> ptr(n + 1, block.nnz());
  for (std::size_t i = 0; i <= block.rows(); ++i) ptr[i] = block.row_ptr()[i];
  return CsrMatrix(n, n, std::move(ptr), block.col_idx(), block.values());
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

Stepper::Stepper(std::shared_ptr<const TaylorHoodSpace> space, std::shared_ptr<const OperatorSet> ops,
                 SchemeParams params)
    : space_(std::move(space)), ops_(std::move(ops)), params_(std::move(params)) {
  params_.validate();
  const auto nv = ops_->n_velocity;
  const auto np = ops_->n_pressure;
  const auto n = nv + np + 1;
  const auto mult = static_cast<std::int32_t>(nv + np);

  std::vector<Triplet> trip;
  const auto& d = ops_->div_coupling;
  for (std::size_t q = 0; q < np; ++q)
    for (std::size_t kk = d.row_ptr()[q]; kk < d.row_ptr()[q + 1]; ++kk) {
      const auto row = static_cast<std::int32_t>(nv + q);
      trip.push_back({d.col_idx()[kk], row, -d.values()[kk]});
      trip.push_back({row, d.col_idx()[kk], -d.values()[kk]});
    }
  for (std::size_t q = 0; q < np; ++q) {
    const auto row = static_cast<std::int32_t>(nv + q);
    trip.push_back({row, mult, ops_->pressure_mean[q]});
    trip.push_back({mult, row, ops_->pressure_mean[q]});
  }
  bordered_coupling_ = CsrMatrix::from_triplets(n, n, trip);

  for (std::size_t i = 0; i < space_->num_scalar_dofs(); ++i)
    if (space_->boundary_nodes()[i]) boundary_scalar_.push_back(static_cast<std::int32_t>(i));
  const double s = params_.k * (params_.gamma + params_.alpha);
  for (int c = 0; c < ops_->dim; ++c) {
    auto& blk = step2_blocks_[static_cast<std::size_t>(c)];
    blk = add_scaled(1.0, ops_->scalar_mass, s, ops_->axis_stiffness[static_cast<std::size_t>(c)]);
    apply_dirichlet(blk, {}, boundary_scalar_);
    if (params_.scheme == SchemeKind::kModularSgd && params_.step2_solver == Step2Solver::kDirect)
      step2_factors_[static_cast<std::size_t>(c)] = factorize(blk);
  }
}

Vec Stepper::load_at(double t) const {
  if (!params_.forcing) return Vec(ops_->n_velocity, 0.0);
  return assemble_load(*space_, params_.forcing, t);
}

SaddleSolution Stepper::solve_bordered(const CsrMatrix& velocity_block, Vec velocity_rhs) {
  const auto nv = ops_->n_velocity;
  const auto n = bordered_coupling_.rows();
  CsrMatrix full = add_scaled(1.0, embed(velocity_block, n), 1.0, bordered_coupling_);
  Vec rhs(n, 0.0);
  std::copy(velocity_rhs.begin(), velocity_rhs.end(), rhs.begin());
  apply_dirichlet(full, rhs, space_->dirichlet_velocity_dofs());
  saddle_factor_.factorize(full);
  const Vec x = saddle_factor_.solve(rhs);
  SaddleSolution out;
  out.u.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nv));
  out.p.assign(x.begin() + static_cast<std::ptrdiff_t>(nv), x.end() - 1);
  out.lambda = x.back();
  return out;
}

SaddleSolution Stepper::step1_momentum(std::span<const double> u_prev, std::span<const double> load) {
  const auto& o = *ops_;
  const double inv_k = 1.0 / params_.k;
  const CsrMatrix conv = params_.convection ? assemble_convection(*space_, u_prev)
                                            : block_diagonal(add_scaled(0.0, o.scalar_mass, 0.0, o.scalar_mass), o.dim);
  const double coeffs[3] = {inv_k, 1.0, params_.nu};
  const CsrMatrix* mats[3] = {&o.mass, &conv, &o.stiffness};
  const CsrMatrix block = linear_combination(coeffs, mats);
  Vec rhs(load.begin(), load.end());
  spmv_add(o.mass, u_prev, inv_k, rhs);
  return solve_bordered(block, std::move(rhs));
}

Vec Stepper::step2_sparse_graddiv(std::span<const double> u_tilde, std::span<const double> u_prev) {
  const auto& o = *ops_;
  const double k = params_.k;
  Vec rhs = spmv(o.mass, u_tilde);
  if (params_.gamma + params_.alpha != 0.0) spmv_add(o.graddiv_diag, u_prev, k * (params_.gamma + params_.alpha), rhs);
  if (params_.gamma != 0.0) spmv_add(o.graddiv_full, u_prev, -k * params_.gamma, rhs);

  const auto ns = o.n_scalar;
  Vec out(o.n_velocity, 0.0);
  for (int c = 0; c < o.dim; ++c) {
    const auto off = static_cast<std::size_t>(c) * ns;
    Vec r(rhs.begin() + static_cast<std::ptrdiff_t>(off), rhs.begin() + static_cast<std::ptrdiff_t>(off + ns));
    zero_dofs(r, boundary_scalar_);
    Vec x;
    if (params_.step2_solver == Step2Solver::kDirect) {
      auto& f = step2_factors_[static_cast<std::size_t>(c)];
      if (!f.factorized()) f = factorize(step2_blocks_[static_cast<std::size_t>(c)]);  // other schemes only call this directly
      x = f.solve(r);
    } else {
      x = cg_solve(step2_blocks_[static_cast<std::size_t>(c)], r, params_.cg_tol, params_.cg_maxit,
                   Preconditioner::kJacobi)
              .x;
    }
    std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
  }
  return out;
}

SaddleSolution Stepper::step_sgd1(std::span<const double> u_prev, std::span<const double> load) {
  const auto& o = *ops_;
  const double inv_k = 1.0 / params_.k;
  const double s = params_.gamma + params_.alpha;
  const CsrMatrix conv = params_.convection ? assemble_convection(*space_, u_prev)
                                            : block_diagonal(add_scaled(0.0, o.scalar_mass, 0.0, o.scalar_mass), o.dim);
  const double coeffs[4] = {inv_k, 1.0, params_.nu, s};
  const CsrMatrix* mats[4] = {&o.mass, &conv, &o.stiffness, &o.graddiv_diag};
  const CsrMatrix block = linear_combination(coeffs, mats);
  Vec rhs(load.begin(), load.end());
  spmv_add(o.mass, u_prev, inv_k, rhs);
  if (s != 0.0) spmv_add(o.graddiv_diag, u_prev, s, rhs);
  if (params_.gamma != 0.0) spmv_add(o.graddiv_full, u_prev, -params_.gamma, rhs);
  return solve_bordered(block, std::move(rhs));
}

SaddleSolution Stepper::step_coupled_graddiv(std::span<const double> u_prev, std::span<const double> load) {
  const auto& o = *ops_;
  const double inv_k = 1.0 / params_.k;
  const CsrMatrix conv = params_.convection ? assemble_convection(*space_, u_prev)
                                            : block_diagonal(add_scaled(0.0, o.scalar_mass, 0.0, o.scalar_mass), o.dim);
  const double coeffs[4] = {inv_k, 1.0, params_.nu, params_.gamma};
  const CsrMatrix* mats[4] = {&o.mass, &conv, &o.stiffness, &o.graddiv_full};
  const CsrMatrix block = linear_combination(coeffs, mats);
  Vec rhs(load.begin(), load.end());
  spmv_add(o.mass, u_prev, inv_k, rhs);
  return solve_bordered(block, std::move(rhs));
}

void Stepper::advance(FlowState& state, std::span<const double> load) {
  SaddleSolution sol;
  switch (params_.scheme) {
    case SchemeKind::kModularSgd:
      sol = step1_momentum(state.u_prev, load);
      state.u_tilde = sol.u;
      if (!all_finite(state.u_tilde))
        throw Error(ErrorCode::kBlowUp, "non-finite intermediate velocity at step " + std::to_string(state.n + 1));
      state.u_next = step2_sparse_graddiv(state.u_tilde, state.u_prev);
      break;
    case SchemeKind::kSgd1:
      sol = step_sgd1(state.u_prev, load);
      state.u_next = sol.u;
      state.u_tilde = sol.u;
      break;
    case SchemeKind::kCoupledGradDiv:
      sol = step_coupled_graddiv(state.u_prev, load);
      state.u_next = sol.u;
      state.u_tilde = sol.u;
      break;
  }
  state.p = std::move(sol.p);
  state.lambda = sol.lambda;
  state.n += 1;
  state.t = static_cast<double>(state.n) * params_.k;
  if (!all_finite(state.u_next) || !all_finite(state.p))
    throw Error(ErrorCode::kBlowUp, "non-finite state at step " + std::to_string(state.n));
}

Simulation::Simulation(std::shared_ptr<const TaylorHoodSpace> space, std::shared_ptr<const OperatorSet> ops,
                       const SchemeParams& params, RunOptions options)
    : stepper_(std::move(space), std::move(ops), params), options_(std::move(options)) {
  const auto& o = stepper_.ops();
  regime_ = options_.energy_ledger ? select_ledger(o.dim, params.scheme, params.gamma, params.alpha) : LedgerRegime::kNone;
  state_.u_prev = options_.u0.empty() ? Vec(o.n_velocity, 0.0) : options_.u0;
  if (state_.u_prev.size() != o.n_velocity) throw Error(ErrorCode::kInvalidArgument, "initial velocity has wrong length");
  zero_dofs(state_.u_prev, stepper_.space().dirichlet_velocity_dofs());
  planned_ = params.num_steps();
  if (options_.max_steps >= 0) planned_ = std::min(planned_, options_.max_steps);
  finished_ = planned_ == 0;
}

StepOutcome Simulation::step() {
  if (finished_) throw Error(ErrorCode::kInvalidArgument, "simulation already finished");
  const auto& o = stepper_.ops();
  const auto& prm = stepper_.params();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  StepOutcome out;
  out.n = state_.n + 1;

  const double t_next = static_cast<double>(state_.n + 1) * prm.k;
  const Vec load = stepper_.load_at(t_next);
  try {
    stepper_.advance(state_, load);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kBlowUp) throw;
    finished_ = true;
    out.blowup = true;
    return out;
  }
  StepRecord rec;
  rec.n = state_.n;
  rec.t = state_.t;
  rec.kinetic_energy = kinetic_energy(state_.u_next, o.mass);
  rec.div_norm = div_norm(state_.u_next, o.graddiv_full);
  Vec pair(state_.u_next);
  for (std::size_t i = 0; i < pair.size(); ++i) pair[i] += state_.u_prev[i];
  rec.div_norm_sum = div_norm(pair, o.graddiv_full);
  if (regime_ != LedgerRegime::kNone) {
    const LedgerTerms lt = energy_ledger(o, regime_, prm.nu, prm.k, prm.gamma, prm.alpha, state_.u_prev,
                                         state_.u_tilde, state_.u_next, load);
    rec.E = lt.energy_next;
    rec.D = lt.dissipation;
    rec.identity_residual = lt.residual;
    rec.load_pairing = lt.load_pairing;
  } else {
    rec.E = rec.D = rec.identity_residual = kNaN;
    rec.load_pairing = dot(load, state_.u_tilde);
  }
  if (!std::isfinite(rec.kinetic_energy)) {
    finished_ = true;
    out.blowup = true;
    return out;
  }
  for (const auto& obs : options_.observers) obs(state_, rec);
  out.record = rec;
  out.blowup = rec.kinetic_energy > prm.blowup_energy;
  state_.u_prev.swap(state_.u_next);
  finished_ = out.blowup || state_.n >= planned_;
  return out;
}

SimulationResult run_simulation(const std::shared_ptr<const TaylorHoodSpace>& space,
                                const std::shared_ptr<const OperatorSet>& ops, const SchemeParams& params,
                                RunOptions options) {
  Simulation sim(space, ops, params, std::move(options));
  SimulationResult result;
  result.records.reserve(static_cast<std::size_t>(sim.steps_planned()));
  while (!sim.finished()) {
    const StepOutcome out = sim.step();
    if (out.record) {
      result.records.push_back(*out.record);
      result.max_kinetic_energy = std::max(result.max_kinetic_energy, out.record->kinetic_energy);
    }
    if (out.blowup) result.blowup_step = out.n;
  }
  result.final_state = sim.state();
  return result;
}

SimulationResult run_simulation(const SimplicialMesh& mesh, const SchemeParams& params, RunOptions options) {
  auto space = std::make_shared<const TaylorHoodSpace>(std::make_shared<const SimplicialMesh>(mesh));
  auto ops = std::make_shared<const OperatorSet>(assemble_operators(*space));
  return run_simulation(space, ops, params, std::move(options));
}

}  // namespace sgd
