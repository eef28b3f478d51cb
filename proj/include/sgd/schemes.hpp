#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgd/assembly.hpp"
#include "sgd/diagnostics.hpp"
#include "sgd/fem_space.hpp"
#include "sgd/sparse.hpp"

namespace sgd {

std::string to_string(SchemeKind kind);
/// Accepts "modular_sgd", "sgd1" and "coupled_graddiv".
SchemeKind parse_scheme(const std::string& name);

enum class Step2Solver { kDirect, kCg };

struct SchemeParams {
  double nu = 1e-4;
  double k = 0.05;
  double gamma = 1.0;
  double alpha = 0.5;
  SchemeKind scheme = SchemeKind::kModularSgd;
  double t_end = 10.0;
  VectorField forcing;  // zero when empty
  bool convection = true;
  Step2Solver step2_solver = Step2Solver::kDirect;
  double cg_tol = 1e-13;
  int cg_maxit = 5000;
  /// Kinetic energy above which a trajectory counts as blown up.
  double blowup_energy = 1e12;

  /// Throws Error(kInvalidArgument) on violated parameter ranges.
  void validate() const;
  /// ceil(t_end / k), robust to round-off in the quotient.
  long num_steps() const;
};

struct FlowState {
  Vec u_prev;   // u^n
  Vec u_tilde;  // u~^{n+1}, modular scheme only
  Vec u_next;   // u^{n+1}
  Vec p;        // p^{n+1}
  double lambda = 0.0;  // mean-pressure multiplier
  long n = 0;
  double t = 0.0;
};

struct SaddleSolution {
  Vec u;
  Vec p;
  double lambda = 0.0;
};

/// Time stepper for one space, operator set and parameter set.
///
/// The Step-2 component blocks are factored at construction and reused for
/// every step; the bordered momentum system is refactored each step on a
/// fixed symbolic analysis.
class Stepper {
 public:
  Stepper(std::shared_ptr<const TaylorHoodSpace> space, std::shared_ptr<const OperatorSet> ops, SchemeParams params);

  const TaylorHoodSpace& space() const noexcept { return *space_; }
  const OperatorSet& ops() const noexcept { return *ops_; }
  const SchemeParams& params() const noexcept { return params_; }

  /// Step 1 of the modular method: implicit momentum with the pressure
  /// constraint. `load` is the assembled load at t^{n+1}.
  SaddleSolution step1_momentum(std::span<const double> u_prev, std::span<const double> load);
  /// Step 2: [M + k(gamma+alpha) G*] u^{n+1} = M u~ + k[(gamma+alpha) G* - gamma G] u^n.
  Vec step2_sparse_graddiv(std::span<const double> u_tilde, std::span<const double> u_prev);
  /// One-step sparse grad-div with the diagonal block implicit.
  SaddleSolution step_sgd1(std::span<const double> u_prev, std::span<const double> load);
  /// Standard fully coupled grad-div step.
  SaddleSolution step_coupled_graddiv(std::span<const double> u_prev, std::span<const double> load);

  /// Advances state by one step of the configured scheme. On return
  /// state.u_next/u_tilde/p hold the new values and state.n, state.t are
  /// incremented; the caller rotates u_next into u_prev. Throws
  /// Error(kBlowUp) when the new state is non-finite.
  void advance(FlowState& state, std::span<const double> load);

  /// Assembled load at time t for the configured forcing.
  Vec load_at(double t) const;

  /// Step-2 matrix of one velocity component with Dirichlet rows eliminated.
  const CsrMatrix& step2_block(int component) const { return step2_blocks_[static_cast<std::size_t>(component)]; }

 private:
  SaddleSolution solve_bordered(const CsrMatrix& velocity_block, Vec velocity_rhs);

  std::shared_ptr<const TaylorHoodSpace> space_;
  std::shared_ptr<const OperatorSet> ops_;
  SchemeParams params_;
  CsrMatrix bordered_coupling_;  // pressure/multiplier part, velocity block zero
  Factorization saddle_factor_;
  std::array<CsrMatrix, 3> step2_blocks_;
  std::array<Factorization, 3> step2_factors_;
  std::vector<std::int32_t> boundary_scalar_;
};

using StepObserver = std::function<void(const FlowState&, const StepRecord&)>;

struct RunOptions {
  Vec u0;                    // zero when empty; Dirichlet entries are zeroed
  long max_steps = -1;       // >= 0 caps the number of steps
  bool energy_ledger = true; // false leaves E, D and the residual as NaN
  std::vector<StepObserver> observers;
};

struct StepOutcome {
  long n = 0;  // index of the attempted step
  std::optional<StepRecord> record;  // empty when the new state is non-finite
  bool blowup = false;               // non-finite state or energy above the cap
};

/// Stateful driver: owns the stepper and the current state and produces one
/// StepRecord per step.
class Simulation {
 public:
  Simulation(std::shared_ptr<const TaylorHoodSpace> space, std::shared_ptr<const OperatorSet> ops,
             const SchemeParams& params, RunOptions options = {});

  /// Advances one step. After a blow-up the simulation is finished.
  StepOutcome step();
  bool finished() const noexcept { return finished_; }
  long steps_taken() const noexcept { return state_.n; }
  long steps_planned() const noexcept { return planned_; }
  /// state().u_prev holds the latest completed velocity.
  const FlowState& state() const noexcept { return state_; }
  const Stepper& stepper() const noexcept { return stepper_; }
  LedgerRegime regime() const noexcept { return regime_; }

 private:
  Stepper stepper_;
  RunOptions options_;
  LedgerRegime regime_;
  FlowState state_;
  long planned_ = 0;
  bool finished_ = false;
};

/// Result of a full run.
struct SimulationResult {
  std::vector<StepRecord> records;  // one per completed step, n = 1..N
  std::optional<long> blowup_step;
  double max_kinetic_energy = 0.0;
  FlowState final_state;
};

/// Runs from u0 for num_steps() steps or until blow-up.
SimulationResult run_simulation(const std::shared_ptr<const TaylorHoodSpace>& space,
                                const std::shared_ptr<const OperatorSet>& ops, const SchemeParams& params,
                                RunOptions options = {});

/// Convenience overload that builds the space and operators.
SimulationResult run_simulation(const SimplicialMesh& mesh, const SchemeParams& params, RunOptions options = {});

}  // namespace sgd
