#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sgd/assembly.hpp"

namespace sgd {

enum class SchemeKind { kModularSgd, kSgd1, kCoupledGradDiv };

/// Which telescoping energy balance applies to a run.
enum class LedgerRegime {
  kNone,      // no guarantee (wrong scheme, dimension or alpha range)
  kBStar,     // 3d modular, 2 gamma > alpha >= gamma / 2: B* ledger, identity
  kB,         // 3d modular, alpha >= 2 gamma: B ledger, identity
  kPlanar,    // 2d modular, alpha = 0: inequality (residual <= 0)
};

LedgerRegime select_ledger(int dim, SchemeKind scheme, double gamma, double alpha);

double kinetic_energy(std::span<const double> u, const CsrMatrix& mass);
double div_norm(std::span<const double> u, const CsrMatrix& graddiv_full);

/// Constant c in B(v,v) >= c ||div v||^2: (alpha - (dim-1) gamma) / dim.
double lemma_constant(int dim, double gamma, double alpha);

/// v^T [(gamma+alpha) G* - gamma G] v.
double squared_seminorm_B(const OperatorSet& ops, std::span<const double> v, double gamma, double alpha);
/// v^T [B - c G] v with c = lemma_constant. Values down to -1e-10 * scale
/// are clamped to zero; anything more negative throws Error(kInternal).
double squared_seminorm_Bstar(const OperatorSet& ops, std::span<const double> v, double gamma, double alpha);
/// Same quadratic form without the clamp or the sign check.
double raw_Bstar(const OperatorSet& ops, std::span<const double> v, double gamma, double alpha);

struct LedgerTerms {
  double energy_prev = 0.0;   // E^n
  double energy_next = 0.0;   // E^{n+1}
  double dissipation = 0.0;   // D^{n+1}
  double load_pairing = 0.0;  // (f^{n+1}, u~^{n+1})
  /// E^{n+1} - E^n + 2k D^{n+1} - 2k (f^{n+1}, u~^{n+1}).
  double residual = 0.0;
};

/// Evaluates the regime's ledger from one modular step. `load` is the
/// assembled load vector at t^{n+1}. Throws for kNone.
LedgerTerms energy_ledger(const OperatorSet& ops, LedgerRegime regime, double nu, double k, double gamma, double alpha,
                          std::span<const double> u_prev, std::span<const double> u_tilde,
                          std::span<const double> u_next, std::span<const double> load);

struct StepRecord {
  long n = 0;
  double t = 0.0;
  double kinetic_energy = 0.0;
  double div_norm = 0.0;
  double div_norm_sum = 0.0;  // ||div(u^{n+1} + u^n)||
  double E = 0.0;             // NaN when no ledger applies
  double D = 0.0;
  double identity_residual = 0.0;
  double load_pairing = 0.0;
};

/// Mean of div_norm^2 over the records.
double time_average_div(std::span<const StepRecord> records);
/// Mean of div_norm_sum^2 over the records.
double time_average_div_sum(std::span<const StepRecord> records);

/// ln(q2/q1) / ln(g2/g1). Throws for nonpositive inputs or g1 == g2.
double rate(double q1, double q2, double g1, double g2);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

struct SweepRow {
  double gamma = 0.0;
  double alpha = 0.0;
  double avg_div_sq = 0.0;
  double final_div = 0.0;
  std::optional<double> rate_avg;
  std::optional<double> rate_final;
  std::optional<long> blowup_step;
};

/// Fills the rate columns between consecutive rows with distinct positive gammas.
void fill_rates(std::vector<SweepRow>& rows);

}  // namespace sgd
