#include "sgd/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "sgd/error.hpp"

namespace sgd {

LedgerRegime select_ledger(int dim, SchemeKind scheme, double gamma, double alpha) {
  if (scheme != SchemeKind::kModularSgd) return LedgerRegime::kNone;
  if (dim == 2) return alpha == 0.0 ? LedgerRegime::kPlanar : LedgerRegime::kNone;
  if (alpha >= 2.0 * gamma) return LedgerRegime::kB;
  if (alpha >= 0.5 * gamma) return LedgerRegime::kBStar;
  return LedgerRegime::kNone;
}

double kinetic_energy(std::span<const double> u, const CsrMatrix& mass) { return 0.5 * quadratic_form(mass, u); }

double div_norm(std::span<const double> u, const CsrMatrix& graddiv_full) {
  return std::sqrt(std::max(0.0, quadratic_form(graddiv_full, u)));
}

double lemma_constant(int dim, double gamma, double alpha) { return (alpha - (dim - 1) * gamma) / dim; }

double squared_seminorm_B(const OperatorSet& ops, std::span<const double> v, double gamma, double alpha) {
  return (gamma + alpha) * quadratic_form(ops.graddiv_diag, v) - gamma * quadratic_form(ops.graddiv_full, v);
}

double raw_Bstar(const OperatorSet& ops, std::span<const double> v, double gamma, double alpha) {
  const double c = lemma_constant(ops.dim, gamma, alpha);
  return (gamma + alpha) * quadratic_form(ops.graddiv_diag, v) - (gamma + c) * quadratic_form(ops.graddiv_full, v);
}

double squared_seminorm_Bstar(const OperatorSet& ops, std::span<const double> v, double gamma, double alpha) {
  const double gd = quadratic_form(ops.graddiv_diag, v);
  const double value = raw_Bstar(ops, v, gamma, alpha);
  if (value >= 0.0) return value;
  const double scale = (gamma + alpha) * gd;
  if (value >= -1e-10 * std::max(scale, 1e-300)) return 0.0;
  throw Error(ErrorCode::kInternal, "B* form is materially negative (" + std::to_string(value) + ")");
}

namespace {

Vec diff(std::span<const double> a, std::span<const double> b) {
  Vec d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

Vec sum(std::span<const double> a, std::span<const double> b) {
  Vec d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] + b[i];
  return d;
}

}  // namespace

LedgerTerms energy_ledger(const OperatorSet& ops, LedgerRegime regime, double nu, double k, double gamma, double alpha,
                          std::span<const double> u_prev, std::span<const double> u_tilde,
                          std::span<const double> u_next, std::span<const double> load) {
  LedgerTerms out;
  const Vec jump_tilde = diff(u_tilde, u_prev);  // u~^{n+1} - u^n
  const Vec jump_post = diff(u_next, u_tilde);   // u^{n+1} - u~^{n+1}
  const Vec jump = diff(u_next, u_prev);         // u^{n+1} - u^n
  const double common = nu * quadratic_form(ops.stiffness, u_tilde) +
                        (quadratic_form(ops.mass, jump_tilde) + quadratic_form(ops.mass, jump_post)) / (2.0 * k);
  out.load_pairing = dot(load, u_tilde);

  switch (regime) {
    case LedgerRegime::kBStar: {
      const double w = (2.0 * gamma - alpha) / 6.0;
      auto energy = [&](std::span<const double> u) {
        return quadratic_form(ops.mass, u) +
               2.0 * k * (0.5 * raw_Bstar(ops, u, gamma, alpha) + w * quadratic_form(ops.graddiv_full, u));
      };
      out.energy_prev = energy(u_prev);
      out.energy_next = energy(u_next);
      out.dissipation = common + 0.5 * raw_Bstar(ops, jump, gamma, alpha) +
                        (2.0 / 3.0) * (alpha - 0.5 * gamma) * quadratic_form(ops.graddiv_full, u_next) +
                        w * quadratic_form(ops.graddiv_full, sum(u_next, u_prev));
      break;
    }
    case LedgerRegime::kB: {
      auto energy = [&](std::span<const double> u) {
        return quadratic_form(ops.mass, u) + k * squared_seminorm_B(ops, u, gamma, alpha);
      };
      out.energy_prev = energy(u_prev);
      out.energy_next = energy(u_next);
      out.dissipation = common + gamma * quadratic_form(ops.graddiv_full, u_next) +
                        0.5 * squared_seminorm_B(ops, jump, gamma, alpha);
      break;
    }
    case LedgerRegime::kPlanar: {
      auto energy = [&](std::span<const double> u) {
        return quadratic_form(ops.mass, u) + k * gamma * quadratic_form(ops.graddiv_diag, u);
      };
      out.energy_prev = energy(u_prev);
      out.energy_next = energy(u_next);
      out.dissipation = common;
      break;
    }
    case LedgerRegime::kNone:
      throw Error(ErrorCode::kInvalidArgument, "no energy ledger applies to this configuration");
  }
  out.residual = out.energy_next - out.energy_prev + 2.0 * k * out.dissipation - 2.0 * k * out.load_pairing;
  return out;
}

double time_average_div(std::span<const StepRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "time average over zero records");
  double s = 0.0;
  for (const auto& r : records) s += r.div_norm * r.div_norm;
  return s / static_cast<double>(records.size());
}

double time_average_div_sum(std::span<const StepRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "time average over zero records");
  double s = 0.0;
  for (const auto& r : records) s += r.div_norm_sum * r.div_norm_sum;
  return s / static_cast<double>(records.size());
}

double rate(double q1, double q2, double g1, double g2) {
  if (!(q1 > 0.0) || !(q2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rate needs positive quantities");
  if (!(g1 > 0.0) || !(g2 > 0.0) || g1 == g2) throw Error(ErrorCode::kInvalidArgument, "rate needs distinct positive parameters");
  return std::log(q2 / q1) / std::log(g2 / g1);
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "slope needs two or more points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "slope needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw Error(ErrorCode::kInvalidArgument, "slope undefined for identical abscissae");
  return (n * sxy - sx * sy) / den;
}

void fill_rates(std::vector<SweepRow>& rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].rate_avg.reset();
    rows[i].rate_final.reset();
    if (i == 0) continue;
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    if (!(a.gamma > 0.0) || !(b.gamma > 0.0) || a.gamma == b.gamma) continue;
    if (a.avg_div_sq > 0.0 && b.avg_div_sq > 0.0) rows[i].rate_avg = rate(a.avg_div_sq, b.avg_div_sq, a.gamma, b.gamma);
    if (a.final_div > 0.0 && b.final_div > 0.0) rows[i].rate_final = rate(a.final_div, b.final_div, a.gamma, b.gamma);
  }
}

}  // namespace sgd
