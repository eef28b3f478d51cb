#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "oracle.hpp"
#include "sgd/diagnostics.hpp"
#include "sgd/error.hpp"
#include "sgd/forcing.hpp"
#include "sgd/schemes.hpp"

using namespace sgd;

namespace {

struct Setup {
  std::shared_ptr<const TaylorHoodSpace> space;
  std::shared_ptr<const OperatorSet> ops;
};

Setup setup(SimplicialMesh m) {
  Setup s;
  s.space = std::make_shared<const TaylorHoodSpace>(std::make_shared<const SimplicialMesh>(std::move(m)));
  s.ops = std::make_shared<const OperatorSet>(assemble_operators(*s.space));
  return s;
}

}  // namespace

TEST_CASE("kinetic energy and divergence norm") {
  const auto s = setup(generate_unit_square(3));
  const Vec zero(s.ops->n_velocity, 0.0);
  CHECK(kinetic_energy(zero, s.ops->mass) == 0.0);
  const auto one = interpolate(*s.space, [](const Point&, double) { return Vec3{1, 0, 0}; }, 0.0);
  CHECK(std::abs(kinetic_energy(one, s.ops->mass) - 0.5) < 1e-13);
  const auto sol = interpolate(*s.space, [](const Point& x, double) { return Vec3{x[0], -x[1], 0}; }, 0.0);
  CHECK(std::pow(div_norm(sol, s.ops->graddiv_full), 2) < 1e-13);  // the norm is a square root of roundoff
  const auto src = interpolate(*s.space, [](const Point& x, double) { return Vec3{x[0], x[1], 0}; }, 0.0);
  CHECK(std::abs(div_norm(src, s.ops->graddiv_full) - 2.0) < 1e-13);

  const auto tiny = setup(oracle::skew_pair());
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(-1, 1);
  Vec v(tiny.ops->n_velocity);
  for (double& x : v) x = U(rng);
  CHECK(kinetic_energy(v, tiny.ops->mass) == doctest::Approx(0.5 * oracle::qf(oracle::mass(*tiny.space), v)).epsilon(1e-13));
  CHECK(div_norm(v, tiny.ops->graddiv_full) ==
        doctest::Approx(std::sqrt(oracle::qf(oracle::graddiv_full(*tiny.space), v))).epsilon(1e-13));
}

TEST_CASE("ledger regime selection") {
  CHECK(select_ledger(3, SchemeKind::kModularSgd, 1, 0.7) == LedgerRegime::kBStar);
  CHECK(select_ledger(3, SchemeKind::kModularSgd, 1, 0.5) == LedgerRegime::kBStar);
  CHECK(select_ledger(3, SchemeKind::kModularSgd, 1, 2) == LedgerRegime::kB);
  CHECK(select_ledger(3, SchemeKind::kModularSgd, 1, 2.5) == LedgerRegime::kB);
  CHECK(select_ledger(3, SchemeKind::kModularSgd, 1, 0.3) == LedgerRegime::kNone);
  CHECK(select_ledger(3, SchemeKind::kSgd1, 1, 0.7) == LedgerRegime::kNone);
  CHECK(select_ledger(2, SchemeKind::kModularSgd, 1, 0) == LedgerRegime::kPlanar);
  CHECK(select_ledger(2, SchemeKind::kModularSgd, 1, 0.5) == LedgerRegime::kNone);
  CHECK(lemma_constant(3, 1, 2) == 0.0);
  CHECK(lemma_constant(3, 1, 5) == 1.0);
  CHECK(lemma_constant(2, 1, 3) == 1.0);
}

TEST_CASE("B and B* relations") {
  const auto s = setup(generate_unit_cube(2));
  const Vec zero(s.ops->n_velocity, 0.0);
  CHECK(squared_seminorm_B(*s.ops, zero, 1, 0.5) == 0.0);
  CHECK(squared_seminorm_Bstar(*s.ops, zero, 1, 0.5) == 0.0);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Vec v(s.ops->n_velocity);
    for (double& x : v) x = U(rng);
    const double b = squared_seminorm_B(*s.ops, v, 1.5, 3.0);
    CHECK(squared_seminorm_Bstar(*s.ops, v, 1.5, 3.0) == doctest::Approx(b).epsilon(1e-14));
    CHECK(squared_seminorm_Bstar(*s.ops, v, 1.0, 0.0) >= 0.0);
  }

  // with G* removed the form is negative and must be flagged
  OperatorSet broken = *s.ops;
  for (double& x : broken.graddiv_diag.values()) x = 0.0;
  Vec v(s.ops->n_velocity);
  for (double& x : v) x = U(rng);
  try {
    squared_seminorm_Bstar(broken, v, 1.0, 0.0);
    FAIL("expected a sign error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInternal);
  }
}

TEST_CASE("zero trajectory has a zero ledger") {
  const auto s = setup(generate_unit_cube(2));
  const Vec z(s.ops->n_velocity, 0.0);
  for (auto regime : {LedgerRegime::kBStar, LedgerRegime::kB}) {
    const auto t = energy_ledger(*s.ops, regime, 1e-4, 0.05, 1, 0.7, z, z, z, z);
    CHECK(t.energy_next == 0.0);
    CHECK(t.dissipation == 0.0);
    CHECK(t.residual == 0.0);
  }
  CHECK_THROWS_AS(energy_ledger(*s.ops, LedgerRegime::kNone, 1e-4, 0.05, 1, 0.3, z, z, z, z), Error);
}

TEST_CASE("energy identity over 20 steps, cube n=3, alpha = 0.7") {
  const auto s = setup(generate_unit_cube(3));
  const oracle::DenseOps dense(*s.ops);
  SchemeParams p;
  p.gamma = 1.0;
  p.alpha = 0.7;
  p.forcing = builtin_forcing("box_rotational");
  RunOptions o;
  o.max_steps = 20;
  int checked = 0;
  o.observers.push_back([&](const FlowState& st, const StepRecord& rec) {
    const auto load = assemble_load(*s.space, p.forcing, st.t);
    const auto l = oracle::bstar_ledger(dense, p.nu, p.k, p.gamma, p.alpha, st.u_prev, st.u_tilde, st.u_next, load);
    const double tol = 1e-8 * std::max(l.e_prev, 1.0);
    CHECK(std::abs(l.residual()) <= tol);
    CHECK(std::abs(rec.identity_residual) <= tol);
    CHECK(rec.E == doctest::Approx(l.e_next).epsilon(1e-10));
    CHECK(rec.D == doctest::Approx(l.d).epsilon(1e-10));
    ++checked;
  });
  const auto r = run_simulation(s.space, s.ops, p, o);
  CHECK(checked == 20);
  CHECK(r.records.back().kinetic_energy > 0.0);
}

TEST_CASE("alpha = 2 gamma: both ledgers close") {
  const auto s = setup(generate_unit_cube(2));
  const oracle::DenseOps dense(*s.ops);
  SchemeParams p;
  p.gamma = 1.0;
  p.alpha = 2.0;
  p.forcing = builtin_forcing("box_rotational");
  RunOptions o;
  o.max_steps = 20;
  o.observers.push_back([&](const FlowState& st, const StepRecord&) {
    const auto load = assemble_load(*s.space, p.forcing, st.t);
    const auto a = oracle::bstar_ledger(dense, p.nu, p.k, p.gamma, p.alpha, st.u_prev, st.u_tilde, st.u_next, load);
    const auto b = oracle::b_ledger(dense, p.nu, p.k, p.gamma, p.alpha, st.u_prev, st.u_tilde, st.u_next, load);
    CHECK(std::abs(a.residual()) <= 1e-8 * std::max(a.e_prev, 1.0));
    CHECK(std::abs(b.residual()) <= 1e-8 * std::max(b.e_prev, 1.0));
    for (auto regime : {LedgerRegime::kBStar, LedgerRegime::kB}) {
      const auto t = energy_ledger(*s.ops, regime, p.nu, p.k, p.gamma, p.alpha, st.u_prev, st.u_tilde, st.u_next, load);
      CHECK(std::abs(t.residual) <= 1e-8 * std::max(t.energy_prev, 1.0));
      CHECK(t.dissipation >= 0.0);
    }
  });
  run_simulation(s.space, s.ops, p, o);
}

TEST_CASE("rates") {
  // published sweep values, gamma 0.1 -> 1 and 10 -> 20
  CHECK(std::round(rate(0.64305, 0.033985, 0.1, 1) * 100) / 100 == doctest::Approx(-1.28));
  CHECK(std::round(rate(0.0018455, 0.00074997, 10, 20) * 100) / 100 == doctest::Approx(-1.30));
  CHECK(std::round(rate(1.1033, 0.24826, 0.1, 1) * 100) / 100 == doctest::Approx(-0.65));
  CHECK(rate(0.3, 0.3, 2, 4) == 0.0);
  CHECK_THROWS_AS(rate(0.0, 1.0, 1, 2), Error);
  CHECK_THROWS_AS(rate(1.0, 1.0, 1, 1), Error);

  const std::vector<double> g{0.1, 1, 10, 100}, y{20, 2, 0.2, 0.02};
  CHECK(log_log_slope(g, y) == doctest::Approx(-1.0).epsilon(1e-12));

  std::vector<SweepRow> rows(3);
  rows[0].gamma = 0;
  rows[1].gamma = 1;
  rows[2].gamma = 10;
  for (auto& r : rows) {
    r.avg_div_sq = 1.0 / (r.gamma + 1);
    r.final_div = 2.0 / (r.gamma + 1);
  }
  fill_rates(rows);
  CHECK_FALSE(rows[0].rate_avg.has_value());
  CHECK_FALSE(rows[1].rate_avg.has_value());
  REQUIRE(rows[2].rate_avg.has_value());
  CHECK(*rows[2].rate_avg == doctest::Approx(std::log(2.0 / 11.0) / std::log(10.0)));
  CHECK(*rows[2].rate_final == doctest::Approx(std::log(2.0 / 11.0) / std::log(10.0)));
}

TEST_CASE("time averages") {
  std::vector<StepRecord> r(4);
  for (int i = 0; i < 4; ++i) {
    r[static_cast<std::size_t>(i)].div_norm = i;
    r[static_cast<std::size_t>(i)].div_norm_sum = 2 * i;
  }
  CHECK(time_average_div(r) == doctest::Approx(14.0 / 4));
  CHECK(time_average_div_sum(r) == doctest::Approx(56.0 / 4));
  CHECK_THROWS_AS(time_average_div(std::vector<StepRecord>{}), Error);
}
