#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "oracle.hpp"
#include "sgd/assembly.hpp"
#include "sgd/diagnostics.hpp"
#include "sgd/error.hpp"
#include "sgd/forcing.hpp"

using namespace sgd;

namespace {

std::shared_ptr<const TaylorHoodSpace> space_of(SimplicialMesh m) {
  return std::make_shared<const TaylorHoodSpace>(std::make_shared<const SimplicialMesh>(std::move(m)));
}

std::vector<std::shared_ptr<const TaylorHoodSpace>> tiny_spaces() {
  return {space_of(generate_unit_square(1)), space_of(oracle::skew_pair()), space_of(oracle::star_square()),
          space_of(oracle::star_tet()), space_of(generate_unit_cube(1))};
}

// Agreement relative to the size of the entries.
bool agrees(const CsrMatrix& got, const oracle::Dense& want, double tol) {
  const double err = oracle::max_abs_diff(oracle::from_csr(got), want);
  const double scale = std::max(1.0, oracle::max_abs(want));
  if (err > tol * scale) MESSAGE("max entry difference " << err << " at scale " << scale);
  return err <= tol * scale;
}

Vec random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> U(-1, 1);
  Vec v(n);
  for (double& x : v) x = U(rng);
  return v;
}

Vec field(const TaylorHoodSpace& s, Vec3 (*f)(const Point&)) {
  return interpolate(s, [f](const Point& x, double) { return f(x); }, 0.0);
}

}  // namespace

TEST_CASE("operators agree with the dense oracle on tiny meshes") {
  std::mt19937_64 rng(11);
  for (const auto& sp : tiny_spaces()) {
    const auto& s = *sp;
    CAPTURE(s.dim());
    CAPTURE(s.mesh().num_cells());
    CHECK(agrees(assemble_scalar_mass(s), oracle::scalar_mass(s), 1e-13));
    CHECK(agrees(assemble_mass(s), oracle::mass(s), 1e-13));
    CHECK(agrees(assemble_stiffness(s), oracle::stiffness(s), 1e-13));
    CHECK(agrees(assemble_graddiv_full(s), oracle::graddiv_full(s), 1e-13));
    CHECK(agrees(assemble_graddiv_diag(s), oracle::graddiv_diag(s), 1e-13));
    CHECK(agrees(assemble_div_coupling(s), oracle::div_coupling(s), 1e-13));
    for (int a = 0; a < s.dim(); ++a)
      for (int b = 0; b < s.dim(); ++b) CHECK(agrees(assemble_scalar_derivative_pair(s, a, b), oracle::derivative_pair(s, a, b), 1e-13));
    CHECK(oracle::max_abs_diff(assemble_pressure_mean(s), oracle::pressure_mean(s)) < 1e-14);

    const auto w = random_vec(rng, s.num_velocity_dofs());
    CHECK(agrees(assemble_convection(s, w), oracle::convection(s, w), 1e-13));

    oracle::Affine f;
    f.b = {0.3, -1.2, 0.7};
    f.A = {{{1.0, -0.5, 0.2}, {0.4, 2.0, -1.0}, {-0.3, 0.1, 0.9}}};
    const auto load = assemble_load(s, [&](const Point& x, double) { return f(x); }, 0.0);
    CHECK(oracle::max_abs_diff(load, oracle::load(s, f)) < 1e-14);
  }
}

TEST_CASE("mass of the constant field") {
  const auto sq = space_of(generate_unit_square(3));
  const auto c1 = space_of(generate_unit_cube(1));
  const Vec ones_sq(sq->num_velocity_dofs(), 1.0), ones_c(c1->num_velocity_dofs(), 1.0);
  CHECK(std::abs(quadratic_form(assemble_mass(*sq), ones_sq) - 2.0) < 1e-12);
  CHECK(std::abs(quadratic_form(assemble_mass(*c1), ones_c) - 3.0) < 1e-12);
}

TEST_CASE("stiffness kernel and the field (x, 0)") {
  const auto s = space_of(generate_unit_square(3));
  const auto k = assemble_stiffness(*s);
  CHECK(oracle::max_abs(spmv(k, Vec(s->num_velocity_dofs(), 1.0))) < 1e-12);
  const auto u = field(*s, [](const Point& x) { return Vec3{x[0], 0, 0}; });
  CHECK(std::abs(quadratic_form(k, u) - 1.0) < 1e-12);
}

TEST_CASE("symmetry, definiteness and block structure") {
  const auto s = space_of(generate_unit_cube(2));
  const auto ops = assemble_operators(*s);
  for (const auto* m : {&ops.mass, &ops.stiffness, &ops.graddiv_full, &ops.graddiv_diag}) CHECK(m->is_symmetric(1e-13));
  const auto ns = static_cast<std::int32_t>(ops.n_scalar);
  const auto& gd = ops.graddiv_diag;
  bool cross = false;
  for (std::size_t i = 0; i < gd.rows(); ++i)
    for (std::size_t k = gd.row_ptr()[i]; k < gd.row_ptr()[i + 1]; ++k)
      cross = cross || (static_cast<std::int32_t>(i) / ns != gd.col_idx()[k] / ns && gd.values()[k] != 0.0);
  CHECK_FALSE(cross);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = random_vec(rng, ops.n_velocity);
    CHECK(quadratic_form(ops.mass, v) > 0);
    CHECK(quadratic_form(ops.stiffness, v) >= -1e-12);
    CHECK(quadratic_form(ops.graddiv_full, v) >= -1e-12);
    CHECK(quadratic_form(ops.graddiv_diag, v) >= -1e-12);
  }
}

TEST_CASE("skew convection") {
  const auto s = space_of(generate_unit_cube(2));
  CHECK(assemble_convection(*s, Vec(s->num_velocity_dofs(), 0.0)).max_abs() == 0.0);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w = random_vec(rng, s->num_velocity_dofs());
    const auto c = assemble_convection(*s, w);
    const auto v = random_vec(rng, s->num_velocity_dofs());
    CHECK(std::abs(quadratic_form(c, v)) <= 1e-12 * dot(v, v) * norm2(w));
    const auto sum = add_scaled(1.0, c, 1.0, c.transpose());
    CHECK(sum.max_abs() <= 1e-12 * c.max_abs());
  }
}

TEST_CASE("divergence coupling") {
  const auto s = space_of(generate_unit_square(4));
  const auto d = assemble_div_coupling(*s);
  const auto u0 = field(*s, [](const Point& x) { return Vec3{x[0], -x[1], 0}; });
  CHECK(oracle::max_abs(spmv(d, u0)) < 1e-12);
  const auto u1 = field(*s, [](const Point& x) { return Vec3{x[0], x[1], 0}; });
  const auto du = spmv(d, u1);
  double total = 0;
  for (double v : du) total += v;  // pairing with q = 1
  CHECK(std::abs(total - 2.0) < 1e-12);
}

TEST_CASE("grad-div matrices on analytic fields") {
  const auto s = space_of(generate_unit_square(3));
  const auto g = assemble_graddiv_full(*s), gd = assemble_graddiv_diag(*s);
  const auto xy = field(*s, [](const Point& x) { return Vec3{x[0], x[1], 0}; });
  CHECK(std::abs(quadratic_form(g, xy) - 4.0) < 1e-12);
  CHECK(std::abs(quadratic_form(gd, xy) - 2.0) < 1e-12);
  const auto fx = field(*s, [](const Point& x) { return Vec3{x[0] * x[0] - 0.3 * x[0], 0, 0}; });
  CHECK(std::abs(quadratic_form(g, fx) - quadratic_form(gd, fx)) < 1e-13);
  const auto sol = field(*s, [](const Point& x) { return Vec3{x[0], -x[1], 0}; });
  CHECK(std::abs(quadratic_form(g, sol)) < 1e-13);

  const auto c = space_of(generate_unit_cube(2));
  const auto g3 = assemble_graddiv_full(*c), gd3 = assemble_graddiv_diag(*c);
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_vec(rng, c->num_velocity_dofs());
    CHECK(quadratic_form(g3, v) <= 3 * quadratic_form(gd3, v) * (1 + 1e-13));
  }
}

TEST_CASE("load vectors") {
  const auto s = space_of(generate_unit_square(3));
  CHECK(oracle::max_abs(assemble_load(*s, builtin_forcing("zero"), 1.0)) == 0.0);
  const auto b = assemble_load(*s, [](const Point&, double) { return Vec3{1, 0, 0}; }, 0.0);
  double pair = 0;
  for (std::size_t i = 0; i < s->num_scalar_dofs(); ++i) pair += b[i];
  CHECK(std::abs(pair - 1.0) < 1e-13);

  const auto c = space_of(generate_unit_cube(2));
  const auto f = builtin_forcing("box_rotational");
  CHECK(assemble_load(*c, f, 2.0) == assemble_load(*c, f, 1.0));
  CHECK_THROWS_AS(assemble_load(*s, [](const Point&, double) { return Vec3{INFINITY, 0, 0}; }, 0.0), Error);
}

TEST_CASE("dirichlet elimination") {
  auto id = CsrMatrix::identity(5);
  Vec rhs{1, 2, 3, 4, 5};
  const std::vector<std::int32_t> dofs{1, 3};
  apply_dirichlet(id, rhs, dofs);
  CHECK(oracle::max_abs_diff(oracle::from_csr(id), oracle::from_csr(CsrMatrix::identity(5))) == 0.0);
  CHECK(rhs == Vec{1, 0, 3, 0, 5});
  CHECK_THROWS_AS(apply_dirichlet(id, rhs, std::vector<std::int32_t>{7}), Error);

  // M x = M c with c vanishing on the boundary
  const auto s = space_of(oracle::star_tet());
  auto m = assemble_mass(*s);
  const auto c = [&] {
    auto v = interpolate(*s, [](const Point& x, double) { return Vec3{x[0] + 2 * x[1], x[2] - x[0], x[1] * x[2]}; }, 0.0);
    zero_dofs(v, s->dirichlet_velocity_dofs());
    return v;
  }();
  auto b = spmv(m, c);
  apply_dirichlet(m, b, s->dirichlet_velocity_dofs());
  CHECK(m.is_symmetric(1e-14));
  const auto x = factorize(m).solve(b);
  CHECK(oracle::max_abs_diff(x, c) < 1e-12);

  auto dense = oracle::mass(*s);
  Vec bd = oracle::matvec(dense, c);
  oracle::constrain(dense, bd, s->dirichlet_velocity_dofs());
  CHECK(oracle::max_abs_diff(oracle::from_csr(m), dense) < 1e-13);
}

TEST_CASE("grad-div quadratic forms satisfy the coercivity lemma") {
  const auto s = space_of(generate_unit_cube(2));
  const auto ops = assemble_operators(*s);
  std::mt19937_64 rng(15);
  for (double gamma : {0.1, 1.0, 10.0})
    for (double ratio : {0.0, 0.5, 2.0, 3.0}) {
      const double alpha = ratio * gamma;
      for (int trial = 0; trial < 30; ++trial) {
        const auto v = random_vec(rng, ops.n_velocity);
        const double g = quadratic_form(ops.graddiv_full, v), gd = quadratic_form(ops.graddiv_diag, v);
        const double scale = (gamma + alpha) * gd + gamma * g;
        const double b = (gamma + alpha) * gd - gamma * g;
        CHECK(std::abs(squared_seminorm_B(ops, v, gamma, alpha) - b) <= 1e-12 * scale);
        CHECK(b >= (alpha - 2 * gamma) / 3 * g - 1e-10 * scale);
        CHECK(squared_seminorm_Bstar(ops, v, gamma, alpha) >= 0.0);
        CHECK(raw_Bstar(ops, v, gamma, alpha) >= -1e-10 * scale);
      }
    }
}
