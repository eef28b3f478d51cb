#pragma once

#include <array>
#include <span>

#include "sgd/fem_space.hpp"
#include "sgd/sparse.hpp"

namespace sgd {

/// Assembled operators on a Taylor-Hood space.
///
/// Velocity-sized matrices use the component-major numbering of the space.
/// Viscosity, time step and the grad-div parameters are applied where the
/// operators are combined, never here.
struct OperatorSet {
  int dim = 0;
  std::size_t n_scalar = 0;
  std::size_t n_velocity = 0;
  std::size_t n_pressure = 0;

  CsrMatrix scalar_mass;                     // (phi_i, phi_j)
  std::array<CsrMatrix, 3> axis_stiffness;   // (d_a phi_i, d_a phi_j), a < dim
  CsrMatrix scalar_stiffness;                // (grad phi_i, grad phi_j)

  CsrMatrix mass;          // M
  CsrMatrix stiffness;     // K
  CsrMatrix div_coupling;  // D, pressure x velocity: (div u, q)
  CsrMatrix graddiv_full;  // G: (div u, div v)
  CsrMatrix graddiv_diag;  // G*: sum_a (u_a,a , v_a,a)
  Vec pressure_mean;       // (1, q_i)
};

CsrMatrix assemble_scalar_mass(const TaylorHoodSpace& space);
/// (d_a phi_i, d_b phi_j) on scalar P2.
CsrMatrix assemble_scalar_derivative_pair(const TaylorHoodSpace& space, int a, int b);

CsrMatrix assemble_mass(const TaylorHoodSpace& space);
CsrMatrix assemble_stiffness(const TaylorHoodSpace& space);
CsrMatrix assemble_div_coupling(const TaylorHoodSpace& space);
CsrMatrix assemble_graddiv_full(const TaylorHoodSpace& space);
CsrMatrix assemble_graddiv_diag(const TaylorHoodSpace& space);
Vec assemble_pressure_mean(const TaylorHoodSpace& space);

/// Scalar block of the skew-symmetrized convection form
/// 1/2 (w.grad u, v) - 1/2 (w.grad v, u); exactly antisymmetric.
CsrMatrix assemble_convection_scalar(const TaylorHoodSpace& space, std::span<const double> w);
/// Velocity-sized convection operator C(w) (block diagonal, identical blocks).
CsrMatrix assemble_convection(const TaylorHoodSpace& space, std::span<const double> w);

/// (f(., t), v) for every velocity basis function. Throws on non-finite f.
Vec assemble_load(const TaylorHoodSpace& space, const VectorField& f, double t);

OperatorSet assemble_operators(const TaylorHoodSpace& space);

/// Symmetric elimination of homogeneous Dirichlet DOFs: rows and columns of
/// the constrained DOFs are zeroed (sparsity kept), the diagonal set to one,
/// and the matching right-hand side entries zeroed. `rhs` may be empty.
void apply_dirichlet(CsrMatrix& matrix, std::span<double> rhs, std::span<const std::int32_t> dofs);

/// Zeroes the listed entries of a vector.
void zero_dofs(std::span<double> v, std::span<const std::int32_t> dofs);

}  // namespace sgd
