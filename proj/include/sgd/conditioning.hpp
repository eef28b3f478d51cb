#pragma once

#include "sgd/fem_space.hpp"
#include "sgd/sparse.hpp"

namespace sgd {

struct ConditioningReport {
  double h = 0.0;
  double k = 0.0;
  double gamma_plus_alpha = 0.0;
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double cond2 = 0.0;
  double bound_shape = 0.0;
  bool converged = false;
  std::size_t size = 0;  // free DOFs in the block
};

/// (h^2 + s) / ((1 + s) h^2) with s = k (gamma + alpha).
double bound_shape(double h, double k_gamma_alpha);

/// Step-2 x-component block M1 + k(gamma+alpha) Kx restricted to the DOFs
/// off the Dirichlet boundary.
CsrMatrix step2_free_block(const TaylorHoodSpace& space, double k, double gamma_plus_alpha);

/// Extreme eigenvalues of the free x-block by power and inverse iteration.
ConditioningReport estimate_cond2(const TaylorHoodSpace& space, double k, double gamma_plus_alpha,
                                  const EigenOptions& options = {});

}  // namespace sgd
