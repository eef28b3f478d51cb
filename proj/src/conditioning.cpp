#include "sgd/conditioning.hpp"

#include "sgd/assembly.hpp"
#include "sgd/error.hpp"

namespace sgd {

double bound_shape(double h, double k_gamma_alpha) {
  if (!(h > 0.0) || !(k_gamma_alpha >= 0.0))
    throw Error(ErrorCode::kInvalidArgument, "bound_shape needs h > 0 and k(gamma+alpha) >= 0");
  const double h2 = h * h;
  return (h2 + k_gamma_alpha) / ((1.0 + k_gamma_alpha) * h2);
}

CsrMatrix step2_free_block(const TaylorHoodSpace& space, double k, double gamma_plus_alpha) {
  if (!(k > 0.0) || !(gamma_plus_alpha >= 0.0))
    throw Error(ErrorCode::kInvalidArgument, "step-2 block needs k > 0 and gamma + alpha >= 0");
  const CsrMatrix full = add_scaled(1.0, assemble_scalar_mass(space), k * gamma_plus_alpha,
                                    assemble_scalar_derivative_pair(space, 0, 0));
  std::vector<std::int32_t> free;
  for (std::size_t i = 0; i < space.num_scalar_dofs(); ++i)
    if (!space.boundary_nodes()[i]) free.push_back(static_cast<std::int32_t>(i));
  if (free.empty()) throw Error(ErrorCode::kInvalidArgument, "mesh has no interior velocity DOFs");
  return full.submatrix(free);
}

ConditioningReport estimate_cond2(const TaylorHoodSpace& space, double k, double gamma_plus_alpha,
                                  const EigenOptions& options) {
  const CsrMatrix a = step2_free_block(space, k, gamma_plus_alpha);
  const Factorization f = factorize(a);
  const EigenEstimate est = extreme_eigenvalue_estimates(a, &f, options);
  ConditioningReport r;
  r.h = space.mesh().h();
  r.k = k;
  r.gamma_plus_alpha = gamma_plus_alpha;
  r.lambda_max = est.lambda_max;
  r.lambda_min = est.lambda_min;
  r.cond2 = est.lambda_max / est.lambda_min;
  r.bound_shape = bound_shape(r.h, k * gamma_plus_alpha);
  r.converged = est.converged;
  r.size = a.rows();
  return r;
}

}  // namespace sgd
