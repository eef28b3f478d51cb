#include "sgd/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "sgd/error.hpp"

namespace sgd {

void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (x + 1.0);
    weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
  }
}

QuadratureRule simplex_rule(int dim, int degree) {
  if (dim != 2 && dim != 3) throw Error(ErrorCode::kInvalidArgument, "simplex rule needs dim 2 or 3");
  if (degree < 0) throw Error(ErrorCode::kInvalidArgument, "negative quadrature degree");
  QuadratureRule rule;
  rule.dim = dim;
  rule.degree = degree;
  // The Duffy Jacobian raises the degree in the j-th collapsed direction by dim-1-j.
  auto npts = [&](int j) { return (degree + dim - 1 - j) / 2 + 1; };
  std::vector<double> x0, w0, x1, w1, x2, w2;
  gauss_legendre_unit(npts(0), x0, w0);
  gauss_legendre_unit(npts(1), x1, w1);
  if (dim == 2) {
    for (std::size_t a = 0; a < x0.size(); ++a)
      for (std::size_t b = 0; b < x1.size(); ++b) {
        const double u = x0[a], v = x1[b];
        rule.points.push_back({u, v * (1.0 - u), 0.0});
        rule.weights.push_back(w0[a] * w1[b] * (1.0 - u));
      }
    return rule;
  }
  gauss_legendre_unit(npts(2), x2, w2);
  for (std::size_t a = 0; a < x0.size(); ++a)
    for (std::size_t b = 0; b < x1.size(); ++b)
      for (std::size_t c = 0; c < x2.size(); ++c) {
        const double u = x0[a], v = x1[b], w = x2[c];
        rule.points.push_back({u, v * (1.0 - u), w * (1.0 - u) * (1.0 - v)});
        rule.weights.push_back(w0[a] * w1[b] * w2[c] * (1.0 - u) * (1.0 - u) * (1.0 - v));
      }
  return rule;
}

}  // namespace sgd
