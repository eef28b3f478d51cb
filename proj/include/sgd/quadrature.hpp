#pragma once

#include <array>
#include <vector>

namespace sgd {

/// Quadrature rule on the reference simplex with vertices 0, e1, ..., e_dim.
struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;  // sum to 1/dim!
};

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_unit(int npoints, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed-coordinate (Duffy) Gauss rule exact for polynomials of total
/// degree <= `degree`. All weights are positive.
QuadratureRule simplex_rule(int dim, int degree);

}  // namespace sgd
