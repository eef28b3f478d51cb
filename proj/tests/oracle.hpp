// Dense brute-force reference implementations used only by the tests.
//
// Nothing here calls the library's numerics: integrals are exact sums over
// barycentric monomials, solves are dense partial-pivot LU, eigenvalues come
// from cyclic Jacobi rotations. The library is used for mesh topology and the
// global DOF numbering only, and local nodes are identified by position.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sgd/assembly.hpp"
#include "sgd/fem_space.hpp"
#include "sgd/mesh.hpp"
#include "sgd/sparse.hpp"

namespace oracle {

struct Dense {
  std::size_t n = 0, m = 0;
  std::vector<double> a;
  Dense() = default;
  Dense(std::size_t rows, std::size_t cols) : n(rows), m(cols), a(rows * cols, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * m + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * m + j]; }
};

inline Dense from_csr(const sgd::CsrMatrix& s) {
  Dense d(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t k = s.row_ptr()[i]; k < s.row_ptr()[i + 1]; ++k) d(i, static_cast<std::size_t>(s.col_idx()[k])) += s.values()[k];
  return d;
}

inline double max_abs(const Dense& d) {
  double m = 0;
  for (double v : d.a) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const Dense& x, const Dense& y) {
  if (x.n != y.n || x.m != y.m) throw std::runtime_error("shape mismatch");
  double m = 0;
  for (std::size_t i = 0; i < x.a.size(); ++i) m = std::max(m, std::abs(x.a[i] - y.a[i]));
  return m;
}

inline double max_abs_diff(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::runtime_error("length mismatch");
  double m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

inline double max_abs(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline std::vector<double> matvec(const Dense& d, const std::vector<double>& x) {
  std::vector<double> y(d.n, 0.0);
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = 0; j < d.m; ++j) y[i] += d(i, j) * x[j];
  return y;
}

inline Dense add(const Dense& x, double s, const Dense& y) {
  Dense r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += s * y.a[i];
  return r;
}

inline Dense scaled(const Dense& x, double s) {
  Dense r = x;
  for (double& v : r.a) v *= s;
  return r;
}

// Gaussian elimination with partial pivoting.
inline std::vector<double> lu_solve(Dense a, std::vector<double> b) {
  const std::size_t n = a.n;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (a(p, k) == 0.0) throw std::runtime_error("dense LU: singular");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

// Cyclic Jacobi; returns eigenvalues in ascending order.
inline std::vector<double> sym_eigenvalues(Dense a) {
  const std::size_t n = a.n;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30 * std::max(1.0, max_abs(a) * max_abs(a))) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Polynomials in barycentric coordinates lambda_0..lambda_3.
using Exps = std::array<int, 4>;
struct Poly {
  std::map<Exps, double> t;
};

inline Poly constant(double c) { return Poly{{{Exps{0, 0, 0, 0}, c}}}; }
inline Poly lambda(int k, double c = 1.0) {
  Exps e{0, 0, 0, 0};
  e[static_cast<std::size_t>(k)] = 1;
  return Poly{{{e, c}}};
}
inline Poly operator+(Poly a, const Poly& b) {
  for (const auto& [e, c] : b.t) a.t[e] += c;
  return a;
}
inline Poly operator*(double s, Poly a) {
  for (auto& kv : a.t) kv.second *= s;
  return a;
}
inline Poly operator*(const Poly& a, const Poly& b) {
  Poly r;
  for (const auto& [ea, ca] : a.t)
    for (const auto& [eb, cb] : b.t) {
      Exps e;
      for (int i = 0; i < 4; ++i) e[static_cast<std::size_t>(i)] = ea[static_cast<std::size_t>(i)] + eb[static_cast<std::size_t>(i)];
      r.t[e] += ca * cb;
    }
  return r;
}
inline Poly d_dlambda(const Poly& p, int k) {
  Poly r;
  for (const auto& [e, c] : p.t) {
    const int a = e[static_cast<std::size_t>(k)];
    if (a == 0) continue;
    Exps f = e;
    f[static_cast<std::size_t>(k)] = a - 1;
    r.t[f] += c * a;
  }
  return r;
}

inline double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Exact integral over a simplex of volume vol: |T| d! prod(a_i!) / (d + sum a)!.
inline double integrate(const Poly& p, int dim, double vol) {
  double s = 0;
  for (const auto& [e, c] : p.t) {
    int tot = 0;
    double num = 1;
    for (int a : e) {
      tot += a;
      num *= factorial(a);
    }
    s += c * vol * factorial(dim) * num / factorial(dim + tot);
  }
  return s;
}

// Geometry of one cell: volume and constant gradients of the barycentric coordinates.
struct CellGeom {
  int dim = 0;
  double vol = 0;
  std::array<std::array<double, 3>, 4> grad_lambda{};
  std::array<sgd::Point, 4> v{};
};

inline CellGeom geometry(const sgd::SimplicialMesh& mesh, std::size_t c) {
  CellGeom g;
  g.dim = mesh.dim();
  const auto cell = mesh.cell(c);
  for (int i = 0; i <= g.dim; ++i) g.v[static_cast<std::size_t>(i)] = mesh.vertex(static_cast<std::size_t>(cell[static_cast<std::size_t>(i)]));
  // T columns are v_i - v_0; grad lambda_i (i>=1) is row i-1 of T^{-1}.
  double t[3][3] = {{0}};
  for (int i = 0; i < g.dim; ++i)
    for (int r = 0; r < g.dim; ++r) t[r][i] = g.v[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(r)] - g.v[0][static_cast<std::size_t>(r)];
  double inv[3][3] = {{0}};
  double det = 0;
  if (g.dim == 2) {
    det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    inv[0][0] = t[1][1] / det;
    inv[0][1] = -t[0][1] / det;
    inv[1][0] = -t[1][0] / det;
    inv[1][1] = t[0][0] / det;
    g.vol = std::abs(det) / 2;
  } else {
    det = t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1]) - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0]) +
          t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0]);
    for (int r = 0; r < 3; ++r)
      for (int cc = 0; cc < 3; ++cc) {
        const int r1 = (cc + 1) % 3, r2 = (cc + 2) % 3, c1 = (r + 1) % 3, c2 = (r + 2) % 3;
        inv[r][cc] = (t[r1][c1] * t[r2][c2] - t[r1][c2] * t[r2][c1]) / det;
      }
    g.vol = std::abs(det) / 6;
  }
  for (int i = 1; i <= g.dim; ++i)
    for (int d = 0; d < g.dim; ++d) g.grad_lambda[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] = inv[i - 1][d];
  for (int d = 0; d < g.dim; ++d) {
    double s = 0;
    for (int i = 1; i <= g.dim; ++i) s += g.grad_lambda[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
    g.grad_lambda[0][static_cast<std::size_t>(d)] = -s;
  }
  return g;
}

// P2 basis of the scalar node at physical position x in the cell, found from
// its barycentric coordinates: a vertex (one coordinate 1) or an edge midpoint
// (two coordinates 1/2).
inline Poly p2_basis_at(const CellGeom& g, const sgd::Point& x) {
  std::array<double, 4> b{};
  double s = 0;
  for (int i = 1; i <= g.dim; ++i) {
    double v = 0;
    for (int d = 0; d < g.dim; ++d)
      v += g.grad_lambda[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] * (x[static_cast<std::size_t>(d)] - g.v[0][static_cast<std::size_t>(d)]);
    b[static_cast<std::size_t>(i)] = v;
    s += v;
  }
  b[0] = 1 - s;
  std::vector<int> one, half;
  for (int i = 0; i <= g.dim; ++i) {
    const double v = b[static_cast<std::size_t>(i)];
    if (std::abs(v - 1) < 1e-9) one.push_back(i);
    else if (std::abs(v - 0.5) < 1e-9) half.push_back(i);
    else if (std::abs(v) > 1e-9) throw std::runtime_error("node is neither vertex nor edge midpoint");
  }
  if (one.size() == 1 && half.empty()) return 2.0 * (lambda(one[0]) * lambda(one[0])) + (-1.0) * lambda(one[0]);
  if (half.size() == 2 && one.empty()) return 4.0 * (lambda(half[0]) * lambda(half[1]));
  throw std::runtime_error("ambiguous node");
}

inline Poly d_dx(const CellGeom& g, const Poly& p, int axis) {
  Poly r;
  for (int k = 0; k <= g.dim; ++k)
    r = r + g.grad_lambda[static_cast<std::size_t>(k)][static_cast<std::size_t>(axis)] * d_dlambda(p, k);
  return r;
}

// Per-cell local basis with global scalar indices.
struct LocalBasis {
  CellGeom g;
  std::vector<std::int32_t> dofs;
  std::vector<Poly> phi;
  std::vector<std::array<Poly, 3>> dphi;
};

inline LocalBasis local_basis(const sgd::TaylorHoodSpace& space, std::size_t c) {
  LocalBasis lb;
  lb.g = geometry(space.mesh(), c);
  for (auto d : space.cell_scalar_dofs(c)) {
    lb.dofs.push_back(d);
    const Poly p = p2_basis_at(lb.g, space.node_coords()[static_cast<std::size_t>(d)]);
    lb.phi.push_back(p);
    std::array<Poly, 3> grads;
    for (int a = 0; a < space.dim(); ++a) grads[static_cast<std::size_t>(a)] = d_dx(lb.g, p, a);
    lb.dphi.push_back(grads);
  }
  return lb;
}

inline Dense scalar_mass(const sgd::TaylorHoodSpace& s) {
  Dense m(s.num_scalar_dofs(), s.num_scalar_dofs());
  for (std::size_t c = 0; c < s.mesh().num_cells(); ++c) {
    const auto lb = local_basis(s, c);
    for (std::size_t i = 0; i < lb.dofs.size(); ++i)
      for (std::size_t j = 0; j < lb.dofs.size(); ++j)
        m(static_cast<std::size_t>(lb.dofs[i]), static_cast<std::size_t>(lb.dofs[j])) += integrate(lb.phi[i] * lb.phi[j], s.dim(), lb.g.vol);
  }
  return m;
}

// (d_a phi_i, d_b phi_j)
inline Dense derivative_pair(const sgd::TaylorHoodSpace& s, int a, int b) {
  Dense m(s.num_scalar_dofs(), s.num_scalar_dofs());
  for (std::size_t c = 0; c < s.mesh().num_cells(); ++c) {
    const auto lb = local_basis(s, c);
    for (std::size_t i = 0; i < lb.dofs.size(); ++i)
      for (std::size_t j = 0; j < lb.dofs.size(); ++j)
        m(static_cast<std::size_t>(lb.dofs[i]), static_cast<std::size_t>(lb.dofs[j])) +=
            integrate(lb.dphi[i][static_cast<std::size_t>(a)] * lb.dphi[j][static_cast<std::size_t>(b)], s.dim(), lb.g.vol);
  }
  return m;
}

// Block matrix over component-major velocity DOFs; block(r, c) given by f(r, c).
template <class F>
Dense velocity_blocks(const sgd::TaylorHoodSpace& s, F&& f) {
  const std::size_t ns = s.num_scalar_dofs();
  const auto dim = static_cast<std::size_t>(s.dim());
  Dense m(ns * dim, ns * dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) {
      const Dense blk = f(static_cast<int>(r), static_cast<int>(c));
      if (blk.n == 0) continue;
      for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < ns; ++j) m(r * ns + i, c * ns + j) = blk(i, j);
    }
  return m;
}

inline Dense mass(const sgd::TaylorHoodSpace& s) {
  const Dense m1 = scalar_mass(s);
  return velocity_blocks(s, [&](int r, int c) { return r == c ? m1 : Dense(); });
}

inline Dense stiffness(const sgd::TaylorHoodSpace& s) {
  Dense k1(s.num_scalar_dofs(), s.num_scalar_dofs());
  for (int a = 0; a < s.dim(); ++a) k1 = add(k1, 1.0, derivative_pair(s, a, a));
  return velocity_blocks(s, [&](int r, int c) { return r == c ? k1 : Dense(); });
}

inline Dense graddiv_full(const sgd::TaylorHoodSpace& s) {
  return velocity_blocks(s, [&](int r, int c) { return derivative_pair(s, r, c); });
}

inline Dense graddiv_diag(const sgd::TaylorHoodSpace& s) {
  return velocity_blocks(s, [&](int r, int c) { return r == c ? derivative_pair(s, r, r) : Dense(); });
}

// (div u, q): pressure rows, velocity columns. P1 basis at local vertex j is lambda_j.
inline Dense div_coupling(const sgd::TaylorHoodSpace& s) {
  const std::size_t ns = s.num_scalar_dofs();
  Dense d(s.num_pressure_dofs(), s.num_velocity_dofs());
  for (std::size_t c = 0; c < s.mesh().num_cells(); ++c) {
    const auto lb = local_basis(s, c);
    const auto pd = s.mesh().cell(c);
    for (int j = 0; j <= s.dim(); ++j)
      for (std::size_t i = 0; i < lb.dofs.size(); ++i)
        for (int a = 0; a < s.dim(); ++a)
          d(static_cast<std::size_t>(pd[static_cast<std::size_t>(j)]), static_cast<std::size_t>(a) * ns + static_cast<std::size_t>(lb.dofs[i])) +=
              integrate(lambda(j) * lb.dphi[i][static_cast<std::size_t>(a)], s.dim(), lb.g.vol);
  }
  return d;
}

inline std::vector<double> pressure_mean(const sgd::TaylorHoodSpace& s) {
  std::vector<double> m(s.num_pressure_dofs(), 0.0);
  for (std::size_t c = 0; c < s.mesh().num_cells(); ++c) {
    const auto g = geometry(s.mesh(), c);
    const auto pd = s.mesh().cell(c);
    for (int j = 0; j <= s.dim(); ++j) m[static_cast<std::size_t>(pd[static_cast<std::size_t>(j)])] += integrate(lambda(j), s.dim(), g.vol);
  }
  return m;
}

// Skew convection scalar block: 1/2 (w.grad phi_j, phi_i) - 1/2 (w.grad phi_i, phi_j).
inline Dense convection_scalar(const sgd::TaylorHoodSpace& s, const std::vector<double>& w) {
  const std::size_t ns = s.num_scalar_dofs();
  Dense a(ns, ns);
  for (std::size_t c = 0; c < s.mesh().num_cells(); ++c) {
    const auto lb = local_basis(s, c);
    std::array<Poly, 3> wp;
    for (int d = 0; d < s.dim(); ++d)
      for (std::size_t k = 0; k < lb.dofs.size(); ++k)
        wp[static_cast<std::size_t>(d)] = wp[static_cast<std::size_t>(d)] + w[static_cast<std::size_t>(d) * ns + static_cast<std::size_t>(lb.dofs[k])] * lb.phi[k];
    for (std::size_t i = 0; i < lb.dofs.size(); ++i)
      for (std::size_t j = 0; j < lb.dofs.size(); ++j) {
        Poly adv;
        for (int d = 0; d < s.dim(); ++d) adv = adv + wp[static_cast<std::size_t>(d)] * lb.dphi[j][static_cast<std::size_t>(d)];
        const double v = integrate(adv * lb.phi[i], s.dim(), lb.g.vol);
        a(static_cast<std::size_t>(lb.dofs[i]), static_cast<std::size_t>(lb.dofs[j])) += 0.5 * v;
        a(static_cast<std::size_t>(lb.dofs[j]), static_cast<std::size_t>(lb.dofs[i])) -= 0.5 * v;
      }
  }
  return a;
}

inline Dense convection(const sgd::TaylorHoodSpace& s, const std::vector<double>& w) {
  const Dense c1 = convection_scalar(s, w);
  return velocity_blocks(s, [&](int r, int c) { return r == c ? c1 : Dense(); });
}

// Load of an affine field f_a(x) = b[a] + sum_d A[a][d] x_d; exact because an
// affine function equals its vertex interpolant sum_k f(v_k) lambda_k.
struct Affine {
  std::array<double, 3> b{};
  std::array<std::array<double, 3>, 3> A{};
  sgd::Vec3 operator()(const sgd::Point& x) const {
    sgd::Vec3 r{};
    for (int a = 0; a < 3; ++a) {
      r[static_cast<std::size_t>(a)] = b[static_cast<std::size_t>(a)];
      for (int d = 0; d < 3; ++d) r[static_cast<std::size_t>(a)] += A[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
    }
    return r;
  }
};

inline std::vector<double> load(const sgd::TaylorHoodSpace& s, const Affine& f) {
  const std::size_t ns = s.num_scalar_dofs();
  std::vector<double> out(s.num_velocity_dofs(), 0.0);
  for (std::size_t c = 0; c < s.mesh().num_cells(); ++c) {
    const auto lb = local_basis(s, c);
    for (int a = 0; a < s.dim(); ++a) {
      Poly fa;
      for (int k = 0; k <= s.dim(); ++k) fa = fa + f(lb.g.v[static_cast<std::size_t>(k)])[static_cast<std::size_t>(a)] * lambda(k);
      for (std::size_t i = 0; i < lb.dofs.size(); ++i)
        out[static_cast<std::size_t>(a) * ns + static_cast<std::size_t>(lb.dofs[i])] += integrate(fa * lb.phi[i], s.dim(), lb.g.vol);
    }
  }
  return out;
}

// Homogeneous Dirichlet: identity rows and columns, zero right side.
inline void constrain(Dense& a, std::vector<double>& b, const std::vector<std::int32_t>& dofs) {
  for (auto d : dofs) {
    const auto i = static_cast<std::size_t>(d);
    for (std::size_t j = 0; j < a.m; ++j) a(i, j) = 0;
    for (std::size_t j = 0; j < a.n; ++j) a(j, i) = 0;
    a(i, i) = 1;
    if (!b.empty()) b[i] = 0;
  }
}

// One modular step from u_prev with load b, dense throughout.
struct StepResult {
  std::vector<double> u_tilde, u_next;
};

inline StepResult modular_step(const sgd::TaylorHoodSpace& s, double nu, double k, double gamma, double alpha,
                               const std::vector<double>& u_prev, const std::vector<double>& b) {
  const std::size_t nv = s.num_velocity_dofs(), np = s.num_pressure_dofs(), n = nv + np + 1;
  const Dense M = mass(s), K = stiffness(s), C = convection(s, u_prev), D = div_coupling(s);
  const Dense G = graddiv_full(s), Gd = graddiv_diag(s);
  const auto m = pressure_mean(s);
  const Dense A = add(add(scaled(M, 1 / k), 1.0, C), nu, K);

  Dense big(n, n);
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t j = 0; j < nv; ++j) big(i, j) = A(i, j);
  for (std::size_t q = 0; q < np; ++q) {
    for (std::size_t j = 0; j < nv; ++j) {
      big(j, nv + q) = D(q, j);
      big(nv + q, j) = D(q, j);
    }
    big(nv + q, n - 1) = m[q];
    big(n - 1, nv + q) = m[q];
  }
  std::vector<double> rhs(n, 0.0);
  const auto Mu = matvec(M, u_prev);
  for (std::size_t i = 0; i < nv; ++i) rhs[i] = Mu[i] / k + b[i];
  constrain(big, rhs, s.dirichlet_velocity_dofs());
  const auto x = lu_solve(big, rhs);

  StepResult r;
  r.u_tilde.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nv));
  Dense S = add(M, k * (gamma + alpha), Gd);
  auto r2 = matvec(M, r.u_tilde);
  const auto gdu = matvec(Gd, u_prev), gu = matvec(G, u_prev);
  for (std::size_t i = 0; i < nv; ++i) r2[i] += k * (gamma + alpha) * gdu[i] - k * gamma * gu[i];
  constrain(S, r2, s.dirichlet_velocity_dofs());
  r.u_next = lu_solve(S, r2);
  return r;
}

// Energy ledgers written out term by term from dense quadratic forms.

inline std::vector<double> lin(const std::vector<double>& a, double s, const std::vector<double>& b) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
  return r;
}

struct Ledger {
  double e_prev, e_next, d, pairing, k;
  double residual() const { return e_next - e_prev + 2 * k * d - 2 * k * pairing; }
};

inline double qf(const Dense& m, const std::vector<double>& v) {
  const auto mv = matvec(m, v);
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * mv[i];
  return s;
}

struct DenseOps {
  Dense M, K, G, Gd;
  explicit DenseOps(const sgd::OperatorSet& o)
      : M(from_csr(o.mass)), K(from_csr(o.stiffness)), G(from_csr(o.graddiv_full)),
        Gd(from_csr(o.graddiv_diag)) {}
  double B(const std::vector<double>& v, double g, double a) const { return (g + a) * qf(Gd, v) - g * qf(G, v); }
  double Bstar(const std::vector<double>& v, double g, double a) const { return B(v, g, a) - (a - 2 * g) / 3 * qf(G, v); }
};

inline Ledger bstar_ledger(const DenseOps& o, double nu, double k, double g, double a, const std::vector<double>& un, const std::vector<double>& ut,
                    const std::vector<double>& u1, const std::vector<double>& load) {
  auto energy = [&](const std::vector<double>& u) { return qf(o.M, u) + 2 * k * (0.5 * o.Bstar(u, g, a) + (2 * g - a) / 6 * qf(o.G, u)); };
  const double d = nu * qf(o.K, ut) + (qf(o.M, lin(ut, -1, un)) + qf(o.M, lin(u1, -1, ut))) / (2 * k) +
                   0.5 * o.Bstar(lin(u1, -1, un), g, a) + 2.0 / 3.0 * (a - 0.5 * g) * qf(o.G, u1) +
                   (2 * g - a) / 6 * qf(o.G, lin(u1, 1, un));
  return {energy(un), energy(u1), d, sgd::dot(load, ut), k};
}

inline Ledger b_ledger(const DenseOps& o, double nu, double k, double g, double a, const std::vector<double>& un, const std::vector<double>& ut, const std::vector<double>& u1,
                const std::vector<double>& load) {
  auto energy = [&](const std::vector<double>& u) { return qf(o.M, u) + k * o.B(u, g, a); };
  const double d = nu * qf(o.K, ut) + (qf(o.M, lin(ut, -1, un)) + qf(o.M, lin(u1, -1, ut))) / (2 * k) +
                   g * qf(o.G, u1) + 0.5 * o.B(lin(u1, -1, un), g, a);
  return {energy(un), energy(u1), d, sgd::dot(load, ut), k};
}

// 2d, alpha = 0: E = |u|^2 + k gamma u^T Gd u and only the common dissipation.
inline Ledger planar_ledger(const DenseOps& o, double nu, double k, double g, const std::vector<double>& un,
                            const std::vector<double>& ut, const std::vector<double>& u1, const std::vector<double>& load) {
  auto energy = [&](const std::vector<double>& u) { return qf(o.M, u) + k * g * qf(o.Gd, u); };
  const double d = nu * qf(o.K, ut) + (qf(o.M, lin(ut, -1, un)) + qf(o.M, lin(u1, -1, ut))) / (2 * k);
  return {energy(un), energy(u1), d, sgd::dot(load, ut), k};
}

// Tiny meshes with irregular geometry and at most four cells.

// Square (0,0)-(1,1) split into four triangles around an off-centre point.
inline sgd::SimplicialMesh star_square() {
  std::vector<sgd::Point> v{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0.43, 0.58, 0}};
  std::vector<std::int32_t> cells{0, 1, 4, 1, 2, 4, 2, 3, 4, 3, 0, 4};
  std::vector<sgd::BoundaryFacet> f{{{0, 1}, "wall"}, {{1, 2}, "wall"}, {{2, 3}, "wall"}, {{3, 0}, "wall"}};
  return sgd::SimplicialMesh(2, v, cells, f);
}

// Tetrahedron split into four around an interior point.
inline sgd::SimplicialMesh star_tet() {
  std::vector<sgd::Point> v{{0, 0, 0}, {1.1, 0.1, 0}, {0.2, 0.9, 0.05}, {0.1, 0.2, 1.2}, {0.3, 0.27, 0.31}};
  const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  std::vector<std::int32_t> cells;
  std::vector<sgd::BoundaryFacet> f;
  for (const auto& fc : faces) {
    std::vector<sgd::Point> corners{v[static_cast<std::size_t>(fc[0])], v[static_cast<std::size_t>(fc[1])], v[static_cast<std::size_t>(fc[2])], v[4]};
    if (sgd::signed_simplex_volume(3, corners) > 0) cells.insert(cells.end(), {fc[0], fc[1], fc[2], 4});
    else cells.insert(cells.end(), {fc[1], fc[0], fc[2], 4});
    f.push_back({{fc[0], fc[1], fc[2]}, "wall"});
  }
  return sgd::SimplicialMesh(3, v, cells, f);
}

// Two skewed triangles.
inline sgd::SimplicialMesh skew_pair() {
  std::vector<sgd::Point> v{{0, 0, 0}, {1.3, 0.2, 0}, {1.1, 1.4, 0}, {-0.2, 0.9, 0}};
  std::vector<std::int32_t> cells{0, 1, 2, 0, 2, 3};
  std::vector<sgd::BoundaryFacet> f{{{0, 1}, "wall"}, {{1, 2}, "wall"}, {{2, 3}, "wall"}, {{3, 0}, "wall"}};
  return sgd::SimplicialMesh(2, v, cells, f);
}

}  // namespace oracle
