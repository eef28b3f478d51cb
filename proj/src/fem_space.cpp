#include "sgd/fem_space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "sgd/error.hpp"

namespace sgd {

namespace {

constexpr std::array<std::array<int, 2>, 3> kTriEdges{{{0, 1}, {0, 2}, {1, 2}}};
constexpr std::array<std::array<int, 2>, 6> kTetEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

}  // namespace

std::span<const std::array<int, 2>> local_edges(int dim) {
  if (dim == 2) return {kTriEdges.data(), kTriEdges.size()};
  return {kTetEdges.data(), kTetEdges.size()};
}

void p2_basis(int dim, std::span<const double> l, std::span<double> values) {
  const int nv = dim + 1;
  for (int i = 0; i < nv; ++i) values[static_cast<std::size_t>(i)] = l[i] * (2.0 * l[i] - 1.0);
  int e = nv;
  for (const auto& [a, b] : local_edges(dim)) values[static_cast<std::size_t>(e++)] = 4.0 * l[a] * l[b];
}

void p2_basis_bary_grads(int dim, std::span<const double> l, std::span<double> grads) {
  const int nv = dim + 1;
  const int nb = dim == 2 ? 6 : 10;
  std::fill(grads.begin(), grads.begin() + nb * nv, 0.0);
  for (int i = 0; i < nv; ++i) grads[static_cast<std::size_t>(i * nv + i)] = 4.0 * l[i] - 1.0;
  int e = nv;
  for (const auto& [a, b] : local_edges(dim)) {
    grads[static_cast<std::size_t>(e * nv + a)] = 4.0 * l[b];
    grads[static_cast<std::size_t>(e * nv + b)] = 4.0 * l[a];
    ++e;
  }
}

TaylorHoodSpace::TaylorHoodSpace(std::shared_ptr<const SimplicialMesh> mesh, int quadrature_degree)
    : mesh_(std::move(mesh)), rule_(simplex_rule(mesh_->dim(), quadrature_degree)) {
  const int dim = mesh_->dim();
  const int nv = dim + 1;
  const auto ledges = local_edges(dim);

  std::map<std::array<std::int32_t, 2>, std::int32_t> edge_index;
  for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
    auto v = mesh_->cell(c);
    for (const auto& [a, b] : ledges) edge_index.emplace(std::array{std::min(v[a], v[b]), std::max(v[a], v[b])}, 0);
  }
  const auto nvert = static_cast<std::int32_t>(mesh_->num_vertices());
  edges_.reserve(edge_index.size());
  for (auto& [key, idx] : edge_index) {
    idx = nvert + static_cast<std::int32_t>(edges_.size());
    edges_.push_back(key);
  }

  node_coords_ = mesh_->vertices();
  for (const auto& [a, b] : edges_) {
    const auto& pa = mesh_->vertex(static_cast<std::size_t>(a));
    const auto& pb = mesh_->vertex(static_cast<std::size_t>(b));
    node_coords_.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])});
  }

  const int nb = p2_per_cell();
  cell_dofs_.reserve(mesh_->num_cells() * static_cast<std::size_t>(nb));
  for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
    auto v = mesh_->cell(c);
    for (int i = 0; i < nv; ++i) cell_dofs_.push_back(v[i]);
    for (const auto& [a, b] : ledges)
      cell_dofs_.push_back(edge_index.at({std::min(v[a], v[b]), std::max(v[a], v[b])}));
  }

  boundary_node_.assign(num_scalar_dofs(), false);
  for (const auto& f : mesh_->boundary_facets()) {
    for (auto v : f.vertices) boundary_node_[static_cast<std::size_t>(v)] = true;
    for (std::size_t i = 0; i < f.vertices.size(); ++i)
      for (std::size_t j = i + 1; j < f.vertices.size(); ++j) {
        const auto a = f.vertices[i], b = f.vertices[j];
        boundary_node_[static_cast<std::size_t>(edge_index.at({std::min(a, b), std::max(a, b)}))] = true;
      }
  }
  const auto ns = num_scalar_dofs();
  for (int comp = 0; comp < dim; ++comp)
    for (std::size_t i = 0; i < ns; ++i)
      if (boundary_node_[i]) dirichlet_.push_back(static_cast<std::int32_t>(comp * ns + i));

  const auto nq = rule_.points.size();
  ref_p2_values_.resize(nq * static_cast<std::size_t>(nb));
  ref_p2_bary_grads_.resize(nq * static_cast<std::size_t>(nb * nv));
  std::array<double, 4> bary{};
  for (std::size_t q = 0; q < nq; ++q) {
    const auto& x = rule_.points[q];
    bary[0] = 1.0;
    for (int d = 0; d < dim; ++d) {
      bary[static_cast<std::size_t>(d + 1)] = x[static_cast<std::size_t>(d)];
      bary[0] -= x[static_cast<std::size_t>(d)];
    }
    std::span<const double> l(bary.data(), static_cast<std::size_t>(nv));
    p2_basis(dim, l, std::span<double>(ref_p2_values_).subspan(q * nb, static_cast<std::size_t>(nb)));
    p2_basis_bary_grads(dim, l, std::span<double>(ref_p2_bary_grads_).subspan(q * nb * nv, static_cast<std::size_t>(nb * nv)));
  }
}

namespace {

// Gradients of the barycentric coordinates; returns |det J|.
double barycentric_gradients(const SimplicialMesh& mesh, std::size_t cell, std::array<std::array<double, 3>, 4>& g) {
  const int dim = mesh.dim();
  auto v = mesh.cell(cell);
  const auto& p0 = mesh.vertex(static_cast<std::size_t>(v[0]));
  double J[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};  // J[r][c] = (p_{c+1} - p0)_r
  for (int c = 0; c < dim; ++c) {
    const auto& pc = mesh.vertex(static_cast<std::size_t>(v[c + 1]));
    for (int r = 0; r < dim; ++r) J[r][c] = pc[static_cast<std::size_t>(r)] - p0[static_cast<std::size_t>(r)];
  }
  for (auto& row : g) row = {0.0, 0.0, 0.0};
  double det = 0.0;
  if (dim == 2) {
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::kMesh, "degenerate cell " + std::to_string(cell));
    // Rows of J^{-1} are the gradients of lambda_1, lambda_2.
    g[1] = {J[1][1] / det, -J[0][1] / det, 0.0};
    g[2] = {-J[1][0] / det, J[0][0] / det, 0.0};
  } else {
    const double c00 = J[1][1] * J[2][2] - J[1][2] * J[2][1];
    const double c01 = J[1][2] * J[2][0] - J[1][0] * J[2][2];
    const double c02 = J[1][0] * J[2][1] - J[1][1] * J[2][0];
    det = J[0][0] * c00 + J[0][1] * c01 + J[0][2] * c02;
    if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::kMesh, "degenerate cell " + std::to_string(cell));
    // inv[i][j] = cofactor[j][i] / det
    const double inv[3][3] = {
        {c00 / det, (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det, (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det},
        {c01 / det, (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det, (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det},
        {c02 / det, (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det, (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det}};
    for (int i = 0; i < 3; ++i) g[static_cast<std::size_t>(i + 1)] = {inv[i][0], inv[i][1], inv[i][2]};
  }
  for (int d = 0; d < 3; ++d) {
    double s = 0.0;
    for (int i = 1; i <= dim; ++i) s += g[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
    g[0][static_cast<std::size_t>(d)] = -s;
  }
  return std::abs(det);
}

}  // namespace

CellTabulation TaylorHoodSpace::tabulate(std::size_t cell) const {
  const int dim = this->dim();
  const int nv = dim + 1;
  const int nb = p2_per_cell();
  CellTabulation t;
  t.dim = dim;
  t.nq = static_cast<int>(rule_.points.size());
  t.n_p2 = nb;
  t.n_p1 = nv;
  const double detj = barycentric_gradients(*mesh_, cell, t.p1_grads);

  auto v = mesh_->cell(cell);
  const auto& p0 = mesh_->vertex(static_cast<std::size_t>(v[0]));
  t.jxw.resize(static_cast<std::size_t>(t.nq));
  t.points.resize(static_cast<std::size_t>(t.nq));
  t.p2_values.assign(ref_p2_values_.begin(), ref_p2_values_.end());
  t.p2_grads.assign(static_cast<std::size_t>(t.nq * nb * 3), 0.0);
  t.p1_values.resize(static_cast<std::size_t>(t.nq * nv));
  for (int q = 0; q < t.nq; ++q) {
    const auto& x = rule_.points[static_cast<std::size_t>(q)];
    t.jxw[static_cast<std::size_t>(q)] = rule_.weights[static_cast<std::size_t>(q)] * detj;
    Point p = p0;
    double l0 = 1.0;
    for (int c = 0; c < dim; ++c) {
      const auto& pc = mesh_->vertex(static_cast<std::size_t>(v[c + 1]));
      for (int r = 0; r < 3; ++r) p[static_cast<std::size_t>(r)] += x[static_cast<std::size_t>(c)] * (pc[static_cast<std::size_t>(r)] - p0[static_cast<std::size_t>(r)]);
      t.p1_values[static_cast<std::size_t>(q * nv + c + 1)] = x[static_cast<std::size_t>(c)];
      l0 -= x[static_cast<std::size_t>(c)];
    }
    t.p1_values[static_cast<std::size_t>(q * nv)] = l0;
    t.points[static_cast<std::size_t>(q)] = p;
    for (int i = 0; i < nb; ++i) {
      const double* bg = &ref_p2_bary_grads_[static_cast<std::size_t>((q * nb + i) * nv)];
      double* out = &t.p2_grads[static_cast<std::size_t>((q * nb + i) * 3)];
      for (int k = 0; k < nv; ++k) {
        if (bg[k] == 0.0) continue;
        for (int d = 0; d < dim; ++d) out[d] += bg[k] * t.p1_grads[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)];
      }
    }
  }
  return t;
}

Vec3 TaylorHoodSpace::evaluate_velocity(std::span<const double> u, std::size_t cell, const Point& ref_point) const {
  const int dim = this->dim();
  std::array<double, 4> bary{};
  bary[0] = 1.0;
  for (int d = 0; d < dim; ++d) {
    bary[static_cast<std::size_t>(d + 1)] = ref_point[static_cast<std::size_t>(d)];
    bary[0] -= ref_point[static_cast<std::size_t>(d)];
  }
  std::array<double, 10> phi{};
  p2_basis(dim, std::span<const double>(bary.data(), static_cast<std::size_t>(dim + 1)), phi);
  Vec3 out{0.0, 0.0, 0.0};
  const auto dofs = cell_scalar_dofs(cell);
  const auto ns = num_scalar_dofs();
  for (int c = 0; c < dim; ++c)
    for (std::size_t i = 0; i < dofs.size(); ++i)
      out[static_cast<std::size_t>(c)] += phi[i] * u[c * ns + static_cast<std::size_t>(dofs[i])];
  return out;
}

TaylorHoodSpace build_taylor_hood(std::shared_ptr<const SimplicialMesh> mesh) {
  return TaylorHoodSpace(std::move(mesh));
}

Vec interpolate(const TaylorHoodSpace& space, const VectorField& g, double t) {
  const auto ns = space.num_scalar_dofs();
  const int dim = space.dim();
  Vec u(space.num_velocity_dofs(), 0.0);
  for (std::size_t i = 0; i < ns; ++i) {
    const Vec3 val = g(space.node_coords()[i], t);
    for (int c = 0; c < dim; ++c) {
      const double x = val[static_cast<std::size_t>(c)];
      if (!std::isfinite(x))
        throw Error(ErrorCode::kInvalidArgument, "non-finite interpolation value at node " + std::to_string(i));
      u[c * ns + i] = x;
    }
  }
  return u;
}

}  // namespace sgd
