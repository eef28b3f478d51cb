#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sgd/mesh.hpp"
#include "sgd/quadrature.hpp"

namespace sgd {

using Vec = std::vector<double>;
using Vec3 = std::array<double, 3>;

/// Vector-valued function of (point, time); unused components are ignored.
using VectorField = std::function<Vec3(const Point&, double)>;

/// Basis data of one cell at the quadrature points of the space's rule.
struct CellTabulation {
  int dim = 0;
  int nq = 0;
  int n_p2 = 0;  // 6 or 10
  int n_p1 = 0;  // 3 or 4
  std::vector<double> jxw;                  // [q]
  std::vector<Point> points;                // physical quadrature points
  std::vector<double> p2_values;            // [q * n_p2 + i]
  std::vector<double> p2_grads;             // [(q * n_p2 + i) * 3 + d]
  std::vector<double> p1_values;            // [q * n_p1 + j]
  std::array<std::array<double, 3>, 4> p1_grads{};  // constant per cell

  double p2(int q, int i) const { return p2_values[static_cast<std::size_t>(q * n_p2 + i)]; }
  double dp2(int q, int i, int d) const { return p2_grads[static_cast<std::size_t>((q * n_p2 + i) * 3 + d)]; }
  double p1(int q, int j) const { return p1_values[static_cast<std::size_t>(q * n_p1 + j)]; }
};

/// P2 vector velocity / P1 pressure Taylor-Hood pair on a simplicial mesh.
///
/// Scalar P2 nodes are the mesh vertices followed by the edges in
/// lexicographic order of their sorted vertex pairs. Velocity DOFs are
/// component-major: component c of node i is DOF c * num_scalar_dofs() + i.
class TaylorHoodSpace {
 public:
  explicit TaylorHoodSpace(std::shared_ptr<const SimplicialMesh> mesh, int quadrature_degree = 5);

  const SimplicialMesh& mesh() const noexcept { return *mesh_; }
  std::shared_ptr<const SimplicialMesh> mesh_ptr() const noexcept { return mesh_; }
  int dim() const noexcept { return mesh_->dim(); }

  std::size_t num_scalar_dofs() const noexcept { return node_coords_.size(); }
  std::size_t num_velocity_dofs() const noexcept { return num_scalar_dofs() * static_cast<std::size_t>(dim()); }
  std::size_t num_pressure_dofs() const noexcept { return mesh_->num_vertices(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  int p2_per_cell() const noexcept { return dim() == 2 ? 6 : 10; }

  /// Scalar P2 node indices of a cell: its vertices, then its edges in the
  /// local order (0,1),(0,2),(0,3),(1,2),(1,3),(2,3) (triangles: first three
  /// pairs among vertices 0..2, i.e. (0,1),(0,2),(1,2)).
  std::span<const std::int32_t> cell_scalar_dofs(std::size_t cell) const {
    const auto n = static_cast<std::size_t>(p2_per_cell());
    return {cell_dofs_.data() + cell * n, n};
  }
  std::span<const std::int32_t> cell_pressure_dofs(std::size_t cell) const { return mesh_->cell(cell); }

  const std::vector<Point>& node_coords() const noexcept { return node_coords_; }
  const std::vector<std::array<std::int32_t, 2>>& edges() const noexcept { return edges_; }

  /// True for scalar nodes lying on a tagged boundary facet.
  const std::vector<bool>& boundary_nodes() const noexcept { return boundary_node_; }
  /// Sorted velocity DOFs on tagged boundaries, all components.
  const std::vector<std::int32_t>& dirichlet_velocity_dofs() const noexcept { return dirichlet_; }

  const QuadratureRule& quadrature() const noexcept { return rule_; }

  /// Basis values and physical gradients on a cell. Throws on degenerate cells.
  CellTabulation tabulate(std::size_t cell) const;

  /// Value of the velocity field with coefficients `u` at a reference point of a cell.
  Vec3 evaluate_velocity(std::span<const double> u, std::size_t cell, const Point& ref_point) const;

 private:
  std::shared_ptr<const SimplicialMesh> mesh_;
  QuadratureRule rule_;
  std::vector<Point> node_coords_;
  std::vector<std::array<std::int32_t, 2>> edges_;
  std::vector<std::int32_t> cell_dofs_;
  std::vector<bool> boundary_node_;
  std::vector<std::int32_t> dirichlet_;
  // Reference tabulation shared by all cells.
  std::vector<double> ref_p2_values_;
  std::vector<double> ref_p2_bary_grads_;  // [(q * n_p2 + i) * (dim+1) + k] = d phi_i / d lambda_k
};

TaylorHoodSpace build_taylor_hood(std::shared_ptr<const SimplicialMesh> mesh);

/// Local edge table: pairs of local vertex indices.
std::span<const std::array<int, 2>> local_edges(int dim);

/// P2 nodal basis values in terms of barycentric coordinates.
void p2_basis(int dim, std::span<const double> bary, std::span<double> values);
/// d phi_i / d lambda_k, stored as [i * (dim+1) + k].
void p2_basis_bary_grads(int dim, std::span<const double> bary, std::span<double> grads);

/// Nodal interpolant of g(., t) into the velocity space. Throws on non-finite values.
Vec interpolate(const TaylorHoodSpace& space, const VectorField& g, double t);

}  // namespace sgd
