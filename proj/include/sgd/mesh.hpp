#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace sgd {

using Point = std::array<double, 3>;  // unused trailing coordinates are zero

struct BoundaryFacet {
  std::vector<std::int32_t> vertices;  // dim vertices
  std::string tag;
};

/// Conforming simplicial mesh of a 2d or 3d domain.
///
/// Cells are stored with dim+1 vertex indices and strictly positive signed
/// volume. Boundary facets carry a tag; the solver treats every tagged facet
/// as no-slip.
class SimplicialMesh {
 public:
  SimplicialMesh(int dim, std::vector<Point> vertices, std::vector<std::int32_t> cells,
                 std::vector<BoundaryFacet> boundary_facets);

  int dim() const noexcept { return dim_; }
  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_cells() const noexcept { return cells_.size() / static_cast<std::size_t>(dim_ + 1); }
  std::size_t num_boundary_facets() const noexcept { return facets_.size(); }

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  std::span<const std::int32_t> cell(std::size_t c) const {
    const auto nv = static_cast<std::size_t>(dim_ + 1);
    return {cells_.data() + c * nv, nv};
  }
  const std::vector<BoundaryFacet>& boundary_facets() const noexcept { return facets_; }

  /// Signed volume of cell c (positive for every stored cell).
  double cell_volume(std::size_t c) const;
  /// Largest vertex-pair distance within cell c.
  double cell_diameter(std::size_t c) const;
  /// Maximum cell diameter, cached at construction.
  double h() const noexcept { return h_; }
  double total_volume() const;

 private:
  int dim_;
  std::vector<Point> vertices_;
  std::vector<std::int32_t> cells_;
  std::vector<BoundaryFacet> facets_;
  double h_ = 0.0;
};

/// Signed volume of the simplex spanned by `corners` (dim+1 points).
double signed_simplex_volume(int dim, std::span<const Point> corners);

/// Unit square split into n x n squares, two triangles each along the
/// (i,j)-(i+1,j+1) diagonal. All exterior edges are tagged "wall".
SimplicialMesh generate_unit_square(int n);

/// Unit cube split into n^3 subcubes, six Kuhn tetrahedra each.
SimplicialMesh generate_unit_cube(int n);

/// Reads an ASCII Gmsh MSH 2.2 file restricted to 2-, 3- and 4-node simplices.
SimplicialMesh import_msh(std::istream& in);
SimplicialMesh import_msh_file(const std::string& path);

/// Writes the mesh as ASCII MSH 2.2 with one physical name per tag.
void export_msh(const SimplicialMesh& mesh, std::ostream& out);

double mesh_size(const SimplicialMesh& mesh);

struct FacetIncidence {
  std::size_t boundary = 0;  // facets with one incident cell
  std::size_t interior = 0;  // facets with two incident cells
  std::size_t invalid = 0;   // facets with more than two
};

/// Counts facet-cell incidences by hashing sorted facet vertex tuples.
FacetIncidence facet_incidence(const SimplicialMesh& mesh);

/// Sorted vertex tuples of facets that belong to exactly one cell.
std::vector<std::vector<std::int32_t>> exterior_facets(int dim, std::span<const std::int32_t> cells);

/// Parses "unit_square:N", "unit_cube:N" (optionally prefixed "gen:") or a
/// path to an MSH file.
SimplicialMesh load_mesh_spec(const std::string& spec);

}  // namespace sgd
