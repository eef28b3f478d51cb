#include "sgd/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "sgd/error.hpp"

namespace sgd {

namespace {

struct TupleHash {
  std::size_t operator()(const std::vector<std::int32_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : v) {
      h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(x));
      h *= 1099511628211ull;
    }
    return h;
  }
};

using FacetCount = std::unordered_map<std::vector<std::int32_t>, int, TupleHash>;

FacetCount count_facets(int dim, std::span<const std::int32_t> cells) {
  const int nv = dim + 1;
  FacetCount counts;
  counts.reserve(cells.size());
  std::vector<std::int32_t> f(static_cast<std::size_t>(dim));
  for (std::size_t c = 0; c + nv <= cells.size(); c += nv) {
    for (int skip = 0; skip < nv; ++skip) {
      std::size_t w = 0;
      for (int j = 0; j < nv; ++j)
        if (j != skip) f[w++] = cells[c + j];
      std::sort(f.begin(), f.end());
      ++counts[f];
    }
  }
  return counts;
}

}  // namespace

double signed_simplex_volume(int dim, std::span<const Point> p) {
  if (dim == 2) {
    const double ax = p[1][0] - p[0][0], ay = p[1][1] - p[0][1];
    const double bx = p[2][0] - p[0][0], by = p[2][1] - p[0][1];
    return 0.5 * (ax * by - ay * bx);
  }
  double a[3], b[3], c[3];
  for (int i = 0; i < 3; ++i) {
    a[i] = p[1][i] - p[0][i];
    b[i] = p[2][i] - p[0][i];
    c[i] = p[3][i] - p[0][i];
  }
  const double det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                     a[2] * (b[0] * c[1] - b[1] * c[0]);
  return det / 6.0;
}

SimplicialMesh::SimplicialMesh(int dim, std::vector<Point> vertices, std::vector<std::int32_t> cells,
                               std::vector<BoundaryFacet> boundary_facets)
    : dim_(dim), vertices_(std::move(vertices)), cells_(std::move(cells)), facets_(std::move(boundary_facets)) {
  if (dim_ != 2 && dim_ != 3) throw Error(ErrorCode::kMesh, "mesh dimension must be 2 or 3");
  const auto nv = static_cast<std::size_t>(dim_ + 1);
  if (cells_.empty() || cells_.size() % nv != 0) throw Error(ErrorCode::kMesh, "mesh has no complete cells");
  const auto nvert = static_cast<std::int32_t>(vertices_.size());
  for (auto v : cells_)
    if (v < 0 || v >= nvert) throw Error(ErrorCode::kMesh, "cell vertex index out of range: " + std::to_string(v));
  for (std::size_t c = 0; c < num_cells(); ++c) {
    if (!(cell_volume(c) > 0.0))
      throw Error(ErrorCode::kMesh, "cell " + std::to_string(c) + " has non-positive volume");
    h_ = std::max(h_, cell_diameter(c));
  }
  const FacetCount counts = count_facets(dim_, cells_);
  for (const auto& f : counts)
    if (f.second > 2) throw Error(ErrorCode::kMesh, "non-manifold facet shared by more than two cells");
  for (const auto& bf : facets_) {
    if (bf.vertices.size() != static_cast<std::size_t>(dim_))
      throw Error(ErrorCode::kMesh, "boundary facet with wrong vertex count");
    for (auto v : bf.vertices)
      if (v < 0 || v >= nvert) throw Error(ErrorCode::kMesh, "boundary facet vertex out of range");
    auto key = bf.vertices;
    std::sort(key.begin(), key.end());
    auto it = counts.find(key);
    if (it == counts.end() || it->second != 1)
      throw Error(ErrorCode::kMesh, "tagged facet '" + bf.tag + "' is not an exterior face of exactly one cell");
  }
}

double SimplicialMesh::cell_volume(std::size_t c) const {
  std::array<Point, 4> p{};
  auto idx = cell(c);
  for (std::size_t i = 0; i < idx.size(); ++i) p[i] = vertices_[static_cast<std::size_t>(idx[i])];
  return signed_simplex_volume(dim_, std::span<const Point>(p.data(), idx.size()));
}

double SimplicialMesh::cell_diameter(std::size_t c) const {
  auto idx = cell(c);
  double best = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      const auto& a = vertices_[static_cast<std::size_t>(idx[i])];
      const auto& b = vertices_[static_cast<std::size_t>(idx[j])];
      const double d = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                                 (a[2] - b[2]) * (a[2] - b[2]));
      best = std::max(best, d);
    }
  return best;
}

double SimplicialMesh::total_volume() const {
  double v = 0.0;
  for (std::size_t c = 0; c < num_cells(); ++c) v += cell_volume(c);
  return v;
}

double mesh_size(const SimplicialMesh& mesh) { return mesh.h(); }

std::vector<std::vector<std::int32_t>> exterior_facets(int dim, std::span<const std::int32_t> cells) {
  const FacetCount counts = count_facets(dim, cells);
  std::vector<std::vector<std::int32_t>> out;
  for (const auto& [f, n] : counts)
    if (n == 1) out.push_back(f);
  std::sort(out.begin(), out.end());
  return out;
}

FacetIncidence facet_incidence(const SimplicialMesh& mesh) {
  const auto nv = static_cast<std::size_t>(mesh.dim() + 1);
  std::vector<std::int32_t> flat;
  flat.reserve(mesh.num_cells() * nv);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (auto v : mesh.cell(c)) flat.push_back(v);
  FacetIncidence inc;
  for (const auto& [f, n] : count_facets(mesh.dim(), flat)) {
    if (n == 1)
      ++inc.boundary;
    else if (n == 2)
      ++inc.interior;
    else
      ++inc.invalid;
  }
  return inc;
}

namespace {

std::vector<BoundaryFacet> wall_facets(int dim, const std::vector<std::int32_t>& cells) {
  std::vector<BoundaryFacet> out;
  for (auto& f : exterior_facets(dim, cells)) out.push_back({std::move(f), "wall"});
  return out;
}

// Swaps two vertices of every negatively oriented cell.
void orient_cells(int dim, const std::vector<Point>& verts, std::vector<std::int32_t>& cells) {
  const auto nv = static_cast<std::size_t>(dim + 1);
  std::array<Point, 4> p{};
  for (std::size_t c = 0; c < cells.size(); c += nv) {
    for (std::size_t i = 0; i < nv; ++i) p[i] = verts[static_cast<std::size_t>(cells[c + i])];
    if (signed_simplex_volume(dim, std::span<const Point>(p.data(), nv)) < 0.0) std::swap(cells[c], cells[c + 1]);
  }
}

}  // namespace

SimplicialMesh generate_unit_square(int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "unit square requires n >= 1");
  const int np = n + 1;
  std::vector<Point> verts;
  verts.reserve(static_cast<std::size_t>(np * np));
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < np; ++i) verts.push_back({double(i) / n, double(j) / n, 0.0});
  auto id = [np](int i, int j) { return static_cast<std::int32_t>(j * np + i); };
  std::vector<std::int32_t> cells;
  cells.reserve(static_cast<std::size_t>(6 * n * n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      cells.insert(cells.end(), {a, b, c, a, c, d});
    }
  auto facets = wall_facets(2, cells);
  return SimplicialMesh(2, std::move(verts), std::move(cells), std::move(facets));
}

SimplicialMesh generate_unit_cube(int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "unit cube requires n >= 1");
  const int np = n + 1;
  std::vector<Point> verts;
  verts.reserve(static_cast<std::size_t>(np * np * np));
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i) verts.push_back({double(i) / n, double(j) / n, double(k) / n});
  auto id = [np](int i, int j, int k) { return static_cast<std::int32_t>((k * np + j) * np + i); };
  // Kuhn subdivision: one tet per monotone lattice path from corner 000 to 111.
  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<std::int32_t> cells;
  cells.reserve(static_cast<std::size_t>(24 * n * n * n));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& perm : kPerms) {
          int off[3] = {0, 0, 0};
          cells.push_back(id(i, j, k));
          for (int s = 0; s < 3; ++s) {
            off[perm[s]] = 1;
            cells.push_back(id(i + off[0], j + off[1], k + off[2]));
          }
        }
  orient_cells(3, verts, cells);
  auto facets = wall_facets(3, cells);
  return SimplicialMesh(3, std::move(verts), std::move(cells), std::move(facets));
}

// ---------------------------------------------------------------------------
// MSH 2.2 ASCII

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }
  std::string expect_line(const char* what) {
    std::string line;
    if (!next(line)) fail(std::string("unexpected end of file while reading ") + what);
    return line;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kParse, "msh line " + std::to_string(lineno_) + ": " + msg);
  }
  int lineno() const noexcept { return lineno_; }

 private:
  std::istream& in_;
  int lineno_ = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

long parse_count(LineReader& r, const std::string& line) {
  std::istringstream ss(line);
  long n = -1;
  if (!(ss >> n) || n < 0) r.fail("expected a non-negative count, got '" + trim(line) + "'");
  return n;
}

struct RawElement {
  int type;
  int physical;
  std::vector<long> nodes;
  int line;
};

}  // namespace

SimplicialMesh import_msh(std::istream& in) {
  LineReader r(in);
  std::map<int, std::string> names;
  std::map<long, Point> nodes;
  std::vector<RawElement> elements;
  bool saw_format = false, saw_nodes = false, saw_elements = false;

  std::string line;
  while (r.next(line)) {
    const std::string head = trim(line);
    if (head.empty() || head[0] != '$') r.fail("expected a section header, got '" + head + "'");
    if (head == "$MeshFormat") {
      std::istringstream ss(r.expect_line("$MeshFormat"));
      std::string version;
      int file_type = -1;
      ss >> version >> file_type;
      if (version.rfind("2.2", 0) != 0) r.fail("unsupported MSH version '" + version + "' (need 2.2)");
      if (file_type != 0) r.fail("binary MSH files are not supported");
      if (trim(r.expect_line("$EndMeshFormat")) != "$EndMeshFormat") r.fail("missing $EndMeshFormat");
      saw_format = true;
    } else if (head == "$PhysicalNames") {
      const long n = parse_count(r, r.expect_line("$PhysicalNames count"));
      for (long i = 0; i < n; ++i) {
        std::istringstream ss(r.expect_line("$PhysicalNames"));
        int dim = 0, tag = 0;
        if (!(ss >> dim >> tag)) r.fail("malformed physical name entry");
        std::string rest;
        std::getline(ss, rest);
        rest = trim(rest);
        if (rest.size() >= 2 && rest.front() == '"' && rest.back() == '"') rest = rest.substr(1, rest.size() - 2);
        names[tag] = rest;
      }
      if (trim(r.expect_line("$EndPhysicalNames")) != "$EndPhysicalNames") r.fail("missing $EndPhysicalNames");
    } else if (head == "$Nodes") {
      const long n = parse_count(r, r.expect_line("$Nodes count"));
      for (long i = 0; i < n; ++i) {
        std::istringstream ss(r.expect_line("$Nodes"));
        long id = 0;
        Point p{};
        if (!(ss >> id >> p[0] >> p[1] >> p[2])) r.fail("malformed node entry");
        if (!nodes.emplace(id, p).second) r.fail("duplicate node id " + std::to_string(id));
      }
      if (trim(r.expect_line("$EndNodes")) != "$EndNodes") r.fail("missing $EndNodes");
      saw_nodes = true;
    } else if (head == "$Elements") {
      const long n = parse_count(r, r.expect_line("$Elements count"));
      for (long i = 0; i < n; ++i) {
        std::istringstream ss(r.expect_line("$Elements"));
        long id = 0;
        int type = 0, ntags = 0;
        if (!(ss >> id >> type >> ntags) || ntags < 0) r.fail("malformed element entry");
        std::vector<int> tags(static_cast<std::size_t>(ntags));
        for (auto& t : tags)
          if (!(ss >> t)) r.fail("malformed element tags");
        int nn = 0;
        switch (type) {
          case 1: nn = 2; break;
          case 2: nn = 3; break;
          case 4: nn = 4; break;
          case 15: nn = 1; break;
          default: r.fail("unsupported element type " + std::to_string(type));
        }
        RawElement e{type, ntags > 0 ? tags[0] : 0, std::vector<long>(static_cast<std::size_t>(nn)), r.lineno()};
        for (auto& v : e.nodes)
          if (!(ss >> v)) r.fail("element " + std::to_string(id) + " has too few nodes");
        if (type != 15) elements.push_back(std::move(e));
      }
      if (trim(r.expect_line("$EndElements")) != "$EndElements") r.fail("missing $EndElements");
      saw_elements = true;
    } else {
      // Skip unknown sections such as $NodeData.
      const std::string end = "$End" + head.substr(1);
      std::string skip;
      bool closed = false;
      while (r.next(skip))
        if (trim(skip) == end) {
          closed = true;
          break;
        }
      if (!closed) r.fail("unterminated section " + head);
    }
  }
  if (!saw_format) r.fail("missing $MeshFormat section");
  if (!saw_nodes || !saw_elements) r.fail("missing $Nodes or $Elements section");

  for (const auto& e : elements)
    for (auto v : e.nodes)
      if (!nodes.count(v))
        throw Error(ErrorCode::kParse,
                    "msh line " + std::to_string(e.line) + ": element references undefined node " + std::to_string(v));

  int dim = 0;
  for (const auto& e : elements) dim = std::max(dim, e.type == 4 ? 3 : e.type == 2 ? 2 : 1);
  if (dim < 2) throw Error(ErrorCode::kMesh, "msh file contains no triangles or tetrahedra");
  const int cell_type = dim == 3 ? 4 : 2;
  const int facet_type = dim == 3 ? 2 : 1;

  std::map<long, std::int32_t> renumber;
  for (const auto& e : elements)
    if (e.type == cell_type)
      for (auto v : e.nodes) renumber.emplace(v, 0);
  std::vector<Point> verts;
  verts.reserve(renumber.size());
  for (auto& [id, idx] : renumber) {
    idx = static_cast<std::int32_t>(verts.size());
    Point p = nodes.at(id);
    if (dim == 2) p[2] = 0.0;
    verts.push_back(p);
  }

  std::vector<std::int32_t> cells;
  std::vector<BoundaryFacet> facets;
  for (const auto& e : elements) {
    if (e.type == cell_type) {
      for (auto v : e.nodes) cells.push_back(renumber.at(v));
    } else if (e.type == facet_type) {
      BoundaryFacet f;
      for (auto v : e.nodes) {
        auto it = renumber.find(v);
        if (it == renumber.end())
          throw Error(ErrorCode::kParse, "msh line " + std::to_string(e.line) +
                                             ": boundary element references node " + std::to_string(v) +
                                             " that belongs to no cell");
        f.vertices.push_back(it->second);
      }
      auto nm = names.find(e.physical);
      f.tag = nm != names.end() ? nm->second : std::to_string(e.physical);
      facets.push_back(std::move(f));
    }
  }
  orient_cells(dim, verts, cells);
  return SimplicialMesh(dim, std::move(verts), std::move(cells), std::move(facets));
}

SimplicialMesh import_msh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open mesh file '" + path + "'");
  return import_msh(in);
}

void export_msh(const SimplicialMesh& mesh, std::ostream& out) {
  std::map<std::string, int> tag_ids;
  for (const auto& f : mesh.boundary_facets()) tag_ids.emplace(f.tag, 0);
  int next = 1;
  for (auto& [name, id] : tag_ids) id = next++;
  const int domain_id = next;
  const int dim = mesh.dim();

  auto old_precision = out.precision(17);
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$PhysicalNames\n" << tag_ids.size() + 1 << "\n";
  for (const auto& [name, id] : tag_ids) out << dim - 1 << " " << id << " \"" << name << "\"\n";
  out << dim << " " << domain_id << " \"domain\"\n$EndPhysicalNames\n";
  out << "$Nodes\n" << mesh.num_vertices() << "\n";
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& p = mesh.vertex(i);
    out << i + 1 << " " << p[0] << " " << p[1] << " " << p[2] << "\n";
  }
  out << "$EndNodes\n$Elements\n" << mesh.num_boundary_facets() + mesh.num_cells() << "\n";
  long id = 1;
  const int facet_type = dim == 3 ? 2 : 1;
  const int cell_type = dim == 3 ? 4 : 2;
  for (const auto& f : mesh.boundary_facets()) {
    const int tag = tag_ids.at(f.tag);
    out << id++ << " " << facet_type << " 2 " << tag << " " << tag;
    for (auto v : f.vertices) out << " " << v + 1;
    out << "\n";
  }
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    out << id++ << " " << cell_type << " 2 " << domain_id << " " << domain_id;
    for (auto v : mesh.cell(c)) out << " " << v + 1;
    out << "\n";
  }
  out << "$EndElements\n";
  out.precision(old_precision);
}

SimplicialMesh load_mesh_spec(const std::string& spec_in) {
  const std::string spec = spec_in.rfind("gen:", 0) == 0 ? spec_in.substr(4) : spec_in;
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string kind = spec.substr(0, colon);
    if (kind == "unit_square" || kind == "unit_cube") {
      int n = 0;
      try {
        n = std::stoi(spec.substr(colon + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "bad mesh resolution in '" + spec + "'");
      }
      return kind == "unit_square" ? generate_unit_square(n) : generate_unit_cube(n);
    }
  }
  return import_msh_file(spec);
}

}  // namespace sgd
