#include "sgd/assembly.hpp"

#include <cmath>
#include <string>

#include "sgd/error.hpp"

namespace sgd {

namespace {

// Scalar P2 x P2 assembly of a local kernel local(tab, q, i, j).
template <class Kernel>
CsrMatrix assemble_scalar(const TaylorHoodSpace& space, Kernel&& kernel) {
  const auto n = space.num_scalar_dofs();
  const int nb = space.p2_per_cell();
  std::vector<Triplet> trip;
  trip.reserve(space.mesh().num_cells() * static_cast<std::size_t>(nb * nb));
  std::vector<double> local(static_cast<std::size_t>(nb * nb));
  for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
    const CellTabulation tab = space.tabulate(c);
    std::fill(local.begin(), local.end(), 0.0);
    for (int q = 0; q < tab.nq; ++q)
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) local[static_cast<std::size_t>(i * nb + j)] += kernel(tab, q, i, j);
    const auto dofs = space.cell_scalar_dofs(c);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) trip.push_back({dofs[i], dofs[j], local[static_cast<std::size_t>(i * nb + j)]});
  }
  return CsrMatrix::from_triplets(n, n, trip);
}

}  // namespace

CsrMatrix assemble_scalar_mass(const TaylorHoodSpace& space) {
  return assemble_scalar(space, [](const CellTabulation& t, int q, int i, int j) {
    return t.jxw[static_cast<std::size_t>(q)] * t.p2(q, i) * t.p2(q, j);
  });
}

CsrMatrix assemble_scalar_derivative_pair(const TaylorHoodSpace& space, int a, int b) {
  return assemble_scalar(space, [a, b](const CellTabulation& t, int q, int i, int j) {
    return t.jxw[static_cast<std::size_t>(q)] * t.dp2(q, i, a) * t.dp2(q, j, b);
  });
}

CsrMatrix assemble_mass(const TaylorHoodSpace& space) { return block_diagonal(assemble_scalar_mass(space), space.dim()); }

CsrMatrix assemble_stiffness(const TaylorHoodSpace& space) {
  const int dim = space.dim();
  const auto lap = assemble_scalar(space, [dim](const CellTabulation& t, int q, int i, int j) {
    double g = 0.0;
    for (int d = 0; d < dim; ++d) g += t.dp2(q, i, d) * t.dp2(q, j, d);
    return t.jxw[static_cast<std::size_t>(q)] * g;
  });
  return block_diagonal(lap, dim);
}

CsrMatrix assemble_div_coupling(const TaylorHoodSpace& space) {
  const int dim = space.dim();
  const auto ns = space.num_scalar_dofs();
  const int nb = space.p2_per_cell();
  const int np = dim + 1;
  std::vector<Triplet> trip;
  std::vector<double> local(static_cast<std::size_t>(np * nb * dim));
  for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
    const CellTabulation tab = space.tabulate(c);
    std::fill(local.begin(), local.end(), 0.0);
    for (int q = 0; q < tab.nq; ++q) {
      const double w = tab.jxw[static_cast<std::size_t>(q)];
      for (int k = 0; k < np; ++k)
        for (int a = 0; a < dim; ++a)
          for (int j = 0; j < nb; ++j)
            local[static_cast<std::size_t>((k * dim + a) * nb + j)] += w * tab.p1(q, k) * tab.dp2(q, j, a);
    }
    const auto pd = space.cell_pressure_dofs(c);
    const auto vd = space.cell_scalar_dofs(c);
    for (int k = 0; k < np; ++k)
      for (int a = 0; a < dim; ++a)
        for (int j = 0; j < nb; ++j)
          trip.push_back({pd[k], static_cast<std::int32_t>(static_cast<std::size_t>(a) * ns) + vd[j],
                          local[static_cast<std::size_t>((k * dim + a) * nb + j)]});
  }
  return CsrMatrix::from_triplets(space.num_pressure_dofs(), space.num_velocity_dofs(), trip);
}

CsrMatrix assemble_graddiv_full(const TaylorHoodSpace& space) {
  const int dim = space.dim();
  const auto ns = space.num_scalar_dofs();
  std::vector<Triplet> trip;
  // Block (r, c) pairs test component r with trial component c: (d_c u_c, d_r v_r).
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) {
      const CsrMatrix blk = assemble_scalar_derivative_pair(space, r, c);
      for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t k = blk.row_ptr()[i]; k < blk.row_ptr()[i + 1]; ++k)
          trip.push_back({static_cast<std::int32_t>(static_cast<std::size_t>(r) * ns + i),
                          static_cast<std::int32_t>(static_cast<std::size_t>(c) * ns) + blk.col_idx()[k], blk.values()[k]});
    }
  const auto n = space.num_velocity_dofs();
  return CsrMatrix::from_triplets(n, n, trip);
}

CsrMatrix assemble_graddiv_diag(const TaylorHoodSpace& space) {
  const int dim = space.dim();
  const auto ns = space.num_scalar_dofs();
  std::vector<Triplet> trip;
  for (int a = 0; a < dim; ++a) {
    const CsrMatrix blk = assemble_scalar_derivative_pair(space, a, a);
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t k = blk.row_ptr()[i]; k < blk.row_ptr()[i + 1]; ++k)
        trip.push_back({static_cast<std::int32_t>(static_cast<std::size_t>(a) * ns + i),
                        static_cast<std::int32_t>(static_cast<std::size_t>(a) * ns) + blk.col_idx()[k], blk.values()[k]});
  }
  const auto n = space.num_velocity_dofs();
  return CsrMatrix::from_triplets(n, n, trip);
}

Vec assemble_pressure_mean(const TaylorHoodSpace& space) {
  Vec m(space.num_pressure_dofs(), 0.0);
  for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
    // P1 hat functions integrate to |T| / (dim + 1).
    const double share = space.mesh().cell_volume(c) / (space.dim() + 1);
    for (auto v : space.cell_pressure_dofs(c)) m[static_cast<std::size_t>(v)] += share;
  }
  return m;
}

CsrMatrix assemble_convection_scalar(const TaylorHoodSpace& space, std::span<const double> w) {
  if (w.size() != space.num_velocity_dofs()) throw Error(ErrorCode::kInvalidArgument, "convection: wrong field length");
  const int dim = space.dim();
  const auto ns = space.num_scalar_dofs();
  const auto n = ns;
  const int nb = space.p2_per_cell();
  std::vector<Triplet> trip;
  trip.reserve(space.mesh().num_cells() * static_cast<std::size_t>(nb * nb));
  std::vector<double> adv(static_cast<std::size_t>(nb * nb));
  for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
    const CellTabulation tab = space.tabulate(c);
    const auto dofs = space.cell_scalar_dofs(c);
    std::fill(adv.begin(), adv.end(), 0.0);
    for (int q = 0; q < tab.nq; ++q) {
      double wq[3] = {0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a)
        for (int i = 0; i < nb; ++i) wq[a] += tab.p2(q, i) * w[static_cast<std::size_t>(a) * ns + static_cast<std::size_t>(dofs[i])];
      const double jw = tab.jxw[static_cast<std::size_t>(q)];
      for (int j = 0; j < nb; ++j) {
        double wgrad = 0.0;
        for (int a = 0; a < dim; ++a) wgrad += wq[a] * tab.dp2(q, j, a);
        const double s = jw * wgrad;
        for (int i = 0; i < nb; ++i) adv[static_cast<std::size_t>(i * nb + j)] += s * tab.p2(q, i);
      }
    }
    // adv(i, j) = (w.grad phi_j, phi_i); the skew form takes its antisymmetric part.
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        trip.push_back({dofs[i], dofs[j],
                        0.5 * adv[static_cast<std::size_t>(i * nb + j)] - 0.5 * adv[static_cast<std::size_t>(j * nb + i)]});
  }
  return CsrMatrix::from_triplets(n, n, trip);
}

CsrMatrix assemble_convection(const TaylorHoodSpace& space, std::span<const double> w) {
  return block_diagonal(assemble_convection_scalar(space, w), space.dim());
}

Vec assemble_load(const TaylorHoodSpace& space, const VectorField& f, double t) {
  const int dim = space.dim();
  const auto ns = space.num_scalar_dofs();
  const int nb = space.p2_per_cell();
  Vec b(space.num_velocity_dofs(), 0.0);
  for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
    const CellTabulation tab = space.tabulate(c);
    const auto dofs = space.cell_scalar_dofs(c);
    for (int q = 0; q < tab.nq; ++q) {
      const Vec3 fq = f(tab.points[static_cast<std::size_t>(q)], t);
      for (int a = 0; a < dim; ++a)
        if (!std::isfinite(fq[static_cast<std::size_t>(a)]))
          throw Error(ErrorCode::kInvalidArgument, "non-finite forcing value in cell " + std::to_string(c));
      const double jw = tab.jxw[static_cast<std::size_t>(q)];
      for (int a = 0; a < dim; ++a) {
        const double s = jw * fq[static_cast<std::size_t>(a)];
        if (s == 0.0) continue;
        for (int i = 0; i < nb; ++i) b[static_cast<std::size_t>(a) * ns + static_cast<std::size_t>(dofs[i])] += s * tab.p2(q, i);
      }
    }
  }
  return b;
}

OperatorSet assemble_operators(const TaylorHoodSpace& space) {
  OperatorSet ops;
  ops.dim = space.dim();
  ops.n_scalar = space.num_scalar_dofs();
  ops.n_velocity = space.num_velocity_dofs();
  ops.n_pressure = space.num_pressure_dofs();
  ops.scalar_mass = assemble_scalar_mass(space);
  for (int a = 0; a < ops.dim; ++a)
    ops.axis_stiffness[static_cast<std::size_t>(a)] = assemble_scalar_derivative_pair(space, a, a);
  if (ops.dim == 2) {
    ops.scalar_stiffness = add_scaled(1.0, ops.axis_stiffness[0], 1.0, ops.axis_stiffness[1]);
  } else {
    const double c[3] = {1.0, 1.0, 1.0};
    const CsrMatrix* m[3] = {&ops.axis_stiffness[0], &ops.axis_stiffness[1], &ops.axis_stiffness[2]};
    ops.scalar_stiffness = linear_combination(c, m);
  }
  ops.mass = block_diagonal(ops.scalar_mass, ops.dim);
  ops.stiffness = block_diagonal(ops.scalar_stiffness, ops.dim);
  ops.div_coupling = assemble_div_coupling(space);
  ops.graddiv_full = assemble_graddiv_full(space);
  ops.graddiv_diag = assemble_graddiv_diag(space);
  ops.pressure_mean = assemble_pressure_mean(space);
  return ops;
}

void apply_dirichlet(CsrMatrix& matrix, std::span<double> rhs, std::span<const std::int32_t> dofs) {
  const auto n = matrix.rows();
  if (matrix.cols() != n) throw Error(ErrorCode::kInvalidArgument, "apply_dirichlet needs a square matrix");
  if (!rhs.empty() && rhs.size() != n) throw Error(ErrorCode::kInvalidArgument, "apply_dirichlet: rhs length mismatch");
  std::vector<bool> fixed(n, false);
  bool missing_diag = false;
  for (auto d : dofs) {
    if (d < 0 || static_cast<std::size_t>(d) >= n)
      throw Error(ErrorCode::kInvalidArgument, "Dirichlet DOF " + std::to_string(d) + " out of range");
    fixed[static_cast<std::size_t>(d)] = true;
    if (matrix.find(static_cast<std::size_t>(d), static_cast<std::size_t>(d)) == nullptr) missing_diag = true;
  }
  if (missing_diag) matrix = add_scaled(1.0, matrix, 0.0, CsrMatrix::identity(n));
  const auto& ptr = matrix.row_ptr();
  const auto& idx = matrix.col_idx();
  auto& val = matrix.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(idx[k]);
      if (fixed[i] || fixed[j]) val[k] = (i == j) ? 1.0 : 0.0;
    }
  if (!rhs.empty())
    for (auto d : dofs) rhs[static_cast<std::size_t>(d)] = 0.0;
}

void zero_dofs(std::span<double> v, std::span<const std::int32_t> dofs) {
  for (auto d : dofs) v[static_cast<std::size_t>(d)] = 0.0;
}

}  // namespace sgd
