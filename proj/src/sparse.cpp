#include "sgd/sparse.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sgd/error.hpp"

namespace sgd {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::int32_t> col_idx, Vec values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size())
    throw Error(ErrorCode::kInvalidArgument, "inconsistent CSR arrays");
  for (std::size_t i = 0; i < rows_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw Error(ErrorCode::kInvalidArgument, "CSR row offsets not monotone");
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] < 0 || static_cast<std::size_t>(col_idx_[k]) >= cols_)
        throw Error(ErrorCode::kInvalidArgument, "CSR column index out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
        throw Error(ErrorCode::kInvalidArgument, "CSR column indices not strictly increasing");
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::span<const Triplet> triplets) {
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const auto& t : triplets)
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= rows || static_cast<std::size_t>(t.col) >= cols)
      throw Error(ErrorCode::kInvalidArgument, "triplet index out of range");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = triplets[a];
    const auto& y = triplets[b];
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  std::vector<std::size_t> ptr(rows + 1, 0);
  std::vector<std::int32_t> idx;
  Vec val;
  idx.reserve(triplets.size());
  val.reserve(triplets.size());
  std::int32_t last_row = -1, last_col = -1;
  for (auto k : order) {
    const auto& t = triplets[k];
    if (t.row == last_row && t.col == last_col) {
      val.back() += t.value;
    } else {
      idx.push_back(t.col);
      val.push_back(t.value);
      ++ptr[static_cast<std::size_t>(t.row) + 1];
      last_row = t.row;
      last_col = t.col;
    }
  }
  for (std::size_t i = 0; i < rows; ++i) ptr[i + 1] += ptr[i];
  return CsrMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(val));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  Vec ones(n, 1.0);
  return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> diag) {
  const auto n = diag.size();
  std::vector<std::size_t> ptr(n + 1);
  std::vector<std::int32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    ptr[i + 1] = i + 1;
    idx[i] = static_cast<std::int32_t>(i);
  }
  return CsrMatrix(n, n, std::move(ptr), std::move(idx), Vec(diag.begin(), diag.end()));
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  auto b = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  auto e = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  auto it = std::lower_bound(b, e, static_cast<std::int32_t>(j));
  return (it != e && *it == static_cast<std::int32_t>(j)) ? values_[static_cast<std::size_t>(it - col_idx_.begin())] : 0.0;
}

double* CsrMatrix::find(std::size_t i, std::size_t j) {
  auto b = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  auto e = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  auto it = std::lower_bound(b, e, static_cast<std::int32_t>(j));
  return (it != e && *it == static_cast<std::int32_t>(j)) ? &values_[static_cast<std::size_t>(it - col_idx_.begin())]
                                                          : nullptr;
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<std::size_t> ptr(cols_ + 1, 0);
  for (auto c : col_idx_) ++ptr[static_cast<std::size_t>(c) + 1];
  for (std::size_t j = 0; j < cols_; ++j) ptr[j + 1] += ptr[j];
  std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
  std::vector<std::int32_t> idx(nnz());
  Vec val(nnz());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const auto dst = fill[static_cast<std::size_t>(col_idx_[k])]++;
      idx[dst] = static_cast<std::int32_t>(i);
      val[dst] = values_[k];
    }
  return CsrMatrix(cols_, rows_, std::move(ptr), std::move(idx), std::move(val));
}

Vec CsrMatrix::diagonal_values() const {
  Vec d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

Vec CsrMatrix::to_dense() const {
  Vec d(rows_ * cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d[i * cols_ + static_cast<std::size_t>(col_idx_[k])] = values_[k];
  return d;
}

CsrMatrix CsrMatrix::submatrix(std::span<const std::int32_t> keep) const {
  std::vector<std::int32_t> map(std::max(rows_, cols_), -1);
  for (std::size_t k = 0; k < keep.size(); ++k) map[static_cast<std::size_t>(keep[k])] = static_cast<std::int32_t>(k);
  std::vector<std::size_t> ptr(keep.size() + 1, 0);
  std::vector<std::int32_t> idx;
  Vec val;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto i = static_cast<std::size_t>(keep[r]);
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const auto m = map[static_cast<std::size_t>(col_idx_[k])];
      if (m < 0) continue;
      idx.push_back(m);
      val.push_back(values_[k]);
    }
    ptr[r + 1] = idx.size();
  }
  return CsrMatrix(keep.size(), keep.size(), std::move(ptr), std::move(idx), std::move(val));
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool CsrMatrix::is_symmetric(double rel_tol) const {
  if (rows_ != cols_) return false;
  const double tol = rel_tol * std::max(max_abs(), 1e-300);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (std::abs(values_[k] - at(static_cast<std::size_t>(col_idx_[k]), i)) > tol) return false;
  return true;
}

Vec spmv(const CsrMatrix& a, std::span<const double> x) {
  Vec y(a.rows(), 0.0);
  spmv_add(a, x, 1.0, y);
  return y;
}

void spmv_add(const CsrMatrix& a, std::span<const double> x, double s, std::span<double> y) {
  if (x.size() != a.cols() || y.size() != a.rows())
    throw Error(ErrorCode::kInvalidArgument, "spmv shape mismatch: matrix " + std::to_string(a.rows()) + "x" +
                                                 std::to_string(a.cols()) + ", x " + std::to_string(x.size()));
  const auto& ptr = a.row_ptr();
  const auto& idx = a.col_idx();
  const auto& val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) acc += val[k] * x[static_cast<std::size_t>(idx[k])];
    y[i] += s * acc;
  }
}

double quadratic_form(const CsrMatrix& a, std::span<const double> x) { return bilinear_form(a, x, x); }

double bilinear_form(const CsrMatrix& a, std::span<const double> x, std::span<const double> y) {
  const Vec ay = spmv(a, y);
  return dot(x, ay);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CsrMatrix linear_combination(std::span<const double> coeffs, std::span<const CsrMatrix* const> mats) {
  if (coeffs.size() != mats.size() || mats.empty())
    throw Error(ErrorCode::kInvalidArgument, "linear_combination: bad arguments");
  const auto rows = mats[0]->rows(), cols = mats[0]->cols();
  for (const auto* m : mats)
    if (m->rows() != rows || m->cols() != cols)
      throw Error(ErrorCode::kInvalidArgument, "linear_combination: shape mismatch");
  std::vector<std::size_t> ptr(rows + 1, 0);
  std::vector<std::int32_t> idx;
  Vec val;
  std::vector<std::int32_t> merged;
  for (std::size_t i = 0; i < rows; ++i) {
    merged.clear();
    for (const auto* m : mats)
      merged.insert(merged.end(), m->col_idx().begin() + static_cast<std::ptrdiff_t>(m->row_ptr()[i]),
                    m->col_idx().begin() + static_cast<std::ptrdiff_t>(m->row_ptr()[i + 1]));
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    const auto base = val.size();
    idx.insert(idx.end(), merged.begin(), merged.end());
    val.resize(base + merged.size(), 0.0);
    for (std::size_t m = 0; m < mats.size(); ++m) {
      const auto& a = *mats[m];
      std::size_t pos = 0;
      for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
        while (merged[pos] != a.col_idx()[k]) ++pos;
        val[base + pos] += coeffs[m] * a.values()[k];
      }
    }
    ptr[i + 1] = idx.size();
  }
  return CsrMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(val));
}

CsrMatrix add_scaled(double a, const CsrMatrix& x, double b, const CsrMatrix& y) {
  const double c[2] = {a, b};
  const CsrMatrix* m[2] = {&x, &y};
  return linear_combination(c, m);
}

CsrMatrix block_diagonal(const CsrMatrix& block, int copies) {
  const auto n = block.rows(), m = block.cols();
  std::vector<std::size_t> ptr(n * static_cast<std::size_t>(copies) + 1, 0);
  std::vector<std::int32_t> idx;
  Vec val;
  idx.reserve(block.nnz() * static_cast<std::size_t>(copies));
  val.reserve(block.nnz() * static_cast<std::size_t>(copies));
  for (int c = 0; c < copies; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = block.row_ptr()[i]; k < block.row_ptr()[i + 1]; ++k) {
        idx.push_back(static_cast<std::int32_t>(static_cast<std::size_t>(c) * m) + block.col_idx()[k]);
        val.push_back(block.values()[k]);
      }
      ptr[static_cast<std::size_t>(c) * n + i + 1] = idx.size();
    }
  return CsrMatrix(n * static_cast<std::size_t>(copies), m * static_cast<std::size_t>(copies), std::move(ptr),
                   std::move(idx), std::move(val));
}

// ---------------------------------------------------------------------------

struct Factorization::Impl {
  using EigenMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  Eigen::SparseLU<EigenMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  bool factorized = false;
  std::vector<std::size_t> pattern_ptr;
  std::vector<std::int32_t> pattern_idx;

  static EigenMatrix convert(const CsrMatrix& a) {
    using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
    RowMatrix r(static_cast<int>(a.rows()), static_cast<int>(a.cols()));
    std::vector<int> nnz_per_row(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) nnz_per_row[i] = static_cast<int>(a.row_ptr()[i + 1] - a.row_ptr()[i]);
    r.reserve(nnz_per_row);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
        r.insert(static_cast<int>(i), a.col_idx()[k]) = a.values()[k];
    r.makeCompressed();
    EigenMatrix c = r;
    c.makeCompressed();
    return c;
  }
};

Factorization::Factorization() : impl_(std::make_unique<Impl>()) {}
Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

bool Factorization::analyzed() const noexcept { return impl_ && impl_->analyzed; }
bool Factorization::factorized() const noexcept { return impl_ && impl_->factorized; }

void Factorization::analyze(const CsrMatrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::kInvalidArgument, "factorization needs a square matrix");
  n_ = a.rows();
  impl_->lu.analyzePattern(Impl::convert(a));
  impl_->pattern_ptr = a.row_ptr();
  impl_->pattern_idx = a.col_idx();
  impl_->analyzed = true;
  impl_->factorized = false;
}

void Factorization::factorize(const CsrMatrix& a) {
  if (!analyzed() || a.row_ptr() != impl_->pattern_ptr || a.col_idx() != impl_->pattern_idx) analyze(a);
  impl_->factorized = false;
  // Zero rows and columns are reported directly; Eigen only names a column.
  std::vector<bool> col_nonzero(a.cols(), false);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    bool row_nonzero = false;
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      const double v = a.values()[k];
      if (!std::isfinite(v))
        throw Error(ErrorCode::kSingular, "non-finite matrix entry in row " + std::to_string(i));
      if (v != 0.0) {
        row_nonzero = true;
        col_nonzero[static_cast<std::size_t>(a.col_idx()[k])] = true;
      }
    }
    if (!row_nonzero) throw Error(ErrorCode::kSingular, "matrix is singular: row " + std::to_string(i) + " is zero");
  }
  for (std::size_t j = 0; j < a.cols(); ++j)
    if (!col_nonzero[j]) throw Error(ErrorCode::kSingular, "matrix is singular: column " + std::to_string(j) + " is zero");
  impl_->lu.factorize(Impl::convert(a));
  if (impl_->lu.info() != Eigen::Success)
    throw Error(ErrorCode::kSingular, "sparse LU failed: " + impl_->lu.lastErrorMessage());
  impl_->factorized = true;
}

Vec Factorization::solve(std::span<const double> b) const {
  if (!factorized()) throw Error(ErrorCode::kInternal, "solve called before factorize");
  if (b.size() != n_) throw Error(ErrorCode::kInvalidArgument, "solve: right-hand side has wrong length");
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
  Eigen::VectorXd x = impl_->lu.solve(rhs);
  return Vec(x.data(), x.data() + x.size());
}

Factorization factorize(const CsrMatrix& a) {
  Factorization f;
  f.analyze(a);
  f.factorize(a);
  return f;
}

// ---------------------------------------------------------------------------

CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int maxit, Preconditioner precond,
                  std::span<const double> x0) {
  const auto n = a.rows();
  if (a.cols() != n || b.size() != n) throw Error(ErrorCode::kInvalidArgument, "cg_solve: shape mismatch");
  CgResult res;
  res.x = x0.empty() ? Vec(n, 0.0) : Vec(x0.begin(), x0.end());
  Vec inv_diag(n, 1.0);
  if (precond == Preconditioner::kJacobi) {
    const Vec d = a.diagonal_values();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d[i] > 0.0)) throw Error(ErrorCode::kBreakdown, "Jacobi preconditioner needs a positive diagonal");
      inv_diag[i] = 1.0 / d[i];
    }
  }
  Vec r(b.begin(), b.end());
  spmv_add(a, res.x, -1.0, r);
  const double bnorm = norm2(b);
  const double scale = bnorm > 0.0 ? bnorm : 1.0;
  double rnorm = norm2(r);
  if (rnorm / scale <= tol) {
    res.relative_residual = rnorm / scale;
    return res;
  }
  Vec z(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= maxit; ++it) {
    std::fill(ap.begin(), ap.end(), 0.0);
    spmv_add(a, p, 1.0, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw Error(ErrorCode::kBreakdown, "CG breakdown at iteration " + std::to_string(it) + ": p^T A p <= 0");
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    rnorm = norm2(r);
    res.iterations = it;
    res.relative_residual = rnorm / scale;
    if (res.relative_residual <= tol) return res;
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw Error(ErrorCode::kNotConverged, "CG did not converge in " + std::to_string(maxit) +
                                            " iterations (relative residual " + std::to_string(res.relative_residual) + ")");
}

// ---------------------------------------------------------------------------

namespace {

Vec start_vector(std::size_t n) {
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.25 * std::sin(1.0 + 0.7 * static_cast<double>(i));
  const double s = norm2(x);
  for (auto& v : x) v /= s;
  return x;
}

template <class Apply>
double power_iterate(std::size_t n, Apply&& apply, const EigenOptions& opt, int& iterations, bool& converged, Vec& x) {
  x = start_vector(n);
  double lambda = 0.0;
  converged = false;
  for (iterations = 1; iterations <= opt.max_iterations; ++iterations) {
    Vec y = apply(x);
    const double next = dot(x, y);
    const double ny = norm2(y);
    if (!(ny > 0.0)) {
      lambda = 0.0;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
    if (iterations > 1 && std::abs(next - lambda) <= opt.rel_change_tol * std::abs(next)) {
      lambda = next;
      converged = true;
      break;
    }
    lambda = next;
  }
  iterations = std::min(iterations, opt.max_iterations);
  return lambda;
}

double eigen_residual(const CsrMatrix& a, const Vec& x, double lambda) {
  Vec r = spmv(a, x);
  for (std::size_t i = 0; i < x.size(); ++i) r[i] -= lambda * x[i];
  return norm2(r) / std::max(std::abs(lambda), 1e-300);
}

}  // namespace

EigenEstimate extreme_eigenvalue_estimates(const CsrMatrix& a, const Factorization* factorization,
                                           const EigenOptions& options) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw Error(ErrorCode::kInvalidArgument, "eigenvalue estimates need a nonempty square matrix");
  Factorization local;
  if (factorization == nullptr) {
    local = factorize(a);
    factorization = &local;
  }
  const auto n = a.rows();
  EigenEstimate est;
  bool conv_max = false, conv_min = false;
  Vec xmax, xmin;
  est.lambda_max = power_iterate(n, [&](const Vec& x) { return spmv(a, x); }, options, est.iterations_max, conv_max, xmax);
  const double mu = power_iterate(n, [&](const Vec& x) { return factorization->solve(x); }, options,
                                  est.iterations_min, conv_min, xmin);
  est.lambda_min = mu > 0.0 ? 1.0 / mu : 0.0;
  est.converged = conv_max && conv_min;
  est.residual = std::max(eigen_residual(a, xmax, est.lambda_max), eigen_residual(a, xmin, est.lambda_min));
  return est;
}

std::string to_matrix_market(const CsrMatrix& a) {
  std::ostringstream out;
  out.precision(17);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << " " << a.cols() << " " << a.nnz() << "\n";
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
      out << i + 1 << " " << a.col_idx()[k] + 1 << " " << a.values()[k] << "\n";
  return out.str();
}

}  // namespace sgd
