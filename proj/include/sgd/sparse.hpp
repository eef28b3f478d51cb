#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sgd {

using Vec = std::vector<double>;

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  double value;
};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr, std::vector<std::int32_t> col_idx,
            Vec values);

  /// Sums duplicates in insertion order, so the result is independent of
  /// anything but the triplet sequence. Explicit zeros are kept.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::span<const Triplet> triplets);
  static CsrMatrix identity(std::size_t n);
  static CsrMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::int32_t>& col_idx() const noexcept { return col_idx_; }
  const Vec& values() const noexcept { return values_; }
  Vec& values() noexcept { return values_; }

  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  /// Pointer to a stored entry or nullptr.
  double* find(std::size_t i, std::size_t j);

  CsrMatrix transpose() const;
  Vec diagonal_values() const;
  /// Row-major dense copy.
  Vec to_dense() const;
  /// Rows/cols listed in `keep` (ascending), renumbered consecutively.
  CsrMatrix submatrix(std::span<const std::int32_t> keep) const;
  double max_abs() const;
  bool is_symmetric(double rel_tol) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::int32_t> col_idx_;
  Vec values_;
};

/// y = A x. Throws on shape mismatch.
Vec spmv(const CsrMatrix& a, std::span<const double> x);
/// y += s * A x.
void spmv_add(const CsrMatrix& a, std::span<const double> x, double s, std::span<double> y);
/// x^T A x.
double quadratic_form(const CsrMatrix& a, std::span<const double> x);
/// x^T A y.
double bilinear_form(const CsrMatrix& a, std::span<const double> x, std::span<const double> y);

/// sum_k coeffs[k] * mats[k] on the union sparsity pattern.
CsrMatrix linear_combination(std::span<const double> coeffs, std::span<const CsrMatrix* const> mats);
CsrMatrix add_scaled(double a, const CsrMatrix& x, double b, const CsrMatrix& y);

/// Block-diagonal matrix repeating `block` `copies` times.
CsrMatrix block_diagonal(const CsrMatrix& block, int copies);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Sparse LU with a deterministic fill-reducing column ordering.
///
/// The symbolic phase depends only on the sparsity pattern and can be reused
/// for any matrix sharing it; the numeric phase must be rerun when values change.
class Factorization {
 public:
  Factorization();
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  Factorization(const Factorization&) = delete;
  Factorization& operator=(const Factorization&) = delete;

  void analyze(const CsrMatrix& a);
  /// Throws Error(kSingular) naming the offending row or column.
  void factorize(const CsrMatrix& a);
  bool analyzed() const noexcept;
  bool factorized() const noexcept;
  std::size_t size() const noexcept { return n_; }

  Vec solve(std::span<const double> b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t n_ = 0;
};

/// Analyze + factorize in one call.
Factorization factorize(const CsrMatrix& a);

enum class Preconditioner { kNone, kJacobi };

struct CgResult {
  Vec x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for SPD matrices. Throws
/// Error(kBreakdown) when p^T A p <= 0 and Error(kNotConverged) after maxit.
CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int maxit,
                  Preconditioner precond = Preconditioner::kNone, std::span<const double> x0 = {});

struct EigenEstimate {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  int iterations_max = 0;
  int iterations_min = 0;
  bool converged = false;
  /// Largest relative eigen-residual |A x - lambda x| / |lambda| of the two estimates.
  double residual = 0.0;
};

struct EigenOptions {
  double rel_change_tol = 1e-10;
  int max_iterations = 100000;
};

/// Extreme eigenvalues of an SPD matrix: power iteration on A for the largest,
/// inverse iteration through a factorization of A for the smallest. A missing
/// factorization is computed internally. Non-convergence is reported through
/// `converged`, with the best estimates still filled in.
EigenEstimate extreme_eigenvalue_estimates(const CsrMatrix& a, const Factorization* factorization = nullptr,
                                           const EigenOptions& options = {});

/// Writes "%%MatrixMarket matrix coordinate real general" with 1-based indices.
std::string to_matrix_market(const CsrMatrix& a);

}  // namespace sgd
