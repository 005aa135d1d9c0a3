#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace bta {

using complex = std::complex<double>;

/// Row-major dense complex matrix; the operand of every block kernel.
///
/// Zero-sized blocks are allowed so that the arrow strips of a plain
/// block-tridiagonal matrix (arrow size 0) need no special casing.
class DenseBlock {
 public:
  DenseBlock() = default;
  DenseBlock(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}
  DenseBlock(std::size_t rows, std::size_t cols, std::vector<complex> data);
  DenseBlock(std::initializer_list<std::initializer_list<complex>> rows);

  static DenseBlock identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const complex& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<complex> data() noexcept { return data_; }
  std::span<const complex> data() const noexcept { return data_; }

  DenseBlock adjoint() const;
  double frobenius_norm() const;
  bool all_finite() const;
  void set_zero();

  DenseBlock& operator+=(const DenseBlock& other);
  DenseBlock& operator-=(const DenseBlock& other);
  DenseBlock& operator*=(complex s);

  friend DenseBlock operator+(DenseBlock lhs, const DenseBlock& rhs) { return lhs += rhs; }
  friend DenseBlock operator-(DenseBlock lhs, const DenseBlock& rhs) { return lhs -= rhs; }

  /// Exact (bitwise on values) comparison.
  friend bool operator==(const DenseBlock& lhs, const DenseBlock& rhs) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<complex> data_;
};

/// Frobenius norm of `lhs - rhs`; shapes must agree.
double frobenius_distance(const DenseBlock& lhs, const DenseBlock& rhs);

// ---------------------------------------------------------------------------
// Operation accounting.

/// Product shape class: each of (m, k, n) of an (m x k)(k x n) product is
/// labelled `a` or `b` against the declared arrow / block sizes.
enum class ShapeClass : std::uint8_t { bbb, abb, aab, bba, baa, aba, bab, aaa, other };

inline constexpr std::size_t kShapeClassCount = 9;

std::string_view shape_class_name(ShapeClass c) noexcept;

class OpCounter {
 public:
  OpCounter() = default;
  OpCounter(std::size_t block_size, std::size_t arrow_size)
      : block_size_(block_size), arrow_size_(arrow_size) {}

  ShapeClass classify(std::size_t m, std::size_t k, std::size_t n) const noexcept;

  void record_gemm(std::size_t m, std::size_t k, std::size_t n) noexcept {
    ++gemm_[static_cast<std::size_t>(classify(m, k, n))];
  }
  void record_lu() noexcept { ++lu_; }
  void record_trsm() noexcept { ++trsm_; }
  void record_inverse() noexcept { ++inv_; }

  std::uint64_t gemm(ShapeClass c) const noexcept { return gemm_[static_cast<std::size_t>(c)]; }
  std::uint64_t gemm_total() const noexcept;
  std::uint64_t lu_count() const noexcept { return lu_; }
  std::uint64_t trsm_count() const noexcept { return trsm_; }
  std::uint64_t inv_count() const noexcept { return inv_; }

  std::size_t block_size() const noexcept { return block_size_; }
  std::size_t arrow_size() const noexcept { return arrow_size_; }

  OpCounter& operator+=(const OpCounter& other) noexcept;
  /// Component-wise difference; used to isolate per-step costs.
  friend OpCounter operator-(OpCounter lhs, const OpCounter& rhs) noexcept;

 private:
  std::size_t block_size_ = 0;
  std::size_t arrow_size_ = 0;
  std::array<std::uint64_t, kShapeClassCount> gemm_{};
  std::uint64_t lu_ = 0;
  std::uint64_t trsm_ = 0;
  std::uint64_t inv_ = 0;
};

// ---------------------------------------------------------------------------
// Kernels. `counter` may be null.

enum class Op : std::uint8_t { none, adjoint };
enum class Side : std::uint8_t { left, right };
enum class UpLo : std::uint8_t { lower, upper };
enum class Diag : std::uint8_t { non_unit, unit };

/// c <- beta * c + alpha * op(a) * op(b)
void multiply_acc(DenseBlock& c, complex alpha, const DenseBlock& a, Op op_a,
                  const DenseBlock& b, Op op_b, complex beta, OpCounter* counter);

/// Returns op(a) * op(b).
DenseBlock multiply(const DenseBlock& a, const DenseBlock& b, OpCounter* counter,
                    Op op_a = Op::none, Op op_b = Op::none);

/// Packed LU with partial (row) pivoting: perm * A = L * U.
struct LuFactors {
  DenseBlock packed;              ///< strict lower part = L (unit diagonal implied), upper = U
  std::vector<std::size_t> perm;  ///< row i of perm*A is row perm[i] of A

  std::size_t order() const noexcept { return packed.rows(); }
  DenseBlock lower() const;
  DenseBlock upper() const;
  DenseBlock permutation_matrix() const;
  /// Applies the row permutation: returns perm * m.
  DenseBlock permute_rows(const DenseBlock& m) const;
};

/// Factorizes `a` in place (pass an rvalue to avoid the copy).
LuFactors block_lu(DenseBlock a, OpCounter* counter);

DenseBlock triangular_solve(const DenseBlock& t, Side side, UpLo uplo, Diag diag,
                            const DenseBlock& b, OpCounter* counter);

/// In-place variant of `triangular_solve`; `b` is overwritten with the solution.
void triangular_solve_inplace(const DenseBlock& t, Side side, UpLo uplo, Diag diag,
                              DenseBlock& b, OpCounter* counter);

/// Explicit inverse through LU and two triangular solves against the identity.
DenseBlock block_inverse(const DenseBlock& a, OpCounter* counter);

/// Solves A x = rhs in place for a factorized A (one or more columns).
void lu_solve_inplace(const LuFactors& lu, DenseBlock& rhs, OpCounter* counter);

/// Solves A^H x = rhs in place for a factorized A.
void lu_solve_adjoint_inplace(const LuFactors& lu, DenseBlock& rhs, OpCounter* counter);

}  // namespace bta
