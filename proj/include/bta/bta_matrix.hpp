#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "bta/dense_block.hpp"

namespace bta {

/// Tiling parameters: n diagonal blocks of size b plus an arrow tip of size a.
struct BtaShape {
  std::size_t n = 0;
  std::size_t b = 0;
  std::size_t a = 0;

  std::size_t order() const noexcept { return n * b + a; }
  bool has_arrow() const noexcept { return a > 0; }
  friend bool operator==(const BtaShape&, const BtaShape&) = default;
};

/// Block-tridiagonal matrix with arrowhead. With `a == 0` the arrow
/// containers are empty and the matrix is plain block-tridiagonal.
///
/// Block naming follows the global position of each block:
///   diag[i]      = A(i, i)        b x b, i in [0, n)
///   lower[i]     = A(i + 1, i)    b x b, i in [0, n - 1)
///   upper[i]     = A(i, i + 1)    b x b, i in [0, n - 1)
///   arrow_row[i] = A(t, i)        a x b
///   arrow_col[i] = A(i, t)        b x a
///   tip          = A(t, t)        a x a
struct BtaMatrix {
  BtaMatrix() = default;
  explicit BtaMatrix(BtaShape shape);

  BtaShape shape() const noexcept { return shape_; }
  std::size_t n() const noexcept { return shape_.n; }
  std::size_t b() const noexcept { return shape_.b; }
  std::size_t a() const noexcept { return shape_.a; }
  std::size_t order() const noexcept { return shape_.order(); }

  /// Throws DimensionError when a block does not match the declared shape.
  void check_consistent() const;
  bool all_finite() const;

  static BtaMatrix identity(BtaShape shape);

  friend bool operator==(const BtaMatrix&, const BtaMatrix&) = default;

  std::vector<DenseBlock> diag;
  std::vector<DenseBlock> lower;
  std::vector<DenseBlock> upper;
  std::vector<DenseBlock> arrow_row;
  std::vector<DenseBlock> arrow_col;
  DenseBlock tip;

 private:
  BtaShape shape_;
};

enum class SolveMode : std::uint8_t { si, si_sq };

/// Pattern-restricted entries of A^-1 and, in quadratic mode, of A^-1 B A^-H.
struct SelectedSolution {
  BtaMatrix x_a;
  std::optional<BtaMatrix> x_b;
  SolveMode mode = SolveMode::si;
};

// ---------------------------------------------------------------------------

inline constexpr double kDefaultDominance = 1.5;

/// Random BTA matrix whose every global row is strictly diagonally dominant.
///
/// Entries are drawn from a seeded mt19937_64 stream in block order diag,
/// lower, upper, arrow_row, arrow_col, tip (row-major, real then imaginary),
/// each part uniform in [-1, 1). Then every diagonal entry receives
/// `dominance * (sum of |off-diagonal| in its global row + 1)`.
BtaMatrix generate_dd_bta(std::size_t n, std::size_t b, std::size_t a, std::uint64_t seed,
                          double dominance = kDefaultDominance);

/// Plain block-tridiagonal counterpart of `generate_dd_bta`.
BtaMatrix generate_dd_bt(std::size_t n, std::size_t b, std::uint64_t seed,
                         double dominance = kDefaultDominance);

/// Pattern-filled random matrix without dominance shift (right-hand sides).
BtaMatrix generate_random_bta(std::size_t n, std::size_t b, std::size_t a, std::uint64_t seed);

/// Right-hand side paired with `generate_dd_bta(n, b, a, seed)`: the random
/// pattern drawn from stream `seed + 1`, optionally made pattern-Hermitian.
BtaMatrix generate_rhs(std::size_t n, std::size_t b, std::size_t a, std::uint64_t seed,
                       bool hermitian);

/// Dense N x N expansion; off-pattern entries are exactly zero.
DenseBlock to_dense(const BtaMatrix& m);

/// Copies the in-pattern entries of a dense N x N matrix.
BtaMatrix mask_to_pattern(const DenseBlock& dense, BtaShape shape);

/// (M + M^H) / 2 restricted to the pattern.
BtaMatrix hermitianize(const BtaMatrix& m);

/// True when every block of the pattern satisfies the Hermitian pairing
/// to `rel_tol` (relative to the block norm).
bool is_pattern_hermitian(const BtaMatrix& m, double rel_tol);

/// Which diagonal block (or the tip, returned as `n`) a global index lies in.
std::size_t block_of(BtaShape shape, std::size_t global);

/// Whether a global entry (row, col) lies inside the BTA pattern.
bool in_pattern(BtaShape shape, std::size_t row, std::size_t col);

}  // namespace bta
