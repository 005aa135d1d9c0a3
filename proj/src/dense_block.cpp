#include "bta/dense_block.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "bta/errors.hpp"

namespace bta {

namespace {

using RowMatrix = Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMut = Eigen::Map<RowMatrix>;
using MapConst = Eigen::Map<const RowMatrix>;

MapMut as_eigen(DenseBlock& m) {
  return MapMut(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                static_cast<Eigen::Index>(m.cols()));
}

MapConst as_eigen(const DenseBlock& m) {
  return MapConst(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

std::string shape_str(const DenseBlock& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

std::size_t op_rows(const DenseBlock& m, Op op) { return op == Op::none ? m.rows() : m.cols(); }
std::size_t op_cols(const DenseBlock& m, Op op) { return op == Op::none ? m.cols() : m.rows(); }

std::size_t first_zero_diagonal(const DenseBlock& t) {
  for (std::size_t i = 0; i < t.rows(); ++i) {
    if (t(i, i) == complex{0.0, 0.0}) return i;
  }
  return SingularError::npos;
}

}  // namespace

DenseBlock::DenseBlock(std::size_t rows, std::size_t cols, std::vector<complex> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("DenseBlock: payload of " + std::to_string(data_.size()) +
                         " entries does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

DenseBlock::DenseBlock(std::initializer_list<std::initializer_list<complex>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw DimensionError("DenseBlock: ragged initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

DenseBlock DenseBlock::identity(std::size_t n) {
  DenseBlock id(n, n);
  for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
  return id;
}

DenseBlock DenseBlock::adjoint() const {
  DenseBlock out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  }
  return out;
}

double DenseBlock::frobenius_norm() const {
  double sum = 0.0;
  for (const auto& v : data_) sum += std::norm(v);
  return std::sqrt(sum);
}

bool DenseBlock::all_finite() const {
  for (const auto& v : data_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

void DenseBlock::set_zero() { std::fill(data_.begin(), data_.end(), complex{}); }

DenseBlock& DenseBlock::operator+=(const DenseBlock& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw DimensionError("add: " + shape_str(*this) + " vs " + shape_str(other));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseBlock& DenseBlock::operator-=(const DenseBlock& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw DimensionError("subtract: " + shape_str(*this) + " vs " + shape_str(other));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseBlock& DenseBlock::operator*=(complex s) {
  for (auto& v : data_) v *= s;
  return *this;
}

double frobenius_distance(const DenseBlock& lhs, const DenseBlock& rhs) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw DimensionError("distance: " + shape_str(lhs) + " vs " + shape_str(rhs));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) sum += std::norm(lhs.data()[i] - rhs.data()[i]);
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------

std::string_view shape_class_name(ShapeClass c) noexcept {
  switch (c) {
    case ShapeClass::bbb: return "bbb";
    case ShapeClass::abb: return "abb";
    case ShapeClass::aab: return "aab";
    case ShapeClass::bba: return "bba";
    case ShapeClass::baa: return "baa";
    case ShapeClass::aba: return "aba";
    case ShapeClass::bab: return "bab";
    case ShapeClass::aaa: return "aaa";
    case ShapeClass::other: return "other";
  }
  return "other";
}

ShapeClass OpCounter::classify(std::size_t m, std::size_t k, std::size_t n) const noexcept {
  // 0 = b, 1 = a, 2 = neither. A size equal to both labels counts as b.
  auto label = [this](std::size_t d) {
    if (d == block_size_) return 0;
    if (d == arrow_size_) return 1;
    return 2;
  };
  const int lm = label(m), lk = label(k), ln = label(n);
  if (lm == 2 || lk == 2 || ln == 2) return ShapeClass::other;
  const int code = lm * 4 + lk * 2 + ln;
  switch (code) {
    case 0: return ShapeClass::bbb;
    case 4: return ShapeClass::abb;
    case 6: return ShapeClass::aab;
    case 1: return ShapeClass::bba;
    case 3: return ShapeClass::baa;
    case 5: return ShapeClass::aba;
    case 2: return ShapeClass::bab;
    default: return ShapeClass::aaa;
  }
}

std::uint64_t OpCounter::gemm_total() const noexcept {
  return std::accumulate(gemm_.begin(), gemm_.end(), std::uint64_t{0});
}

OpCounter& OpCounter::operator+=(const OpCounter& other) noexcept {
  for (std::size_t i = 0; i < kShapeClassCount; ++i) gemm_[i] += other.gemm_[i];
  lu_ += other.lu_;
  trsm_ += other.trsm_;
  inv_ += other.inv_;
  return *this;
}

OpCounter operator-(OpCounter lhs, const OpCounter& rhs) noexcept {
  for (std::size_t i = 0; i < kShapeClassCount; ++i) lhs.gemm_[i] -= rhs.gemm_[i];
  lhs.lu_ -= rhs.lu_;
  lhs.trsm_ -= rhs.trsm_;
  lhs.inv_ -= rhs.inv_;
  return lhs;
}

// ---------------------------------------------------------------------------

void multiply_acc(DenseBlock& c, complex alpha, const DenseBlock& a, Op op_a,
                  const DenseBlock& b, Op op_b, complex beta, OpCounter* counter) {
  const std::size_t m = op_rows(a, op_a);
  const std::size_t k = op_cols(a, op_a);
  const std::size_t n = op_cols(b, op_b);
  if (op_rows(b, op_b) != k || c.rows() != m || c.cols() != n) {
    throw DimensionError("multiply: op(A) " + std::to_string(m) + "x" + std::to_string(k) +
                         " times op(B) " + std::to_string(op_rows(b, op_b)) + "x" +
                         std::to_string(n) + " into C " + shape_str(c));
  }
  if (counter != nullptr) counter->record_gemm(m, k, n);

  auto cm = as_eigen(c);
  if (beta == complex{0.0, 0.0}) {
    cm.setZero();
  } else if (beta != complex{1.0, 0.0}) {
    cm *= beta;
  }
  if (alpha == complex{0.0, 0.0} || m == 0 || n == 0 || k == 0) return;

  const auto am = as_eigen(a);
  const auto bm = as_eigen(b);
  if (op_a == Op::none && op_b == Op::none) {
    cm.noalias() += alpha * (am * bm);
  } else if (op_a == Op::none) {
    cm.noalias() += alpha * (am * bm.adjoint());
  } else if (op_b == Op::none) {
    cm.noalias() += alpha * (am.adjoint() * bm);
  } else {
    cm.noalias() += alpha * (am.adjoint() * bm.adjoint());
  }
}

DenseBlock multiply(const DenseBlock& a, const DenseBlock& b, OpCounter* counter, Op op_a,
                    Op op_b) {
  DenseBlock c(op_rows(a, op_a), op_cols(b, op_b));
  multiply_acc(c, 1.0, a, op_a, b, op_b, 0.0, counter);
  return c;
}

// ---------------------------------------------------------------------------

DenseBlock LuFactors::lower() const {
  const std::size_t n = order();
  DenseBlock l(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < r; ++c) l(r, c) = packed(r, c);
    l(r, r) = 1.0;
  }
  return l;
}

DenseBlock LuFactors::upper() const {
  const std::size_t n = order();
  DenseBlock u(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r; c < n; ++c) u(r, c) = packed(r, c);
  }
  return u;
}

DenseBlock LuFactors::permutation_matrix() const {
  const std::size_t n = order();
  DenseBlock p(n, n);
  for (std::size_t i = 0; i < n; ++i) p(i, perm[i]) = 1.0;
  return p;
}

DenseBlock LuFactors::permute_rows(const DenseBlock& m) const {
  if (m.rows() != order()) {
    throw DimensionError("permute_rows: " + shape_str(m) + " against order " +
                         std::to_string(order()));
  }
  DenseBlock out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto src = m.data().subspan(perm[i] * m.cols(), m.cols());
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * m.cols()));
  }
  return out;
}

LuFactors block_lu(DenseBlock a, OpCounter* counter) {
  if (!a.is_square()) throw DimensionError("block_lu: non-square operand " + shape_str(a));
  if (counter != nullptr) counter->record_lu();
  const auto n = static_cast<Eigen::Index>(a.rows());

  LuFactors out;
  out.perm.resize(a.rows());
  if (n == 0) {
    out.packed = std::move(a);
    return out;
  }
  {
    MapMut storage = as_eigen(a);
    Eigen::Ref<RowMatrix> ref(storage);
    Eigen::PartialPivLU<Eigen::Ref<RowMatrix>> lu(ref);
    // Eigen maps original row i to row indices()[i] of P*A.
    const auto& idx = lu.permutationP().indices();
    for (Eigen::Index i = 0; i < n; ++i) out.perm[static_cast<std::size_t>(idx[i])] = static_cast<std::size_t>(i);
  }
  const std::size_t zero = first_zero_diagonal(a);
  if (zero != SingularError::npos) {
    throw SingularError(zero, SingularError::npos,
                        "block_lu: exactly singular pivot at index " + std::to_string(zero));
  }
  out.packed = std::move(a);
  return out;
}

void triangular_solve_inplace(const DenseBlock& t, Side side, UpLo uplo, Diag diag,
                              DenseBlock& b, OpCounter* counter) {
  if (!t.is_square()) throw DimensionError("triangular_solve: non-square " + shape_str(t));
  const std::size_t need = side == Side::left ? b.rows() : b.cols();
  if (need != t.rows()) {
    throw DimensionError("triangular_solve: T " + shape_str(t) + " incompatible with B " +
                         shape_str(b));
  }
  if (diag == Diag::non_unit) {
    const std::size_t zero = first_zero_diagonal(t);
    if (zero != SingularError::npos) {
      throw SingularError(zero, SingularError::npos,
                          "triangular_solve: zero diagonal at index " + std::to_string(zero));
    }
  }
  if (counter != nullptr) counter->record_trsm();
  if (b.empty()) return;

  const auto tm = as_eigen(t);
  auto bm = as_eigen(b);
  const bool left = side == Side::left;
  if (uplo == UpLo::lower) {
    if (diag == Diag::unit) {
      left ? tm.triangularView<Eigen::UnitLower>().solveInPlace<Eigen::OnTheLeft>(bm)
           : tm.triangularView<Eigen::UnitLower>().solveInPlace<Eigen::OnTheRight>(bm);
    } else {
      left ? tm.triangularView<Eigen::Lower>().solveInPlace<Eigen::OnTheLeft>(bm)
           : tm.triangularView<Eigen::Lower>().solveInPlace<Eigen::OnTheRight>(bm);
    }
  } else {
    if (diag == Diag::unit) {
      left ? tm.triangularView<Eigen::UnitUpper>().solveInPlace<Eigen::OnTheLeft>(bm)
           : tm.triangularView<Eigen::UnitUpper>().solveInPlace<Eigen::OnTheRight>(bm);
    } else {
      left ? tm.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheLeft>(bm)
           : tm.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(bm);
    }
  }
}

DenseBlock triangular_solve(const DenseBlock& t, Side side, UpLo uplo, Diag diag,
                            const DenseBlock& b, OpCounter* counter) {
  DenseBlock x = b;
  triangular_solve_inplace(t, side, uplo, diag, x, counter);
  return x;
}

void lu_solve_inplace(const LuFactors& lu, DenseBlock& rhs, OpCounter* counter) {
  rhs = lu.permute_rows(rhs);
  triangular_solve_inplace(lu.packed, Side::left, UpLo::lower, Diag::unit, rhs, counter);
  triangular_solve_inplace(lu.packed, Side::left, UpLo::upper, Diag::non_unit, rhs, counter);
}

void lu_solve_adjoint_inplace(const LuFactors& lu, DenseBlock& rhs, OpCounter* counter) {
  // A = P^T L U, so A^H x = r  <=>  U^H L^H (P x) = r.
  if (rhs.rows() != lu.order()) {
    throw DimensionError("lu_solve_adjoint: rhs " + shape_str(rhs) + " against order " +
                         std::to_string(lu.order()));
  }
  if (counter != nullptr) {
    counter->record_trsm();
    counter->record_trsm();
  }
  if (rhs.empty()) return;
  const auto f = as_eigen(lu.packed);
  auto r = as_eigen(rhs);
  f.triangularView<Eigen::Upper>().adjoint().solveInPlace(r);
  f.triangularView<Eigen::UnitLower>().adjoint().solveInPlace(r);
  DenseBlock out(rhs.rows(), rhs.cols());
  const std::size_t w = rhs.cols();
  for (std::size_t i = 0; i < rhs.rows(); ++i) {
    const auto src = rhs.data().subspan(i * w, w);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(lu.perm[i] * w));
  }
  rhs = std::move(out);
}

DenseBlock block_inverse(const DenseBlock& a, OpCounter* counter) {
  if (!a.is_square()) throw DimensionError("block_inverse: non-square operand " + shape_str(a));
  if (counter != nullptr) counter->record_inverse();
  const LuFactors lu = block_lu(a, counter);
  DenseBlock x = lu.permute_rows(DenseBlock::identity(a.rows()));
  triangular_solve_inplace(lu.packed, Side::left, UpLo::lower, Diag::unit, x, counter);
  triangular_solve_inplace(lu.packed, Side::left, UpLo::upper, Diag::non_unit, x, counter);
  return x;
}

}  // namespace bta
