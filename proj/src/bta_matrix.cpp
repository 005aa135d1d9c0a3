#include "bta/bta_matrix.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bta/errors.hpp"

namespace bta {

namespace {

void check_block(const DenseBlock& blk, std::size_t rows, std::size_t cols, const char* what,
                 std::size_t index) {
  if (blk.rows() != rows || blk.cols() != cols) {
    throw DimensionError(std::string("BtaMatrix: ") + what + "[" + std::to_string(index) +
                         "] is " + std::to_string(blk.rows()) + "x" + std::to_string(blk.cols()) +
                         ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

// Uniform in [-1, 1) from the top 53 bits; identical on every platform.
double unit_symmetric(std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

void fill_random(DenseBlock& blk, std::mt19937_64& rng) {
  for (auto& v : blk.data()) {
    const double re = unit_symmetric(rng);
    const double im = unit_symmetric(rng);
    v = complex(re, im);
  }
}

double row_abs_sum(const DenseBlock& blk, std::size_t r) {
  double s = 0.0;
  for (std::size_t c = 0; c < blk.cols(); ++c) s += std::abs(blk(r, c));
  return s;
}

void check_generator_shape(std::size_t n, std::size_t b) {
  if (n < 1) throw ParameterError("generator: n must be >= 1");
  if (b < 1) throw ParameterError("generator: b must be >= 1");
}

}  // namespace

BtaMatrix::BtaMatrix(BtaShape shape) : shape_(shape) {
  const std::size_t n = shape.n, b = shape.b, a = shape.a;
  diag.assign(n, DenseBlock(b, b));
  if (n > 1) {
    lower.assign(n - 1, DenseBlock(b, b));
    upper.assign(n - 1, DenseBlock(b, b));
  }
  if (a > 0) {
    arrow_row.assign(n, DenseBlock(a, b));
    arrow_col.assign(n, DenseBlock(b, a));
    tip = DenseBlock(a, a);
  }
}

void BtaMatrix::check_consistent() const {
  const std::size_t n = shape_.n, b = shape_.b, a = shape_.a;
  const std::size_t off = n > 0 ? n - 1 : 0;
  if (diag.size() != n || lower.size() != off || upper.size() != off) {
    throw DimensionError("BtaMatrix: block counts do not match n = " + std::to_string(n));
  }
  const std::size_t arrows = a > 0 ? n : 0;
  if (arrow_row.size() != arrows || arrow_col.size() != arrows) {
    throw DimensionError("BtaMatrix: arrow strip count does not match (n, a)");
  }
  for (std::size_t i = 0; i < n; ++i) check_block(diag[i], b, b, "diag", i);
  for (std::size_t i = 0; i < off; ++i) {
    check_block(lower[i], b, b, "lower", i);
    check_block(upper[i], b, b, "upper", i);
  }
  for (std::size_t i = 0; i < arrows; ++i) {
    check_block(arrow_row[i], a, b, "arrow_row", i);
    check_block(arrow_col[i], b, a, "arrow_col", i);
  }
  check_block(tip, a, a, "tip", 0);
}

bool BtaMatrix::all_finite() const {
  auto ok = [](const std::vector<DenseBlock>& v) {
    for (const auto& blk : v) {
      if (!blk.all_finite()) return false;
    }
    return true;
  };
  return ok(diag) && ok(lower) && ok(upper) && ok(arrow_row) && ok(arrow_col) && tip.all_finite();
}

BtaMatrix BtaMatrix::identity(BtaShape shape) {
  BtaMatrix m(shape);
  for (auto& d : m.diag) d = DenseBlock::identity(shape.b);
  if (shape.a > 0) m.tip = DenseBlock::identity(shape.a);
  return m;
}

// ---------------------------------------------------------------------------

BtaMatrix generate_random_bta(std::size_t n, std::size_t b, std::size_t a, std::uint64_t seed) {
  check_generator_shape(n, b);
  BtaMatrix m(BtaShape{n, b, a});
  std::mt19937_64 rng(seed);
  for (auto& blk : m.diag) fill_random(blk, rng);
  for (auto& blk : m.lower) fill_random(blk, rng);
  for (auto& blk : m.upper) fill_random(blk, rng);
  for (auto& blk : m.arrow_row) fill_random(blk, rng);
  for (auto& blk : m.arrow_col) fill_random(blk, rng);
  fill_random(m.tip, rng);
  return m;
}

BtaMatrix generate_dd_bta(std::size_t n, std::size_t b, std::size_t a, std::uint64_t seed,
                          double dominance) {
  if (!(dominance >= 1.0)) throw ParameterError("generator: dominance must be >= 1");
  BtaMatrix m = generate_random_bta(n, b, a, seed);

  // Off-diagonal row sums first, then shift; sums never see shifted values.
  std::vector<double> sums(m.order(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < b; ++r) {
      double s = row_abs_sum(m.diag[i], r) - std::abs(m.diag[i](r, r));
      if (i > 0) s += row_abs_sum(m.lower[i - 1], r);
      if (i + 1 < n) s += row_abs_sum(m.upper[i], r);
      if (a > 0) s += row_abs_sum(m.arrow_col[i], r);
      sums[i * b + r] = s;
    }
  }
  for (std::size_t r = 0; r < a; ++r) {
    double s = row_abs_sum(m.tip, r) - std::abs(m.tip(r, r));
    for (std::size_t i = 0; i < n; ++i) s += row_abs_sum(m.arrow_row[i], r);
    sums[n * b + r] = s;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < b; ++r) m.diag[i](r, r) += dominance * (sums[i * b + r] + 1.0);
  }
  for (std::size_t r = 0; r < a; ++r) m.tip(r, r) += dominance * (sums[n * b + r] + 1.0);
  return m;
}

BtaMatrix generate_dd_bt(std::size_t n, std::size_t b, std::uint64_t seed, double dominance) {
  return generate_dd_bta(n, b, 0, seed, dominance);
}

BtaMatrix generate_rhs(std::size_t n, std::size_t b, std::size_t a, std::uint64_t seed,
                       bool hermitian) {
  BtaMatrix m = generate_random_bta(n, b, a, seed + 1);
  return hermitian ? hermitianize(m) : m;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Visit>
void for_each_block(BtaShape s, Visit&& visit) {
  // visit(kind, index, row_offset, col_offset)
  const std::size_t t = s.n * s.b;
  for (std::size_t i = 0; i < s.n; ++i) visit(0, i, i * s.b, i * s.b);
  for (std::size_t i = 0; i + 1 < s.n; ++i) {
    visit(1, i, (i + 1) * s.b, i * s.b);
    visit(2, i, i * s.b, (i + 1) * s.b);
  }
  if (s.a > 0) {
    for (std::size_t i = 0; i < s.n; ++i) {
      visit(3, i, t, i * s.b);
      visit(4, i, i * s.b, t);
    }
    visit(5, 0, t, t);
  }
}

DenseBlock& pick(BtaMatrix& m, int kind, std::size_t i) {
  switch (kind) {
    case 0: return m.diag[i];
    case 1: return m.lower[i];
    case 2: return m.upper[i];
    case 3: return m.arrow_row[i];
    case 4: return m.arrow_col[i];
    default: return m.tip;
  }
}

const DenseBlock& pick(const BtaMatrix& m, int kind, std::size_t i) {
  return pick(const_cast<BtaMatrix&>(m), kind, i);
}

}  // namespace

DenseBlock to_dense(const BtaMatrix& m) {
  m.check_consistent();
  DenseBlock d(m.order(), m.order());
  for_each_block(m.shape(), [&](int kind, std::size_t i, std::size_t r0, std::size_t c0) {
    const DenseBlock& blk = pick(m, kind, i);
    for (std::size_t r = 0; r < blk.rows(); ++r) {
      for (std::size_t c = 0; c < blk.cols(); ++c) d(r0 + r, c0 + c) = blk(r, c);
    }
  });
  return d;
}

BtaMatrix mask_to_pattern(const DenseBlock& dense, BtaShape shape) {
  if (dense.rows() != shape.order() || dense.cols() != shape.order()) {
    throw DimensionError("mask_to_pattern: dense operand is " + std::to_string(dense.rows()) +
                         "x" + std::to_string(dense.cols()) + ", shape needs N = " +
                         std::to_string(shape.order()));
  }
  BtaMatrix m(shape);
  for_each_block(shape, [&](int kind, std::size_t i, std::size_t r0, std::size_t c0) {
    DenseBlock& blk = pick(m, kind, i);
    for (std::size_t r = 0; r < blk.rows(); ++r) {
      for (std::size_t c = 0; c < blk.cols(); ++c) blk(r, c) = dense(r0 + r, c0 + c);
    }
  });
  return m;
}

BtaMatrix hermitianize(const BtaMatrix& m) {
  m.check_consistent();
  BtaMatrix h(m.shape());
  auto sym = [](const DenseBlock& x, const DenseBlock& y) {
    // (x + y^H) / 2
    DenseBlock out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = 0.5 * (x(r, c) + std::conj(y(c, r)));
    }
    return out;
  };
  for (std::size_t i = 0; i < m.n(); ++i) h.diag[i] = sym(m.diag[i], m.diag[i]);
  for (std::size_t i = 0; i + 1 < m.n(); ++i) {
    h.lower[i] = sym(m.lower[i], m.upper[i]);
    h.upper[i] = h.lower[i].adjoint();
  }
  if (m.a() > 0) {
    for (std::size_t i = 0; i < m.n(); ++i) {
      h.arrow_row[i] = sym(m.arrow_row[i], m.arrow_col[i]);
      h.arrow_col[i] = h.arrow_row[i].adjoint();
    }
    h.tip = sym(m.tip, m.tip);
  }
  return h;
}

bool is_pattern_hermitian(const BtaMatrix& m, double rel_tol) {
  auto close = [rel_tol](const DenseBlock& x, const DenseBlock& y_adj) {
    const double scale = std::max(x.frobenius_norm(), y_adj.frobenius_norm());
    return frobenius_distance(x, y_adj) <= rel_tol * std::max(scale, 1e-300);
  };
  for (std::size_t i = 0; i < m.n(); ++i) {
    if (!close(m.diag[i], m.diag[i].adjoint())) return false;
  }
  for (std::size_t i = 0; i + 1 < m.n(); ++i) {
    if (!close(m.lower[i], m.upper[i].adjoint())) return false;
  }
  if (m.a() > 0) {
    for (std::size_t i = 0; i < m.n(); ++i) {
      if (!close(m.arrow_row[i], m.arrow_col[i].adjoint())) return false;
    }
    if (!close(m.tip, m.tip.adjoint())) return false;
  }
  return true;
}

std::size_t block_of(BtaShape shape, std::size_t global) {
  const std::size_t t = shape.n * shape.b;
  return global >= t ? shape.n : global / shape.b;
}

bool in_pattern(BtaShape shape, std::size_t row, std::size_t col) {
  const std::size_t br = block_of(shape, row);
  const std::size_t bc = block_of(shape, col);
  if (br == shape.n || bc == shape.n) return true;
  return br + 1 >= bc && bc + 1 >= br;
}

}  // namespace bta
