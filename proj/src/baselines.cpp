#include "bta/baselines.hpp"

#include <string>

#include "bta/errors.hpp"

namespace bta {

namespace {

void check_guard(const BtaMatrix& a, const BtaMatrix* b, std::size_t guard, const char* who) {
  a.check_consistent();
  if (b != nullptr) {
    b->check_consistent();
    if (b->shape() != a.shape()) throw DimensionError(std::string(who) + ": B shape differs from A");
  }
  if (a.order() > guard) {
    throw GuardError(std::string(who) + ": N = " + std::to_string(a.order()) +
                     " exceeds the dense guard of " + std::to_string(guard));
  }
}

// Address of entry (row, col) inside the stored blocks, or null off-pattern.
complex* pattern_entry(BtaMatrix& m, std::size_t row, std::size_t col) {
  const BtaShape s = m.shape();
  const std::size_t br = block_of(s, row), bc = block_of(s, col);
  const std::size_t r = row - br * s.b, c = col - bc * s.b;
  if (br == s.n && bc == s.n) return &m.tip(r, c);
  if (br == s.n) return &m.arrow_row[bc](r, c);
  if (bc == s.n) return &m.arrow_col[br](r, c);
  if (br == bc) return &m.diag[br](r, c);
  if (br == bc + 1) return &m.lower[bc](r, c);
  if (bc == br + 1) return &m.upper[br](r, c);
  return nullptr;
}

LuFactors factor_dense(const BtaMatrix& a) {
  return block_lu(to_dense(a), nullptr);
}

// Scatters the in-pattern entries of column `col` into `out`.
void mask_column(BtaMatrix& out, std::size_t col, const DenseBlock& vec) {
  for (std::size_t r = 0; r < vec.rows(); ++r) {
    if (complex* slot = pattern_entry(out, r, col)) *slot = vec(r, 0);
  }
}

}  // namespace

std::vector<complex> bta_matvec(const BtaMatrix& m, std::span<const complex> x) {
  if (x.size() != m.order()) throw DimensionError("bta_matvec: vector length mismatch");
  const std::size_t n = m.n(), b = m.b(), a = m.a(), t = n * b;
  std::vector<complex> y(m.order());
  auto apply = [&](const DenseBlock& blk, std::size_t r0, std::size_t c0) {
    for (std::size_t r = 0; r < blk.rows(); ++r) {
      complex s{};
      for (std::size_t c = 0; c < blk.cols(); ++c) s += blk(r, c) * x[c0 + c];
      y[r0 + r] += s;
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    apply(m.diag[i], i * b, i * b);
    if (i + 1 < n) {
      apply(m.upper[i], i * b, (i + 1) * b);
      apply(m.lower[i], (i + 1) * b, i * b);
    }
    if (a > 0) {
      apply(m.arrow_col[i], i * b, t);
      apply(m.arrow_row[i], t, i * b);
    }
  }
  if (a > 0) apply(m.tip, t, t);
  return y;
}

SelectedSolution dense_solve(const BtaMatrix& a, const BtaMatrix* b, SolveMode mode,
                             std::size_t guard) {
  if (mode == SolveMode::si_sq && b == nullptr) {
    throw ParameterError("dense_solve: quadratic mode needs a right-hand side B");
  }
  check_guard(a, b, guard, "dense_solve");
  const LuFactors lu = factor_dense(a);

  SelectedSolution out;
  out.mode = mode;
  DenseBlock inv = DenseBlock::identity(a.order());
  lu_solve_inplace(lu, inv, nullptr);
  out.x_a = mask_to_pattern(inv, a.shape());

  if (mode == SolveMode::si_sq) {
    // Y = A^-1 B, then X = Y A^-H = (A^-1 Y^H)^H.
    DenseBlock y = to_dense(*b);
    lu_solve_inplace(lu, y, nullptr);
    DenseBlock z = y.adjoint();
    lu_solve_inplace(lu, z, nullptr);
    out.x_b = mask_to_pattern(z.adjoint(), a.shape());
  }
  return out;
}

SelectedSolution batched_solve(const BtaMatrix& a, const BtaMatrix* b, std::size_t guard) {
  check_guard(a, b, guard, "batched_solve");
  const std::size_t N = a.order();
  const LuFactors lu = factor_dense(a);

  SelectedSolution out;
  out.mode = b != nullptr ? SolveMode::si_sq : SolveMode::si;
  out.x_a = BtaMatrix(a.shape());
  if (b != nullptr) out.x_b.emplace(a.shape());

  DenseBlock col(N, 1);
  for (std::size_t i = 0; i < N; ++i) {
    // Column i of A^-1.
    col.set_zero();
    col(i, 0) = 1.0;
    lu_solve_inplace(lu, col, nullptr);
    mask_column(out.x_a, i, col);

    if (b != nullptr) {
      // Column i of A^-1 B A^-H is A^-1 (B (A^-H e_i)).
      col.set_zero();
      col(i, 0) = 1.0;
      lu_solve_adjoint_inplace(lu, col, nullptr);
      std::vector<complex> w = bta_matvec(*b, col.data());
      col = DenseBlock(N, 1, std::move(w));
      lu_solve_inplace(lu, col, nullptr);
      mask_column(*out.x_b, i, col);
    }
  }
  return out;
}

}  // namespace bta
