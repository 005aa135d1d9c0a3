#include "bta/rgf.hpp"

#include <string>

#include "bta/errors.hpp"
#include "bta/schur_step.hpp"

namespace bta {

namespace {

void check_inputs(const BtaMatrix& a, const BtaMatrix* b) {
  a.check_consistent();
  if (b != nullptr) {
    b->check_consistent();
    if (b->shape() != a.shape()) throw DimensionError("rgf: B does not have the shape of A");
  }
}

DenseBlock invert_pivot(const DenseBlock& pivot, std::size_t block, OpCounter* counter) {
  try {
    return block_inverse(pivot, counter);
  } catch (const SingularError& e) {
    throw SingularError(e.pivot(), block,
                        "singular pivot in diagonal block " + std::to_string(block) +
                            " (input is not diagonally dominant?)");
  }
}

// S A S^H
DenseBlock congruence(const DenseBlock& s, const DenseBlock& m, OpCounter* counter) {
  const DenseBlock half = multiply(s, m, counter);
  return multiply(half, s, counter, Op::none, Op::adjoint);
}

void check_factors(const RgfFactors& f, const BtaMatrix& a, const BtaMatrix* b) {
  if (f.shape != a.shape() || f.s_a_diag.size() != a.n()) {
    throw DimensionError("rgf backward: factors do not match the shape of A");
  }
  if (f.quadratic != (b != nullptr)) {
    throw DimensionError(f.quadratic ? "rgf backward: quadratic factors need B"
                                     : "rgf backward: factors were built without B");
  }
  if (b != nullptr && b->shape() != a.shape()) {
    throw DimensionError("rgf backward: B does not have the shape of A");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

RgfFactors bt_forward(const BtaMatrix& a, const BtaMatrix* b, OpCounter* counter) {
  check_inputs(a, b);
  if (a.a() != 0) throw DimensionError("bt_forward: input has an arrow; use bta_forward");
  const std::size_t n = a.n();

  RgfFactors f;
  f.shape = a.shape();
  f.quadratic = b != nullptr;
  f.s_a_diag.reserve(n);

  std::vector<DenseBlock> ad = a.diag;
  std::vector<DenseBlock> bd;
  if (b != nullptr) bd = b->diag;

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const DenseBlock& s_a = f.s_a_diag.emplace_back(invert_pivot(ad[i], i, counter));
    const DenseBlock* s_b = nullptr;
    if (b != nullptr) s_b = &f.s_b_diag.emplace_back(congruence(s_a, bd[i], counter));

    const DenseBlock t1 = multiply(a.lower[i], s_a, counter);
    multiply_acc(ad[i + 1], -1.0, t1, Op::none, a.upper[i], Op::none, 1.0, counter);

    if (b != nullptr) {
      const DenseBlock as = multiply(a.lower[i], *s_b, counter);
      multiply_acc(bd[i + 1], 1.0, as, Op::none, a.lower[i], Op::adjoint, 1.0, counter);
      multiply_acc(bd[i + 1], -1.0, b->lower[i], Op::none, t1, Op::adjoint, 1.0, counter);
      multiply_acc(bd[i + 1], -1.0, t1, Op::none, b->upper[i], Op::none, 1.0, counter);
    }
  }
  f.s_a_diag.push_back(invert_pivot(ad[n - 1], n - 1, counter));
  if (b != nullptr) f.b_last_pivot = std::move(bd[n - 1]);
  return f;
}

SelectedSolution bt_backward(const RgfFactors& f, const BtaMatrix& a, const BtaMatrix* b,
                             OpCounter* counter, RgfOptions options) {
  check_factors(f, a, b);
  if (a.a() != 0) throw DimensionError("bt_backward: input has an arrow; use bta_backward");
  const std::size_t n = a.n();

  SelectedSolution out;
  out.mode = b != nullptr ? SolveMode::si_sq : SolveMode::si;
  out.x_a = BtaMatrix(a.shape());
  BtaMatrix& xa = out.x_a;
  BtaMatrix* xb = nullptr;
  if (b != nullptr) {
    out.x_b.emplace(a.shape());
    xb = &*out.x_b;
  }

  xa.diag[n - 1] = f.s_a_diag[n - 1];
  if (xb != nullptr) xb->diag[n - 1] = congruence(f.s_a_diag[n - 1], f.b_last_pivot, counter);

  for (std::size_t step = n - 1; step-- > 0;) {
    const std::size_t i = step, j = i + 1;
    const DenseBlock& s_a = f.s_a_diag[i];

    const DenseBlock t1 = multiply(s_a, a.upper[i], counter);
    const DenseBlock t2 = multiply(xa.diag[j], a.lower[i], counter);
    DenseBlock x_ji(a.b(), a.b()), x_ij(a.b(), a.b());
    multiply_acc(x_ji, -1.0, t2, Op::none, s_a, Op::none, 0.0, counter);
    multiply_acc(x_ij, -1.0, t1, Op::none, xa.diag[j], Op::none, 0.0, counter);
    xa.diag[i] = s_a;
    multiply_acc(xa.diag[i], -1.0, t1, Op::none, x_ji, Op::none, 1.0, counter);

    if (xb != nullptr) {
      const DenseBlock& s_b = f.s_b_diag[i];
      const DenseBlock tb1 = multiply(xb->diag[j], t1, counter, Op::none, Op::adjoint);
      const DenseBlock tb2 = multiply(s_b, t2, counter, Op::none, Op::adjoint);
      const DenseBlock tb3 = multiply(t2, s_b, counter);
      const DenseBlock tb4 = multiply(multiply(s_a, b->upper[i], counter), xa.diag[j], counter,
                                      Op::none, Op::adjoint);
      const DenseBlock tb5 = multiply(multiply(xa.diag[j], b->lower[i], counter), s_a, counter,
                                      Op::none, Op::adjoint);

      DenseBlock xb_ij = tb4 - tb2;
      multiply_acc(xb_ij, -1.0, t1, Op::none, xb->diag[j], Op::none, 1.0, counter);
      DenseBlock xb_ji = tb5 - tb1 - tb3;

      DenseBlock& xb_ii = xb->diag[i] = s_b;
      multiply_acc(xb_ii, 1.0, t1, Op::none, tb1, Op::none, 1.0, counter);
      multiply_acc(xb_ii, 1.0, t1, Op::none, tb3, Op::none, 1.0, counter);
      multiply_acc(xb_ii, 1.0, tb2, Op::none, t1, Op::adjoint, 1.0, counter);
      multiply_acc(xb_ii, -1.0, t1, Op::none, tb5, Op::none, 1.0, counter);
      multiply_acc(xb_ii, -1.0, tb4, Op::none, t1, Op::adjoint, 1.0, counter);

      if (!options.diagonal_only) {
        xb->upper[i] = std::move(xb_ij);
        xb->lower[i] = std::move(xb_ji);
      }
    }
    if (!options.diagonal_only) {
      xa.upper[i] = std::move(x_ij);
      xa.lower[i] = std::move(x_ji);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RgfFactors bta_forward(const BtaMatrix& a, const BtaMatrix* b, OpCounter* counter) {
  check_inputs(a, b);
  if (a.a() == 0) return bt_forward(a, b, counter);
  const std::size_t n = a.n();

  RgfFactors f;
  f.shape = a.shape();
  f.quadratic = b != nullptr;
  f.s_a_diag.reserve(n);

  // Working copies of everything the elimination updates.
  std::vector<DenseBlock> ad = a.diag, atr = a.arrow_row, atc = a.arrow_col;
  DenseBlock att = a.tip;
  std::vector<DenseBlock> bd, btr, btc;
  DenseBlock btt;
  if (b != nullptr) {
    bd = b->diag;
    btr = b->arrow_row;
    btc = b->arrow_col;
    btt = b->tip;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const bool has_next = i + 1 < n;
    const std::size_t j = i + 1;
    const DenseBlock& s_a = f.s_a_diag.emplace_back(invert_pivot(ad[i], i, counter));
    f.arrow_row_a.push_back(atr[i]);
    f.arrow_col_a.push_back(atc[i]);
    if (b != nullptr) {
      f.arrow_row_b.push_back(btr[i]);
      f.arrow_col_b.push_back(btc[i]);
    }

    if (b == nullptr) {
      // Right-looking form: H = S_A A(i, k), update A(l, k) -= A(l, i) H.
      if (has_next) {
        const DenseBlock h_j = multiply(s_a, a.upper[i], counter);
        multiply_acc(ad[j], -1.0, a.lower[i], Op::none, h_j, Op::none, 1.0, counter);
        multiply_acc(atr[j], -1.0, atr[i], Op::none, h_j, Op::none, 1.0, counter);
      }
      const DenseBlock h_t = multiply(s_a, atc[i], counter);
      if (has_next) multiply_acc(atc[j], -1.0, a.lower[i], Op::none, h_t, Op::none, 1.0, counter);
      multiply_acc(att, -1.0, atr[i], Op::none, h_t, Op::none, 1.0, counter);
      continue;
    }

    // Quadratic mode: left-looking G = A(k, i) S_A so that G is reused on the B side.
    const DenseBlock g_t = multiply(atr[i], s_a, counter);
    DenseBlock g_j;
    if (has_next) {
      g_j = multiply(a.lower[i], s_a, counter);
      multiply_acc(ad[j], -1.0, g_j, Op::none, a.upper[i], Op::none, 1.0, counter);
      multiply_acc(atc[j], -1.0, g_j, Op::none, atc[i], Op::none, 1.0, counter);
      multiply_acc(atr[j], -1.0, g_t, Op::none, a.upper[i], Op::none, 1.0, counter);
    }
    multiply_acc(att, -1.0, g_t, Op::none, atc[i], Op::none, 1.0, counter);

    // G_t B_ii (reused on both tip-row updates) and B_ii G_t^H.
    const DenseBlock c_t = multiply(g_t, bd[i], counter);
    if (has_next) {
      const DenseBlock& s_b = f.s_b_diag.emplace_back(congruence(s_a, bd[i], counter));
      const DenseBlock q_j = multiply(a.lower[i], s_b, counter);
      multiply_acc(bd[j], 1.0, q_j, Op::none, a.lower[i], Op::adjoint, 1.0, counter);
      multiply_acc(bd[j], -1.0, b->lower[i], Op::none, g_j, Op::adjoint, 1.0, counter);
      multiply_acc(bd[j], -1.0, g_j, Op::none, b->upper[i], Op::none, 1.0, counter);

      const DenseBlock d_t = multiply(bd[i], g_t, counter, Op::none, Op::adjoint);
      multiply_acc(btc[j], -1.0, g_j, Op::none, btc[i], Op::none, 1.0, counter);
      multiply_acc(btc[j], -1.0, b->lower[i], Op::none, g_t, Op::adjoint, 1.0, counter);
      multiply_acc(btc[j], 1.0, g_j, Op::none, d_t, Op::none, 1.0, counter);

      multiply_acc(btr[j], -1.0, g_t, Op::none, b->upper[i], Op::none, 1.0, counter);
      multiply_acc(btr[j], -1.0, btr[i] - c_t, Op::none, g_j, Op::adjoint, 1.0, counter);
    } else {
      f.b_last_pivot = bd[i];
    }
    multiply_acc(btt, -1.0, g_t, Op::none, btc[i], Op::none, 1.0, counter);
    multiply_acc(btt, -1.0, btr[i], Op::none, g_t, Op::adjoint, 1.0, counter);
    multiply_acc(btt, 1.0, c_t, Op::none, g_t, Op::adjoint, 1.0, counter);
  }

  f.reduced_tip_inv = invert_pivot(att, n, counter);
  if (b != nullptr) f.reduced_tip_b = std::move(btt);
  return f;
}

SelectedSolution bta_backward(const RgfFactors& f, const BtaMatrix& a, const BtaMatrix* b,
                              OpCounter* counter, RgfOptions options) {
  if (a.a() == 0) return bt_backward(f, a, b, counter, options);
  check_factors(f, a, b);
  const std::size_t n = a.n();

  SelectedSolution out;
  out.mode = b != nullptr ? SolveMode::si_sq : SolveMode::si;
  out.x_a = BtaMatrix(a.shape());
  BtaMatrix& xa = out.x_a;
  BtaMatrix* xb = nullptr;
  if (b != nullptr) {
    out.x_b.emplace(a.shape());
    xb = &*out.x_b;
  }

  xa.tip = f.reduced_tip_inv;
  if (xb != nullptr) xb->tip = congruence(f.reduced_tip_inv, f.reduced_tip_b, counter);
  const DenseBlock s_b_last =
      xb != nullptr ? congruence(f.s_a_diag[n - 1], f.b_last_pivot, counter) : DenseBlock();

  for (std::size_t step = n; step-- > 0;) {
    const std::size_t i = step, j = i + 1;
    const bool has_next = j < n;

    PivotView pv;
    pv.s_a = &f.s_a_diag[i];
    if (xb != nullptr) pv.s_b = has_next ? &f.s_b_diag[i] : &s_b_last;
    // Coupling order: the next diagonal block (if any), then the tip.
    if (has_next) {
      CouplingView cj{&a.upper[i], &a.lower[i], nullptr, nullptr};
      if (b != nullptr) {
        cj.b_ik = &b->upper[i];
        cj.b_ki = &b->lower[i];
      }
      pv.couplings.push_back(cj);
    }
    CouplingView ct{&f.arrow_col_a[i], &f.arrow_row_a[i], nullptr, nullptr};
    if (b != nullptr) {
      ct.b_ik = &f.arrow_col_b[i];
      ct.b_ki = &f.arrow_row_b[i];
    }
    pv.couplings.push_back(ct);

    auto lookup_in = [has_next, j](const BtaMatrix& x) {
      return [&x, has_next, j](std::size_t p, std::size_t q) -> const DenseBlock& {
        const bool p_tip = !has_next || p == 1;
        const bool q_tip = !has_next || q == 1;
        if (p_tip && q_tip) return x.tip;
        if (p_tip) return x.arrow_row[j];
        if (q_tip) return x.arrow_col[j];
        return x.diag[j];
      };
    };
    const CouplingLookup la = lookup_in(xa);
    CouplingLookup lb;
    if (xb != nullptr) lb = lookup_in(*xb);

    PivotSolution sol = solve_pivot(pv, la, xb != nullptr ? &lb : nullptr, counter);
    const std::size_t t_idx = has_next ? 1 : 0;

    xa.diag[i] = std::move(sol.xa_ii);
    xa.arrow_col[i] = std::move(sol.xa_ik[t_idx]);
    xa.arrow_row[i] = std::move(sol.xa_ki[t_idx]);
    if (has_next && !options.diagonal_only) {
      xa.upper[i] = std::move(sol.xa_ik[0]);
      xa.lower[i] = std::move(sol.xa_ki[0]);
    }
    if (xb != nullptr) {
      xb->diag[i] = std::move(sol.xb_ii);
      xb->arrow_col[i] = std::move(sol.xb_ik[t_idx]);
      xb->arrow_row[i] = std::move(sol.xb_ki[t_idx]);
      if (has_next && !options.diagonal_only) {
        xb->upper[i] = std::move(sol.xb_ik[0]);
        xb->lower[i] = std::move(sol.xb_ki[0]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SelectedSolution solve_selected(const BtaMatrix& a, const BtaMatrix* b, SolveMode mode,
                                OpCounter* counter, RgfOptions options) {
  if (mode == SolveMode::si_sq && b == nullptr) {
    throw ParameterError("solve_selected: quadratic mode needs a right-hand side B");
  }
  const BtaMatrix* rhs = mode == SolveMode::si_sq ? b : nullptr;
  const RgfFactors f = bta_forward(a, rhs, counter);
  return bta_backward(f, a, rhs, counter, options);
}

}  // namespace bta
