#pragma once

#include <vector>

#include "bta/bta_matrix.hpp"
#include "bta/dense_block.hpp"

namespace bta {

/// Data kept between the forward and the backward pass.
///
/// The quadratic pivot S_B of the last diagonal block (and of the tip) is not
/// needed by any forward update, so the forward pass only keeps the updated
/// B pivot and the backward pass forms S_B from it.
struct RgfFactors {
  BtaShape shape;
  bool quadratic = false;

  std::vector<DenseBlock> s_a_diag;  ///< n inverted pivots
  std::vector<DenseBlock> s_b_diag;  ///< n - 1 quadratic pivots (quadratic mode)
  DenseBlock b_last_pivot;           ///< updated B(n-1, n-1) (quadratic mode)

  // Arrow strips as they stood when block i was eliminated (arrow only).
  std::vector<DenseBlock> arrow_row_a, arrow_col_a;
  std::vector<DenseBlock> arrow_row_b, arrow_col_b;
  DenseBlock reduced_tip_inv;  ///< inverse of the fully updated tip
  DenseBlock reduced_tip_b;    ///< fully updated B tip (quadratic mode)
};

struct RgfOptions {
  /// Leave lower/upper blocks of the solution zero; they are still formed
  /// transiently because the diagonal recursion needs them.
  bool diagonal_only = false;
};

/// Block-tridiagonal forward pass. `b` may be null (inversion only).
RgfFactors bt_forward(const BtaMatrix& a, const BtaMatrix* b, OpCounter* counter);

/// Block-tridiagonal backward pass. `b` must be given iff the factors are quadratic.
SelectedSolution bt_backward(const RgfFactors& factors, const BtaMatrix& a, const BtaMatrix* b,
                             OpCounter* counter, RgfOptions options = {});

/// Arrowhead forward pass; with a == 0 it is exactly `bt_forward`.
RgfFactors bta_forward(const BtaMatrix& a, const BtaMatrix* b, OpCounter* counter);

/// Arrowhead backward pass; with a == 0 it is exactly `bt_backward`.
SelectedSolution bta_backward(const RgfFactors& factors, const BtaMatrix& a, const BtaMatrix* b,
                              OpCounter* counter, RgfOptions options = {});

/// Forward plus backward, dispatching on the arrow size. Inputs are not modified.
/// `b` is required in `SolveMode::si_sq` and ignored otherwise.
SelectedSolution solve_selected(const BtaMatrix& a, const BtaMatrix* b, SolveMode mode,
                                OpCounter* counter = nullptr, RgfOptions options = {});

}  // namespace bta
