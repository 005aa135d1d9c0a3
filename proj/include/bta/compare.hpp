#pragma once

#include <string>
#include <vector>

#include "bta/bta_matrix.hpp"

namespace bta {

/// Worst per-block error inside one block class (e.g. "x_a.diag").
struct ClassError {
  std::string name;
  std::size_t blocks = 0;
  double max_error = 0.0;
  std::size_t worst_index = 0;
};

/// Blockwise comparison of a candidate against a reference.
///
/// Each block's error is the Frobenius norm of the difference divided by the
/// reference block's norm, or the plain difference norm when the reference
/// block is exactly zero.
struct CompareReport {
  std::vector<ClassError> classes;
  double worst = 0.0;
  std::string worst_block;  ///< e.g. "x_b.lower[7]"; empty when nothing differs

  bool passed(double tol) const noexcept { return worst <= tol; }
};

/// Throws DimensionError when the shapes differ.
CompareReport compare_matrices(const BtaMatrix& candidate, const BtaMatrix& reference,
                               const std::string& prefix = "x_a");

/// Compares X_A and, when both carry it, X_B. Throws DimensionError when only
/// one side has X_B.
CompareReport compare_solutions(const SelectedSolution& candidate,
                                const SelectedSolution& reference);

double block_error(const DenseBlock& candidate, const DenseBlock& reference);

}  // namespace bta
