#pragma once

#include <span>
#include <vector>

#include "bta/bta_matrix.hpp"

namespace bta {

inline constexpr std::size_t kDenseGuard = 4096;

/// Dense reference: one LU of the expanded matrix, X_A from solves against
/// the identity, X_B = (A^-1 B) A^-H, both masked to the pattern.
/// Throws GuardError when N exceeds `guard`.
SelectedSolution dense_solve(const BtaMatrix& a, const BtaMatrix* b, SolveMode mode,
                             std::size_t guard = kDenseGuard);

/// Column-by-column reference: one LU of the expanded matrix, then for every
/// column i the vectors A^-1 e_i and A^-1 B A^-H e_i, each masked to the
/// pattern as soon as it is formed. Only a handful of N-vectors live beside
/// the LU factors and the output. `b` may be null for inversion only.
SelectedSolution batched_solve(const BtaMatrix& a, const BtaMatrix* b,
                               std::size_t guard = kDenseGuard);

/// y = M x using only the stored blocks of M.
std::vector<complex> bta_matvec(const BtaMatrix& m, std::span<const complex> x);

}  // namespace bta
