#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "bta/dense_block.hpp"

namespace bta {

/// Global block identifier: diagonal block index, or `kTipBlock` for the arrow tip.
using BlockId = std::int64_t;
inline constexpr BlockId kTipBlock = -1;

/// Sparse map of blocks keyed by (block row, block column).
class BlockStore {
 public:
  BlockStore() = default;
  BlockStore(std::size_t block_size, std::size_t arrow_size)
      : block_size_(block_size), arrow_size_(arrow_size) {}

  std::size_t dim(BlockId id) const noexcept { return id == kTipBlock ? arrow_size_ : block_size_; }

  bool contains(BlockId r, BlockId c) const { return blocks_.count({r, c}) != 0; }
  const DenseBlock* find(BlockId r, BlockId c) const;
  /// Throws ProtocolError if the block is absent.
  const DenseBlock& at(BlockId r, BlockId c) const;
  DenseBlock& at(BlockId r, BlockId c);
  /// Inserts a zero block of the right shape when absent.
  DenseBlock& get_or_zero(BlockId r, BlockId c);
  void set(BlockId r, BlockId c, DenseBlock blk) { blocks_[{r, c}] = std::move(blk); }
  void erase(BlockId r, BlockId c) { blocks_.erase({r, c}); }
  std::size_t size() const noexcept { return blocks_.size(); }

 private:
  std::size_t block_size_ = 0;
  std::size_t arrow_size_ = 0;
  std::map<std::pair<BlockId, BlockId>, DenseBlock> blocks_;
};

/// Everything the backward pass needs about one eliminated pivot, captured
/// before the elimination modified the remaining blocks.
struct EliminationRecord {
  BlockId pivot = 0;
  std::vector<BlockId> couplings;
  DenseBlock s_a;
  DenseBlock s_b;  // empty in inversion-only mode
  std::vector<DenseBlock> a_ik, a_ki, b_ik, b_ki;
};

/// Eliminates pivot `i` against coupling set `couplings`:
///   G_k = A_ki S_A,  A_kl -= G_k A_il
/// and, with `b`, with S_B = S_A B_ii S_A^H and Q_k = A_ki S_B,
///   B_kl += Q_k A_li^H - G_k B_il - B_ki G_l^H
/// for every k, l in the coupling set. Absent operands are zero; absent targets
/// are created (fill-in). Singular pivots rethrow with `block = i`.
EliminationRecord eliminate_pivot(BlockStore& a, BlockStore* b, BlockId i,
                                  const std::vector<BlockId>& couplings, OpCounter* counter);

/// Non-owning view of one coupling k of a pivot i.
struct CouplingView {
  const DenseBlock* a_ik = nullptr;
  const DenseBlock* a_ki = nullptr;
  const DenseBlock* b_ik = nullptr;
  const DenseBlock* b_ki = nullptr;
};

struct PivotView {
  const DenseBlock* s_a = nullptr;
  const DenseBlock* s_b = nullptr;  // null in inversion-only mode
  std::vector<CouplingView> couplings;
};

PivotView view_of(const EliminationRecord& rec);

/// X blocks of pivot i given the solution on the coupling set.
struct PivotSolution {
  DenseBlock xa_ii;
  std::vector<DenseBlock> xa_ik, xa_ki;
  DenseBlock xb_ii;
  std::vector<DenseBlock> xb_ik, xb_ki;
};

/// Looks up the known solution block for coupling indices (p, q) into the
/// coupling list.
using CouplingLookup = std::function<const DenseBlock&(std::size_t p, std::size_t q)>;

/// Backward substitution for one pivot. With H_l = S_A A_il and
/// Y_k = sum_l X_kl A_li:
///   X_ki = -Y_k S_A
///   X_ik = -sum_l H_l X_lk
///   X_ii = S_A - sum_l H_l X_li
/// and for the quadratic solution, with E_k = -Y_k S_B + (sum_l X_kl B_li) S_A^H:
///   XB_ik = -S_B Y_k^H + S_A sum_l B_il X_kl^H - sum_l H_l XB_lk
///   XB_ki = E_k - sum_l XB_kl H_l^H
///   XB_ii = S_B - sum_k XB_ik H_k^H - sum_k H_k E_k
/// `xb` is required exactly when the pivot carries S_B.
PivotSolution solve_pivot(const PivotView& pivot, const CouplingLookup& xa,
                          const CouplingLookup* xb, OpCounter* counter);

}  // namespace bta
