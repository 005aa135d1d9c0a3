#include "bta/schur_step.hpp"

#include <string>

#include "bta/errors.hpp"

namespace bta {

namespace {

std::string key_str(BlockId r, BlockId c) {
  auto s = [](BlockId id) { return id == kTipBlock ? std::string("t") : std::to_string(id); };
  return "(" + s(r) + ", " + s(c) + ")";
}

DenseBlock copy_or_zero(const BlockStore& store, BlockId r, BlockId c) {
  if (const DenseBlock* blk = store.find(r, c)) return *blk;
  return DenseBlock(store.dim(r), store.dim(c));
}

}  // namespace

const DenseBlock* BlockStore::find(BlockId r, BlockId c) const {
  const auto it = blocks_.find({r, c});
  return it == blocks_.end() ? nullptr : &it->second;
}

const DenseBlock& BlockStore::at(BlockId r, BlockId c) const {
  const DenseBlock* blk = find(r, c);
  if (blk == nullptr) throw ProtocolError("block store: missing block " + key_str(r, c));
  return *blk;
}

DenseBlock& BlockStore::at(BlockId r, BlockId c) {
  return const_cast<DenseBlock&>(std::as_const(*this).at(r, c));
}

DenseBlock& BlockStore::get_or_zero(BlockId r, BlockId c) {
  auto [it, inserted] = blocks_.try_emplace({r, c});
  if (inserted) it->second = DenseBlock(dim(r), dim(c));
  return it->second;
}

EliminationRecord eliminate_pivot(BlockStore& a, BlockStore* b, BlockId i,
                                  const std::vector<BlockId>& couplings, OpCounter* counter) {
  EliminationRecord rec;
  rec.pivot = i;
  rec.couplings = couplings;
  const std::size_t nk = couplings.size();
  try {
    rec.s_a = block_inverse(a.at(i, i), counter);
  } catch (const SingularError& e) {
    throw SingularError(e.pivot(), static_cast<std::size_t>(i),
                        "singular pivot in block " + std::to_string(i) + ": " + e.what());
  }
  for (BlockId k : couplings) {
    rec.a_ik.push_back(copy_or_zero(a, i, k));
    rec.a_ki.push_back(copy_or_zero(a, k, i));
  }

  std::vector<DenseBlock> g(nk);
  for (std::size_t p = 0; p < nk; ++p) g[p] = multiply(rec.a_ki[p], rec.s_a, counter);
  for (std::size_t p = 0; p < nk; ++p) {
    for (std::size_t q = 0; q < nk; ++q) {
      DenseBlock& target = a.get_or_zero(couplings[p], couplings[q]);
      multiply_acc(target, -1.0, g[p], Op::none, rec.a_ik[q], Op::none, 1.0, counter);
    }
  }

  if (b != nullptr) {
    for (BlockId k : couplings) {
      rec.b_ik.push_back(copy_or_zero(*b, i, k));
      rec.b_ki.push_back(copy_or_zero(*b, k, i));
    }
    const DenseBlock sb_half = multiply(rec.s_a, b->at(i, i), counter);
    rec.s_b = multiply(sb_half, rec.s_a, counter, Op::none, Op::adjoint);
    std::vector<DenseBlock> qk(nk);
    for (std::size_t p = 0; p < nk; ++p) qk[p] = multiply(rec.a_ki[p], rec.s_b, counter);
    for (std::size_t p = 0; p < nk; ++p) {
      for (std::size_t q = 0; q < nk; ++q) {
        DenseBlock& target = b->get_or_zero(couplings[p], couplings[q]);
        multiply_acc(target, 1.0, qk[p], Op::none, rec.a_ki[q], Op::adjoint, 1.0, counter);
        multiply_acc(target, -1.0, g[p], Op::none, rec.b_ik[q], Op::none, 1.0, counter);
        multiply_acc(target, -1.0, rec.b_ki[p], Op::none, g[q], Op::adjoint, 1.0, counter);
      }
    }
  }
  return rec;
}

PivotView view_of(const EliminationRecord& rec) {
  PivotView v;
  v.s_a = &rec.s_a;
  const bool quadratic = !rec.b_ik.empty() || !rec.s_b.empty();
  v.s_b = quadratic ? &rec.s_b : nullptr;
  for (std::size_t p = 0; p < rec.couplings.size(); ++p) {
    CouplingView c{&rec.a_ik[p], &rec.a_ki[p], nullptr, nullptr};
    if (quadratic) {
      c.b_ik = &rec.b_ik[p];
      c.b_ki = &rec.b_ki[p];
    }
    v.couplings.push_back(c);
  }
  return v;
}

PivotSolution solve_pivot(const PivotView& pivot, const CouplingLookup& xa,
                          const CouplingLookup* xb, OpCounter* counter) {
  const DenseBlock& s_a = *pivot.s_a;
  const std::size_t nk = pivot.couplings.size();
  const auto& cv = pivot.couplings;
  if ((pivot.s_b != nullptr) != (xb != nullptr)) {
    throw ProtocolError("solve_pivot: quadratic data and quadratic seed must come together");
  }

  std::vector<DenseBlock> h(nk), y(nk);
  for (std::size_t l = 0; l < nk; ++l) h[l] = multiply(s_a, *cv[l].a_ik, counter);
  for (std::size_t k = 0; k < nk; ++k) {
    y[k] = DenseBlock(xa(k, 0).rows(), s_a.cols());
    for (std::size_t l = 0; l < nk; ++l) {
      multiply_acc(y[k], 1.0, xa(k, l), Op::none, *cv[l].a_ki, Op::none, 1.0, counter);
    }
  }

  PivotSolution out;
  out.xa_ki.resize(nk);
  out.xa_ik.resize(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    out.xa_ki[k] = DenseBlock(y[k].rows(), s_a.cols());
    multiply_acc(out.xa_ki[k], -1.0, y[k], Op::none, s_a, Op::none, 0.0, counter);
  }
  for (std::size_t k = 0; k < nk; ++k) {
    out.xa_ik[k] = DenseBlock(s_a.rows(), xa(0, k).cols());
    for (std::size_t l = 0; l < nk; ++l) {
      multiply_acc(out.xa_ik[k], -1.0, h[l], Op::none, xa(l, k), Op::none, 1.0, counter);
    }
  }
  out.xa_ii = s_a;
  for (std::size_t l = 0; l < nk; ++l) {
    multiply_acc(out.xa_ii, -1.0, h[l], Op::none, out.xa_ki[l], Op::none, 1.0, counter);
  }

  if (xb == nullptr) return out;
  const DenseBlock& s_b = *pivot.s_b;
  const CouplingLookup& xbl = *xb;

  // E_k = -Y_k S_B + (sum_l X_kl B_li) S_A^H
  std::vector<DenseBlock> e(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    DenseBlock z(y[k].rows(), s_a.cols());
    for (std::size_t l = 0; l < nk; ++l) {
      multiply_acc(z, 1.0, xa(k, l), Op::none, *cv[l].b_ki, Op::none, 1.0, counter);
    }
    e[k] = multiply(z, s_a, counter, Op::none, Op::adjoint);
    multiply_acc(e[k], -1.0, y[k], Op::none, s_b, Op::none, 1.0, counter);
  }

  out.xb_ik.resize(nk);
  out.xb_ki.resize(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    DenseBlock r(s_a.rows(), xa(k, 0).rows());
    for (std::size_t l = 0; l < nk; ++l) {
      multiply_acc(r, 1.0, *cv[l].b_ik, Op::none, xa(k, l), Op::adjoint, 1.0, counter);
    }
    out.xb_ik[k] = multiply(s_a, r, counter);
    multiply_acc(out.xb_ik[k], -1.0, s_b, Op::none, y[k], Op::adjoint, 1.0, counter);
    for (std::size_t l = 0; l < nk; ++l) {
      multiply_acc(out.xb_ik[k], -1.0, h[l], Op::none, xbl(l, k), Op::none, 1.0, counter);
    }
  }
  for (std::size_t k = 0; k < nk; ++k) {
    out.xb_ki[k] = e[k];
    for (std::size_t l = 0; l < nk; ++l) {
      multiply_acc(out.xb_ki[k], -1.0, xbl(k, l), Op::none, h[l], Op::adjoint, 1.0, counter);
    }
  }
  out.xb_ii = s_b;
  for (std::size_t k = 0; k < nk; ++k) {
    multiply_acc(out.xb_ii, -1.0, out.xb_ik[k], Op::none, h[k], Op::adjoint, 1.0, counter);
    multiply_acc(out.xb_ii, -1.0, h[k], Op::none, e[k], Op::none, 1.0, counter);
  }
  return out;
}

}  // namespace bta
