#include "bta/dist.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "bta/bta_io.hpp"
#include "bta/errors.hpp"
#include "bta/rgf.hpp"

namespace bta {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

BlockId id(std::size_t i) { return static_cast<BlockId>(i); }

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t take_u64(std::string_view bytes, std::size_t& offset) {
  if (offset + 8 > bytes.size()) throw ProtocolError("partition result: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  offset += 8;
  return v;
}

DenseBlock take_block(std::string_view bytes, std::size_t& offset, std::size_t rows,
                      std::size_t cols) {
  if (offset + rows * cols * sizeof(complex) > bytes.size()) {
    throw ProtocolError("payload truncated: expected a " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " block at byte " + std::to_string(offset));
  }
  return parse_block_bytes(bytes, offset, rows, cols);
}

// Boundary diagonal blocks a partition exposes to the reduced system.
std::vector<std::size_t> boundary_blocks(PartitionKind kind, std::size_t begin, std::size_t end) {
  switch (kind) {
    case PartitionKind::first: return {end - 1};
    case PartitionKind::last: return {begin};
    case PartitionKind::middle: return {begin, end - 1};
  }
  return {};
}

void append_side(const BlockStore& s, const PartitionData& part, std::string& out) {
  const auto bnd = boundary_blocks(part.kind, part.begin, part.end);
  for (const std::size_t g : bnd) append_block_bytes(s.at(id(g), id(g)), out);
  if (part.kind == PartitionKind::middle) {
    append_block_bytes(s.at(id(part.begin), id(part.end - 1)), out);
    append_block_bytes(s.at(id(part.end - 1), id(part.begin)), out);
  }
  if (part.shape.a > 0) {
    for (const std::size_t g : bnd) {
      append_block_bytes(s.at(kTipBlock, id(g)), out);
      append_block_bytes(s.at(id(g), kTipBlock), out);
    }
  }
}

// Decodes one side of a payload into the reduced matrix.
void decode_side(std::string_view bytes, std::size_t& off, const PartitionPlan& plan,
                 std::size_t p, BtaShape shape, BtaMatrix& out) {
  const std::size_t b = shape.b, a = shape.a;
  const PartitionKind kind = plan.kinds[p];
  std::vector<std::size_t> rs;
  if (kind != PartitionKind::first) rs.push_back(reduced_index(plan, p, BoundarySide::top));
  if (kind != PartitionKind::last) rs.push_back(reduced_index(plan, p, BoundarySide::bottom));
  for (const std::size_t r : rs) out.diag[r] = take_block(bytes, off, b, b);
  if (kind == PartitionKind::middle) {
    const std::size_t r = rs[0];
    out.upper[r] = take_block(bytes, off, b, b);
    out.lower[r] = take_block(bytes, off, b, b);
  }
  if (a > 0) {
    for (const std::size_t r : rs) {
      out.arrow_row[r] = take_block(bytes, off, a, b);
      out.arrow_col[r] = take_block(bytes, off, b, a);
    }
  }
}

void attach_tip(BlockStore& s, std::size_t a) {
  if (a > 0) s.set(kTipBlock, kTipBlock, DenseBlock(a, a));
}

void load_range(BlockStore& s, const BtaMatrix& m, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    s.set(id(i), id(i), m.diag[i]);
    if (i + 1 < end) {
      s.set(id(i + 1), id(i), m.lower[i]);
      s.set(id(i), id(i + 1), m.upper[i]);
    }
    if (m.a() > 0) {
      s.set(kTipBlock, id(i), m.arrow_row[i]);
      s.set(id(i), kTipBlock, m.arrow_col[i]);
    }
  }
  attach_tip(s, m.a());
}

}  // namespace

std::string_view partition_kind_name(PartitionKind kind) noexcept {
  switch (kind) {
    case PartitionKind::first: return "first";
    case PartitionKind::middle: return "middle";
    case PartitionKind::last: return "last";
  }
  return "unknown";
}

StepWeights partition_step_weights(SolveMode mode) noexcept {
  if (mode == SolveMode::si_sq) return {42.0, 94.0};
  return {9.0, 20.0};
}

PartitionPlan plan_partitions(std::size_t n, std::size_t parts, SolveMode mode) {
  if (parts < 2) throw ParameterError("plan_partitions: need at least 2 partitions");
  if (n < 2 * parts) {
    throw ParameterError("plan_partitions: n = " + std::to_string(n) + " is too small for " +
                         std::to_string(parts) + " partitions (need n >= 2P)");
  }
  const StepWeights w = partition_step_weights(mode);
  const double r = w.edge / w.middle;
  const double edge_len = static_cast<double>(n) / (2.0 + static_cast<double>(parts - 2) * r);
  const std::size_t mid =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(r * edge_len)));
  const std::size_t rest = n - (parts - 2) * mid;
  const std::size_t first_len = (rest + 1) / 2;

  PartitionPlan plan;
  plan.n = n;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    std::size_t len = mid;
    PartitionKind kind = PartitionKind::middle;
    if (p == 0) {
      len = first_len;
      kind = PartitionKind::first;
    } else if (p + 1 == parts) {
      len = n - pos;
      kind = PartitionKind::last;
    }
    plan.begin.push_back(pos);
    plan.end.push_back(pos + len);
    plan.kinds.push_back(kind);
    pos += len;
  }
  return plan;
}

PartitionData scatter_partition(const BtaMatrix& a, const BtaMatrix* b, const PartitionPlan& plan,
                                std::size_t rank) {
  a.check_consistent();
  if (plan.n != a.n()) throw DimensionError("scatter_partition: plan does not match the matrix");
  if (rank >= plan.parts()) throw ParameterError("scatter_partition: rank out of range");
  if (b != nullptr && b->shape() != a.shape()) {
    throw DimensionError("scatter_partition: B does not match the shape of A");
  }

  PartitionData d;
  d.rank = rank;
  d.kind = plan.kinds[rank];
  d.begin = plan.begin[rank];
  d.end = plan.end[rank];
  d.shape = a.shape();
  d.quadratic = b != nullptr;
  d.plan = plan;
  d.a = BlockStore(a.b(), a.a());
  load_range(d.a, a, d.begin, d.end);
  if (b != nullptr) {
    d.b = BlockStore(a.b(), a.a());
    load_range(d.b, *b, d.begin, d.end);
  }
  for (std::size_t p = 0; p + 1 < plan.parts(); ++p) {
    const std::size_t e = plan.end[p] - 1;
    d.sep_upper_a.push_back(a.upper[e]);
    d.sep_lower_a.push_back(a.lower[e]);
    if (b != nullptr) {
      d.sep_upper_b.push_back(b->upper[e]);
      d.sep_lower_b.push_back(b->lower[e]);
    }
  }
  d.tip_a = a.tip;
  if (b != nullptr) d.tip_b = b->tip;
  return d;
}

LocalFactors local_forward(PartitionData& part, OpCounter* counter) {
  LocalFactors f;
  BlockStore* b = part.quadratic ? &part.b : nullptr;
  const bool arrow = part.shape.a > 0;
  auto step = [&](std::size_t i, std::vector<BlockId> k) {
    if (arrow) k.push_back(kTipBlock);
    f.records.push_back(eliminate_pivot(part.a, b, id(i), k, counter));
  };
  switch (part.kind) {
    case PartitionKind::first:
      for (std::size_t i = part.begin; i + 1 < part.end; ++i) step(i, {id(i + 1)});
      break;
    case PartitionKind::last:
      for (std::size_t i = part.end - 1; i > part.begin; --i) step(i, {id(i - 1)});
      break;
    case PartitionKind::middle:
      for (std::size_t i = part.begin + 1; i + 1 < part.end; ++i) {
        step(i, {id(i + 1), id(part.begin)});
      }
      break;
  }
  return f;
}

std::string boundary_payload(const PartitionData& part) {
  std::string out;
  out.reserve(boundary_payload_bytes(part.kind, part.shape, part.quadratic));
  append_side(part.a, part, out);
  if (part.quadratic) append_side(part.b, part, out);
  return out;
}

std::size_t boundary_payload_bytes(PartitionKind kind, BtaShape shape, bool quadratic) noexcept {
  const std::size_t bb = shape.b * shape.b, ab = shape.a * shape.b;
  const std::size_t side = kind == PartitionKind::middle ? 4 * bb + 4 * ab : bb + 2 * ab;
  return (quadratic ? 2 : 1) * side * sizeof(complex);
}

std::vector<complex> tip_contribution(const PartitionData& part) {
  std::vector<complex> out;
  if (part.shape.a == 0) return out;
  const auto ta = part.a.at(kTipBlock, kTipBlock).data();
  out.assign(ta.begin(), ta.end());
  if (part.quadratic) {
    const auto tb = part.b.at(kTipBlock, kTipBlock).data();
    out.insert(out.end(), tb.begin(), tb.end());
  }
  return out;
}

std::size_t reduced_index(const PartitionPlan& plan, std::size_t rank, BoundarySide side) {
  const std::size_t parts = plan.parts();
  if (rank == 0) return 0;
  if (rank + 1 == parts) return 2 * parts - 3;
  return side == BoundarySide::top ? 2 * rank - 1 : 2 * rank;
}

ReducedSystem assemble_reduced(const PartitionData& local, const std::vector<std::string>& payloads,
                               std::span<const complex> tip_sum) {
  const PartitionPlan& plan = local.plan;
  const std::size_t parts = plan.parts();
  if (payloads.size() != parts) {
    throw ProtocolError("assemble_reduced: got " + std::to_string(payloads.size()) +
                        " payloads for " + std::to_string(parts) + " partitions");
  }
  const BtaShape rshape{2 * parts - 2, local.shape.b, local.shape.a};
  ReducedSystem red;
  red.a = BtaMatrix(rshape);
  if (local.quadratic) red.b.emplace(rshape);
  red.global_block.resize(rshape.n);
  red.provenance.resize(rshape.n);

  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t expect = boundary_payload_bytes(plan.kinds[p], local.shape, local.quadratic);
    if (payloads[p].size() != expect) {
      throw ProtocolError("assemble_reduced: rank " + std::to_string(p) + " sent " +
                          std::to_string(payloads[p].size()) + " bytes, expected " +
                          std::to_string(expect));
    }
    std::size_t off = 0;
    decode_side(payloads[p], off, plan, p, local.shape, red.a);
    if (red.b) decode_side(payloads[p], off, plan, p, local.shape, *red.b);

    if (plan.kinds[p] != PartitionKind::first) {
      const std::size_t r = reduced_index(plan, p, BoundarySide::top);
      red.global_block[r] = plan.begin[p];
      red.provenance[r] = {p, BoundarySide::top};
    }
    if (plan.kinds[p] != PartitionKind::last) {
      const std::size_t r = reduced_index(plan, p, BoundarySide::bottom);
      red.global_block[r] = plan.end[p] - 1;
      red.provenance[r] = {p, BoundarySide::bottom};
      red.a.upper[r] = local.sep_upper_a[p];
      red.a.lower[r] = local.sep_lower_a[p];
      if (red.b) {
        red.b->upper[r] = local.sep_upper_b[p];
        red.b->lower[r] = local.sep_lower_b[p];
      }
    }
  }

  if (local.shape.a > 0) {
    const std::size_t aa = local.shape.a * local.shape.a;
    if (tip_sum.size() != (local.quadratic ? 2 : 1) * aa) {
      throw ProtocolError("assemble_reduced: tip reduction has the wrong length");
    }
    red.a.tip = local.tip_a;
    for (std::size_t k = 0; k < aa; ++k) red.a.tip.data()[k] += tip_sum[k];
    if (red.b) {
      red.b->tip = local.tip_b;
      for (std::size_t k = 0; k < aa; ++k) red.b->tip.data()[k] += tip_sum[aa + k];
    }
  }
  return red;
}

SelectedSolution solve_reduced(const ReducedSystem& reduced, SolveMode mode,
                               const DistOptions& options) {
  const BtaMatrix* b = mode == SolveMode::si_sq ? &*reduced.b : nullptr;
  try {
    const std::size_t sub = reduced.a.n() / 2;
    if (options.recursive_reduced && sub >= 2) {
      return dist_solve(reduced.a, b, sub, mode, DistOptions{});
    }
    return solve_selected(reduced.a, b, mode);
  } catch (const SingularError& e) {
    const std::size_t blk = e.block() < reduced.global_block.size()
                                ? reduced.global_block[e.block()]
                                : (e.block() == reduced.a.n() ? reduced.a.n() : e.block());
    throw SingularError(e.pivot(), blk,
                        std::string("reduced system: ") + e.what() + " (global block " +
                            std::to_string(blk) + ")");
  }
}

PartitionSolution local_backward(const PartitionData& part, const LocalFactors& factors,
                                 const SelectedSolution& rx, OpCounter* counter) {
  const bool quad = part.quadratic;
  const bool arrow = part.shape.a > 0;
  const PartitionPlan& plan = part.plan;
  BlockStore xa(part.shape.b, part.shape.a), xb(part.shape.b, part.shape.a);

  auto seed = [&](const BtaMatrix& x, BlockStore& s) {
    auto put = [&](std::size_t g, BoundarySide side) {
      const std::size_t r = reduced_index(plan, part.rank, side);
      s.set(id(g), id(g), x.diag[r]);
      if (arrow) {
        s.set(kTipBlock, id(g), x.arrow_row[r]);
        s.set(id(g), kTipBlock, x.arrow_col[r]);
      }
    };
    if (part.kind != PartitionKind::first) put(part.begin, BoundarySide::top);
    if (part.kind != PartitionKind::last) put(part.end - 1, BoundarySide::bottom);
    if (part.kind == PartitionKind::middle) {
      const std::size_t r = reduced_index(plan, part.rank, BoundarySide::top);
      s.set(id(part.begin), id(part.end - 1), x.upper[r]);
      s.set(id(part.end - 1), id(part.begin), x.lower[r]);
    }
    if (arrow) s.set(kTipBlock, kTipBlock, x.tip);
  };
  seed(rx.x_a, xa);
  if (quad) seed(*rx.x_b, xb);

  for (auto it = factors.records.rbegin(); it != factors.records.rend(); ++it) {
    const EliminationRecord& rec = *it;
    const auto& k = rec.couplings;
    const CouplingLookup la = [&](std::size_t p, std::size_t q) -> const DenseBlock& {
      return xa.at(k[p], k[q]);
    };
    const CouplingLookup lb = [&](std::size_t p, std::size_t q) -> const DenseBlock& {
      return xb.at(k[p], k[q]);
    };
    PivotSolution sol = solve_pivot(view_of(rec), la, quad ? &lb : nullptr, counter);
    const BlockId i = rec.pivot;
    for (std::size_t p = 0; p < k.size(); ++p) {
      xa.set(i, k[p], std::move(sol.xa_ik[p]));
      xa.set(k[p], i, std::move(sol.xa_ki[p]));
      if (quad) {
        xb.set(i, k[p], std::move(sol.xb_ik[p]));
        xb.set(k[p], i, std::move(sol.xb_ki[p]));
      }
    }
    xa.set(i, i, std::move(sol.xa_ii));
    if (quad) xb.set(i, i, std::move(sol.xb_ii));
  }

  PartitionSolution out;
  auto emit = [&](BlockKind kind, std::size_t index, BlockId r, BlockId c) {
    out.blocks.push_back({kind, index, xa.at(r, c), quad ? xb.at(r, c) : DenseBlock()});
  };
  for (std::size_t i = part.begin; i < part.end; ++i) {
    emit(BlockKind::diag, i, id(i), id(i));
    if (i + 1 < part.end) {
      emit(BlockKind::lower, i, id(i + 1), id(i));
      emit(BlockKind::upper, i, id(i), id(i + 1));
    }
    if (arrow) {
      emit(BlockKind::arrow_row, i, kTipBlock, id(i));
      emit(BlockKind::arrow_col, i, id(i), kTipBlock);
    }
  }
  if (part.kind != PartitionKind::last) {
    const std::size_t r = reduced_index(plan, part.rank, BoundarySide::bottom);
    const std::size_t e = part.end - 1;
    out.blocks.push_back({BlockKind::lower, e, rx.x_a.lower[r],
                          quad ? rx.x_b->lower[r] : DenseBlock()});
    out.blocks.push_back({BlockKind::upper, e, rx.x_a.upper[r],
                          quad ? rx.x_b->upper[r] : DenseBlock()});
  }
  if (arrow && part.rank == 0) {
    out.blocks.push_back({BlockKind::tip, 0, rx.x_a.tip, quad ? rx.x_b->tip : DenseBlock()});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::pair<std::size_t, std::size_t> block_dims(BlockKind kind, BtaShape s) {
  switch (kind) {
    case BlockKind::arrow_row: return {s.a, s.b};
    case BlockKind::arrow_col: return {s.b, s.a};
    case BlockKind::tip: return {s.a, s.a};
    default: return {s.b, s.b};
  }
}

}  // namespace

std::string encode_partition_solution(const PartitionSolution& sol, BtaShape shape) {
  const bool quad = !sol.blocks.empty() && !sol.blocks.front().xb.empty();
  std::string out;
  put_u64(out, sol.blocks.size());
  out.push_back(static_cast<char>(quad ? 1 : 0));
  for (const OwnedBlock& blk : sol.blocks) {
    const auto [r, c] = block_dims(blk.kind, shape);
    if (blk.xa.rows() != r || blk.xa.cols() != c) {
      throw DimensionError("encode_partition_solution: block does not match the shape");
    }
    out.push_back(static_cast<char>(blk.kind));
    put_u64(out, blk.index);
    append_block_bytes(blk.xa, out);
    if (quad) append_block_bytes(blk.xb, out);
  }
  return out;
}

PartitionSolution decode_partition_solution(std::string_view bytes, BtaShape shape) {
  std::size_t off = 0;
  const std::uint64_t count = take_u64(bytes, off);
  if (off >= bytes.size()) throw ProtocolError("partition result: truncated header");
  const bool quad = bytes[off++] != 0;
  PartitionSolution sol;
  for (std::uint64_t e = 0; e < count; ++e) {
    if (off >= bytes.size()) throw ProtocolError("partition result: truncated entry");
    const auto raw = static_cast<std::uint8_t>(bytes[off++]);
    if (raw > static_cast<std::uint8_t>(BlockKind::tip)) {
      throw ProtocolError("partition result: unknown block kind " + std::to_string(raw));
    }
    const auto kind = static_cast<BlockKind>(raw);
    const std::size_t index = take_u64(bytes, off);
    const auto [r, c] = block_dims(kind, shape);
    OwnedBlock blk{kind, index, take_block(bytes, off, r, c), DenseBlock()};
    if (quad) blk.xb = take_block(bytes, off, r, c);
    sol.blocks.push_back(std::move(blk));
  }
  if (off != bytes.size()) throw ProtocolError("partition result: trailing bytes");
  return sol;
}

SelectedSolution merge_partitions(BtaShape shape, SolveMode mode,
                                  const std::vector<PartitionSolution>& parts) {
  SelectedSolution out;
  out.mode = mode;
  out.x_a = BtaMatrix(shape);
  if (mode == SolveMode::si_sq) out.x_b.emplace(shape);

  const std::size_t n = shape.n;
  const std::size_t off = n > 0 ? n - 1 : 0;
  const std::size_t arrows = shape.a > 0 ? n : 0;
  const std::array<std::size_t, 6> limits{n, off, off, arrows, arrows, shape.a > 0 ? 1u : 0u};
  std::array<std::vector<bool>, 6> seen;
  for (std::size_t k = 0; k < 6; ++k) seen[k].assign(limits[k], false);

  auto slot = [](BtaMatrix& m, BlockKind kind, std::size_t i) -> DenseBlock& {
    switch (kind) {
      case BlockKind::diag: return m.diag[i];
      case BlockKind::lower: return m.lower[i];
      case BlockKind::upper: return m.upper[i];
      case BlockKind::arrow_row: return m.arrow_row[i];
      case BlockKind::arrow_col: return m.arrow_col[i];
      case BlockKind::tip: return m.tip;
    }
    return m.tip;
  };

  for (const PartitionSolution& part : parts) {
    for (const OwnedBlock& blk : part.blocks) {
      const auto k = static_cast<std::size_t>(blk.kind);
      if (blk.index >= limits[k]) {
        throw ProtocolError("merge_partitions: block index " + std::to_string(blk.index) +
                            " out of range");
      }
      if (seen[k][blk.index]) {
        throw ProtocolError("merge_partitions: block delivered twice");
      }
      seen[k][blk.index] = true;
      slot(out.x_a, blk.kind, blk.index) = blk.xa;
      if (out.x_b) slot(*out.x_b, blk.kind, blk.index) = blk.xb;
    }
  }
  for (std::size_t k = 0; k < 6; ++k) {
    for (std::size_t i = 0; i < limits[k]; ++i) {
      if (!seen[k][i]) {
        throw ProtocolError("merge_partitions: block " + std::to_string(i) + " of kind " +
                            std::to_string(k) + " missing");
      }
    }
  }
  out.x_a.check_consistent();
  if (out.x_b) out.x_b->check_consistent();
  return out;
}

RankOutcome dist_rank_solve(Collectives& comm, PartitionData part, SolveMode mode,
                            const DistOptions& options) {
  if (comm.size() != part.plan.parts() || comm.rank() != part.rank) {
    throw ParameterError("dist_rank_solve: communicator does not match the partition");
  }
  if ((mode == SolveMode::si_sq) != part.quadratic) {
    throw ParameterError("dist_rank_solve: mode does not match the scattered data");
  }
  RankOutcome res;
  res.forward_counts = OpCounter(part.shape.b, part.shape.a);
  res.backward_counts = OpCounter(part.shape.b, part.shape.a);
  const auto t0 = Clock::now();

  auto t = Clock::now();
  const LocalFactors factors = local_forward(part, &res.forward_counts);
  res.times.forward = seconds_since(t);
  res.local_steps = factors.records.size();

  t = Clock::now();
  const std::string payload = boundary_payload(part);
  res.payload_bytes = payload.size();
  const std::vector<std::string> all = comm.all_gather(payload);
  std::vector<complex> tips;
  if (part.shape.a > 0) tips = comm.all_reduce_sum(tip_contribution(part));
  res.times.communication = seconds_since(t);

  t = Clock::now();
  const ReducedSystem red = assemble_reduced(part, all, tips);
  const SelectedSolution rx = solve_reduced(red, mode, options);
  res.times.reduced = seconds_since(t);

  t = Clock::now();
  res.solution = local_backward(part, factors, rx, &res.backward_counts);
  res.times.backward = seconds_since(t);

  res.times.total = seconds_since(t0);
  res.trace = comm.trace();
  return res;
}

// ---------------------------------------------------------------------------

namespace {

std::string describe(const std::vector<DistributedError::Failure>& failures) {
  std::string msg = "distributed solve failed";
  for (const auto& f : failures) msg += "; rank " + std::to_string(f.rank) + ": " + f.message;
  return msg;
}

}  // namespace

DistributedError::DistributedError(std::vector<Failure> failures)
    : std::runtime_error(describe(failures)), failures_(std::move(failures)) {}

bool DistributedError::numerical() const noexcept {
  return std::any_of(failures_.begin(), failures_.end(), [](const Failure& f) { return f.numerical; });
}

SelectedSolution dist_solve(const BtaMatrix& a, const BtaMatrix* b, std::size_t parts,
                            SolveMode mode, const DistOptions& options, DistReport* report) {
  if (parts == 0) throw ParameterError("dist_solve: need at least one partition");
  if (mode == SolveMode::si_sq && b == nullptr) {
    throw ParameterError("dist_solve: quadratic mode needs a right-hand side B");
  }
  const BtaMatrix* rhs = mode == SolveMode::si_sq ? b : nullptr;

  if (parts == 1) {
    RankOutcome one;
    one.forward_counts = OpCounter(a.b(), a.a());
    one.backward_counts = OpCounter(a.b(), a.a());
    const auto t0 = Clock::now();
    const RgfFactors f = bta_forward(a, rhs, &one.forward_counts);
    one.times.forward = seconds_since(t0);
    const auto t1 = Clock::now();
    SelectedSolution x = bta_backward(f, a, rhs, &one.backward_counts);
    one.times.backward = seconds_since(t1);
    one.times.total = seconds_since(t0);
    one.local_steps = a.n();
    if (report != nullptr) {
      report->plan = PartitionPlan{a.n(), {0}, {a.n()}, {PartitionKind::first}};
      report->ranks.assign(1, std::move(one));
    }
    return x;
  }

  const PartitionPlan plan = plan_partitions(a.n(), parts, mode);
  InProcessGroup group(parts);
  std::vector<RankOutcome> outcomes(parts);
  std::vector<DistributedError::Failure> failures;
  std::mutex failure_mutex;
  bool aborted = false;

  auto worker = [&](std::size_t rank) {
    try {
      std::unique_ptr<Collectives> comm = group.communicator(rank);
      PartitionData data = scatter_partition(a, rhs, plan, rank);
      outcomes[rank] = dist_rank_solve(*comm, std::move(data), mode, options);
    } catch (const std::exception& e) {
      bool numerical = dynamic_cast<const SingularError*>(&e) != nullptr;
      if (const auto* d = dynamic_cast<const DistributedError*>(&e)) numerical = d->numerical();
      const bool secondary = dynamic_cast<const ProtocolError*>(&e) != nullptr;
      std::lock_guard lock(failure_mutex);
      if (!(secondary && aborted)) failures.push_back({rank, e.what(), numerical});
      if (!aborted) {
        aborted = true;
        group.abort();
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(parts);
  for (std::size_t r = 0; r < parts; ++r) threads.emplace_back(worker, r);
  for (auto& th : threads) th.join();

  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end(),
              [](const auto& x, const auto& y) { return x.rank < y.rank; });
    throw DistributedError(std::move(failures));
  }

  std::vector<PartitionSolution> sols;
  sols.reserve(parts);
  for (const RankOutcome& o : outcomes) sols.push_back(o.solution);
  SelectedSolution x = merge_partitions(a.shape(), mode, sols);
  if (report != nullptr) {
    report->plan = plan;
    report->ranks = std::move(outcomes);
  }
  return x;
}

}  // namespace bta
