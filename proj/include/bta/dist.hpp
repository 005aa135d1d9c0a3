#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bta/bta_matrix.hpp"
#include "bta/collectives.hpp"
#include "bta/schur_step.hpp"

namespace bta {

// --- partitioning ------------------------------------------------------------

enum class PartitionKind : std::uint8_t { first, middle, last };

std::string_view partition_kind_name(PartitionKind kind) noexcept;

/// Contiguous assignment of the n diagonal blocks to P workers.
struct PartitionPlan {
  std::size_t n = 0;
  std::vector<std::size_t> begin;  ///< first block of each partition
  std::vector<std::size_t> end;    ///< one past the last block
  std::vector<PartitionKind> kinds;

  std::size_t parts() const noexcept { return begin.size(); }
  std::size_t length(std::size_t p) const noexcept { return end[p] - begin[p]; }
};

/// Relative per-step cost of an edge partition step and a middle partition
/// step (forward plus backward `bbb` products).
struct StepWeights {
  double edge;
  double middle;
};
StepWeights partition_step_weights(SolveMode mode) noexcept;

/// Load-balanced plan. Middle partitions get `floor(r * L)` blocks (at least
/// two), where r = edge / middle weight and L = n / (2 + (P - 2) r) is the edge
/// length; the remaining blocks are split between first and last, first
/// taking the odd one. Throws ParameterError unless P >= 2 and n >= 2P.
PartitionPlan plan_partitions(std::size_t n, std::size_t parts, SolveMode mode);

// --- per-rank data -------------------------------------------------------------

/// One worker's slice of the system.
///
/// The stores hold the worker's diagonal blocks, the off-diagonals inside its
/// range, its arrow strips, and a zero tip entry that accumulates only this
/// worker's contribution. Separators between partitions and the original tip
/// are replicated to every worker.
struct PartitionData {
  std::size_t rank = 0;
  PartitionKind kind = PartitionKind::first;
  std::size_t begin = 0, end = 0;
  BtaShape shape;
  bool quadratic = false;
  PartitionPlan plan;

  BlockStore a, b;

  std::vector<DenseBlock> sep_upper_a, sep_lower_a;  ///< A(e_p - 1, e_p), A(e_p, e_p - 1)
  std::vector<DenseBlock> sep_upper_b, sep_lower_b;
  DenseBlock tip_a, tip_b;
};

PartitionData scatter_partition(const BtaMatrix& a, const BtaMatrix* b, const PartitionPlan& plan,
                                std::size_t rank);

struct LocalFactors {
  std::vector<EliminationRecord> records;  ///< in elimination order
};

/// Eliminates the interior of the partition and leaves the boundary and tip
/// updates in the stores.
///   first:  i = begin .. end-2, couplings {i+1, t}
///   last:   i = end-1 .. begin+1, couplings {i-1, t}
///   middle: i = begin+1 .. end-2, couplings {i+1, begin, t}
LocalFactors local_forward(PartitionData& part, OpCounter* counter);

/// Boundary blocks this worker contributes, A side then B side:
///   first:  diag(e-1), arrow_row(e-1), arrow_col(e-1)
///   last:   diag(s),   arrow_row(s),   arrow_col(s)
///   middle: diag(s), diag(e-1), coupling(s, e-1), coupling(e-1, s),
///           arrow_row(s), arrow_col(s), arrow_row(e-1), arrow_col(e-1)
/// Arrow blocks are omitted when a = 0.
std::string boundary_payload(const PartitionData& part);
std::size_t boundary_payload_bytes(PartitionKind kind, BtaShape shape, bool quadratic) noexcept;

/// This worker's tip contribution, A side then B side; empty when a = 0.
std::vector<complex> tip_contribution(const PartitionData& part);

// --- reduced system ------------------------------------------------------------

enum class BoundarySide : std::uint8_t { top, bottom };

struct ReducedSystem {
  BtaMatrix a;
  std::optional<BtaMatrix> b;
  std::vector<std::size_t> global_block;  ///< reduced index -> diagonal block id
  std::vector<std::pair<std::size_t, BoundarySide>> provenance;  ///< reduced index -> (rank, side)
};

/// Reduced index of each partition boundary: first bottom is 0, middle p has
/// top 2p-1 and bottom 2p, last top is 2P-3.
std::size_t reduced_index(const PartitionPlan& plan, std::size_t rank, BoundarySide side);

ReducedSystem assemble_reduced(const PartitionData& local, const std::vector<std::string>& payloads,
                               std::span<const complex> tip_sum);

struct DistOptions {
  /// Solve the reduced system with a nested in-process distributed solve
  /// (one level) instead of the sequential arrowhead solver.
  bool recursive_reduced = false;
};

SelectedSolution solve_reduced(const ReducedSystem& reduced, SolveMode mode,
                               const DistOptions& options = {});

// --- backward and results --------------------------------------------------------

enum class BlockKind : std::uint8_t { diag, lower, upper, arrow_row, arrow_col, tip };

/// A solution block emitted by its owning worker (`xb` empty in SI mode).
struct OwnedBlock {
  BlockKind kind;
  std::size_t index;
  DenseBlock xa;
  DenseBlock xb;
};

struct PartitionSolution {
  std::vector<OwnedBlock> blocks;
};

/// Seeds the boundary X blocks from the reduced solution and substitutes
/// backward through the local elimination records.
PartitionSolution local_backward(const PartitionData& part, const LocalFactors& factors,
                                 const SelectedSolution& reduced_x, OpCounter* counter);

std::string encode_partition_solution(const PartitionSolution& sol, BtaShape shape);
PartitionSolution decode_partition_solution(std::string_view bytes, BtaShape shape);

/// Places every owned block; throws ProtocolError if a pattern block is
/// missing or delivered twice.
SelectedSolution merge_partitions(BtaShape shape, SolveMode mode,
                                  const std::vector<PartitionSolution>& parts);

struct PhaseTimes {
  double forward = 0.0;
  double reduced = 0.0;
  double backward = 0.0;
  double communication = 0.0;
  double total = 0.0;
};

struct RankOutcome {
  PartitionSolution solution;
  PhaseTimes times;
  OpCounter forward_counts;
  OpCounter backward_counts;
  std::vector<CollectiveEvent> trace;
  std::size_t payload_bytes = 0;
  std::size_t local_steps = 0;
};

/// Full per-worker pipeline: local forward, one AllGather of boundary
/// payloads, one AllReduce of tip contributions (skipped when a = 0),
/// replicated reduced solve, local backward.
RankOutcome dist_rank_solve(Collectives& comm, PartitionData part, SolveMode mode,
                            const DistOptions& options = {});

/// Failure of one or more workers, with rank attribution.
class DistributedError : public std::runtime_error {
 public:
  struct Failure {
    std::size_t rank;
    std::string message;
    bool numerical;
  };
  explicit DistributedError(std::vector<Failure> failures);
  const std::vector<Failure>& failures() const noexcept { return failures_; }
  /// True when any worker hit a singular pivot.
  bool numerical() const noexcept;

 private:
  std::vector<Failure> failures_;
};

struct DistReport {
  PartitionPlan plan;
  std::vector<RankOutcome> ranks;
};

/// In-process distributed solve with one worker thread per partition.
/// `parts == 1` is exactly `solve_selected`; its report then carries timings
/// and counts but no partition blocks.
SelectedSolution dist_solve(const BtaMatrix& a, const BtaMatrix* b, std::size_t parts,
                            SolveMode mode, const DistOptions& options = {},
                            DistReport* report = nullptr);

}  // namespace bta
