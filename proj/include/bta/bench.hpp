#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bta/bta_matrix.hpp"
#include "bta/dense_block.hpp"
#include "bta/dist.hpp"

namespace bta {

enum class Algo : std::uint8_t { rgf, dist, dense, batched };

std::string_view algo_name(Algo algo) noexcept;
/// Throws ParameterError for unknown names.
Algo parse_algo(std::string_view name);
std::string_view mode_name(SolveMode mode) noexcept;
/// Accepts "si" and "siq". Throws ParameterError otherwise.
SolveMode parse_mode(std::string_view name);

struct BenchConfig {
  Algo algo = Algo::rgf;
  SolveMode mode = SolveMode::si;
  std::size_t parts = 1;
  std::size_t repeat = 10;
  DistOptions dist;
  /// Compare the last run against the dense oracle.
  bool residual = false;
};

/// Sample mean with a two-sided 95% Student-t confidence interval.
struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

SampleStats summarize(std::span<const double> samples);

/// One timed run. Phase times are those of rank 0 for distributed runs, and
/// op counts are summed over all ranks. The dense baselines report their
/// whole solve as `forward`.
struct RunSample {
  PhaseTimes times;
  OpCounter forward_counts;
  OpCounter backward_counts;
};

/// Runs the configured solver once.
RunSample run_once(const BtaMatrix& a, const BtaMatrix* b, const BenchConfig& config,
                   SelectedSolution* out = nullptr);

inline constexpr std::size_t kPhaseCount = 4;
inline constexpr std::string_view kPhaseNames[kPhaseCount] = {"forward", "reduced", "backward",
                                                              "communication"};

struct BenchResult {
  BenchConfig config;
  BtaShape shape;
  std::vector<RunSample> runs;
  SampleStats phases[kPhaseCount];
  SampleStats total;
  std::optional<double> residual;      ///< worst block error vs the dense oracle
  std::optional<double> efficiency;    ///< weak-scaling parallel efficiency
  std::optional<std::size_t> ref_parts;
};

BenchResult run_bench(const BtaMatrix& a, const BtaMatrix* b, const BenchConfig& config);

/// Line-oriented `key=value` report. Every line other than a phase row holds
/// one pair; phase rows hold `phase=<name>` followed by their statistics.
std::string format_report(const BenchResult& result);

/// Weak-scaling sweep at fixed block size: for every P the problem has
/// `blocks_per_rank * P` diagonal blocks and is generated from `seed`.
/// The P = 1 reference is added when absent; efficiency is T_ref / T_P on
/// mean total wall time.
struct WeakScalingSpec {
  std::size_t blocks_per_rank = 4;
  std::size_t b = 16;
  std::size_t a = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> parts{1, 2, 4, 8};
};

std::vector<BenchResult> weak_scaling(const WeakScalingSpec& spec, const BenchConfig& config);

}  // namespace bta
