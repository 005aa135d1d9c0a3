#include "bta/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "bta/baselines.hpp"
#include "bta/compare.hpp"
#include "bta/errors.hpp"
#include "bta/rgf.hpp"

namespace bta {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

void write_counts(std::ostringstream& out, std::string_view phase, const OpCounter& c) {
  for (std::size_t k = 0; k < kShapeClassCount; ++k) {
    const auto cls = static_cast<ShapeClass>(k);
    out << "counts." << phase << '.' << shape_class_name(cls) << '=' << c.gemm(cls) << '\n';
  }
  out << "counts." << phase << ".lu=" << c.lu_count() << '\n';
  out << "counts." << phase << ".trsm=" << c.trsm_count() << '\n';
  out << "counts." << phase << ".inv=" << c.inv_count() << '\n';
}

}  // namespace

std::string_view algo_name(Algo algo) noexcept {
  switch (algo) {
    case Algo::rgf: return "rgf";
    case Algo::dist: return "dist";
    case Algo::dense: return "dense";
    case Algo::batched: return "batched";
  }
  return "unknown";
}

Algo parse_algo(std::string_view name) {
  for (Algo a : {Algo::rgf, Algo::dist, Algo::dense, Algo::batched}) {
    if (algo_name(a) == name) return a;
  }
  throw ParameterError("unknown solver '" + std::string(name) + "'");
}

std::string_view mode_name(SolveMode mode) noexcept {
  return mode == SolveMode::si_sq ? "siq" : "si";
}

SolveMode parse_mode(std::string_view name) {
  if (name == "si") return SolveMode::si;
  if (name == "siq") return SolveMode::si_sq;
  throw ParameterError("unknown mode '" + std::string(name) + "' (expected si or siq)");
}

SampleStats summarize(std::span<const double> samples) {
  SampleStats s;
  s.count = samples.size();
  if (samples.empty()) return s;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(s.count);
  s.ci_low = s.ci_high = s.mean;
  if (s.count < 2) return s;
  double ss = 0.0;
  for (double v : samples) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.count - 1));
  const boost::math::students_t dist(static_cast<double>(s.count - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  const double half = t * s.stddev / std::sqrt(static_cast<double>(s.count));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

RunSample run_once(const BtaMatrix& a, const BtaMatrix* b, const BenchConfig& config,
                   SelectedSolution* out) {
  if (config.mode == SolveMode::si_sq && b == nullptr) {
    throw ParameterError("quadratic mode needs a right-hand side B");
  }
  const BtaMatrix* rhs = config.mode == SolveMode::si_sq ? b : nullptr;
  RunSample s;
  s.forward_counts = OpCounter(a.b(), a.a());
  s.backward_counts = OpCounter(a.b(), a.a());
  SelectedSolution x;
  const auto t0 = Clock::now();
  switch (config.algo) {
    case Algo::rgf: {
      const RgfFactors f = bta_forward(a, rhs, &s.forward_counts);
      s.times.forward = seconds_since(t0);
      const auto t1 = Clock::now();
      x = bta_backward(f, a, rhs, &s.backward_counts);
      s.times.backward = seconds_since(t1);
      break;
    }
    case Algo::dist: {
      DistReport rep;
      x = dist_solve(a, rhs, config.parts, config.mode, config.dist, &rep);
      s.times = rep.ranks.front().times;
      for (const RankOutcome& o : rep.ranks) {
        s.forward_counts += o.forward_counts;
        s.backward_counts += o.backward_counts;
      }
      break;
    }
    case Algo::dense:
      x = dense_solve(a, rhs, config.mode);
      s.times.forward = seconds_since(t0);
      break;
    case Algo::batched:
      x = batched_solve(a, rhs);
      s.times.forward = seconds_since(t0);
      break;
  }
  s.times.total = seconds_since(t0);
  if (out != nullptr) *out = std::move(x);
  return s;
}

BenchResult run_bench(const BtaMatrix& a, const BtaMatrix* b, const BenchConfig& config) {
  if (config.repeat == 0) throw ParameterError("bench: repeat must be >= 1");
  BenchResult res;
  res.config = config;
  res.shape = a.shape();
  SelectedSolution last;
  for (std::size_t r = 0; r < config.repeat; ++r) {
    res.runs.push_back(run_once(a, b, config, r + 1 == config.repeat ? &last : nullptr));
  }
  std::vector<double> v(res.runs.size());
  auto stats_of = [&](auto field) {
    std::transform(res.runs.begin(), res.runs.end(), v.begin(), field);
    return summarize(v);
  };
  res.phases[0] = stats_of([](const RunSample& s) { return s.times.forward; });
  res.phases[1] = stats_of([](const RunSample& s) { return s.times.reduced; });
  res.phases[2] = stats_of([](const RunSample& s) { return s.times.backward; });
  res.phases[3] = stats_of([](const RunSample& s) { return s.times.communication; });
  res.total = stats_of([](const RunSample& s) { return s.times.total; });

  if (config.residual) {
    const BtaMatrix* rhs = config.mode == SolveMode::si_sq ? b : nullptr;
    res.residual = compare_solutions(last, dense_solve(a, rhs, config.mode)).worst;
  }
  return res;
}

std::string format_report(const BenchResult& r) {
  std::ostringstream out;
  out.precision(9);
  out << "solver=" << algo_name(r.config.algo) << '\n';
  out << "mode=" << mode_name(r.config.mode) << '\n';
  out << "n=" << r.shape.n << '\n';
  out << "b=" << r.shape.b << '\n';
  out << "a=" << r.shape.a << '\n';
  out << "parts=" << (r.config.algo == Algo::dist ? r.config.parts : 1) << '\n';
  out << "repeat=" << r.runs.size() << '\n';
  for (std::size_t k = 0; k < kPhaseCount; ++k) {
    const SampleStats& s = r.phases[k];
    out << "phase=" << kPhaseNames[k] << " mean_s=" << s.mean << " ci95_low_s=" << s.ci_low
        << " ci95_high_s=" << s.ci_high << " stddev_s=" << s.stddev << '\n';
  }
  out << "total.mean_s=" << r.total.mean << '\n';
  out << "total.ci95_low_s=" << r.total.ci_low << '\n';
  out << "total.ci95_high_s=" << r.total.ci_high << '\n';
  if (!r.runs.empty()) {
    write_counts(out, "forward", r.runs.back().forward_counts);
    write_counts(out, "backward", r.runs.back().backward_counts);
  }
  if (r.residual) out << "residual.max_block_error=" << *r.residual << '\n';
  if (r.ref_parts) out << "efficiency.reference_parts=" << *r.ref_parts << '\n';
  if (r.efficiency) out << "efficiency=" << *r.efficiency << '\n';
  return out.str();
}

std::vector<BenchResult> weak_scaling(const WeakScalingSpec& spec, const BenchConfig& config) {
  if (spec.blocks_per_rank < 2) {
    throw ParameterError("weak scaling: need at least 2 blocks per rank");
  }
  std::vector<std::size_t> parts = spec.parts;
  if (std::find(parts.begin(), parts.end(), 1) == parts.end()) parts.insert(parts.begin(), 1);
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());

  std::vector<BenchResult> out;
  for (std::size_t p : parts) {
    const std::size_t n = spec.blocks_per_rank * p;
    const BtaMatrix a = generate_dd_bta(n, spec.b, spec.a, spec.seed);
    const BtaMatrix b = generate_rhs(n, spec.b, spec.a, spec.seed, true);
    BenchConfig c = config;
    c.algo = Algo::dist;
    c.parts = p;
    out.push_back(run_bench(a, &b, c));
  }
  const double t_ref = out.front().total.mean;
  for (BenchResult& r : out) {
    r.ref_parts = 1;
    r.efficiency = t_ref / r.total.mean;
  }
  return out;
}

}  // namespace bta
