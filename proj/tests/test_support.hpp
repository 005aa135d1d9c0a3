#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

#include "bta/bta_matrix.hpp"
#include "bta/dense_block.hpp"

namespace bta::testing {

inline DenseBlock random_block(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseBlock m(rows, cols);
  for (auto& v : m.data()) {
    const double re = u(rng);
    v = complex(re, u(rng));
  }
  return m;
}

inline DenseBlock random_dd_block(std::size_t n, std::uint64_t seed) {
  DenseBlock m = random_block(n, n, seed);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += std::abs(m(r, c));
    m(r, r) += 1.5 * (s + 1.0);
  }
  return m;
}

inline double relative_error(const DenseBlock& got, const DenseBlock& want) {
  const double ref = want.frobenius_norm();
  const double d = frobenius_distance(got, want);
  return ref > 0.0 ? d / ref : d;
}

/// Largest per-block relative Frobenius error between two conforming matrices.
inline double max_block_error(const BtaMatrix& got, const BtaMatrix& want) {
  double worst = 0.0;
  auto scan = [&](const std::vector<DenseBlock>& g, const std::vector<DenseBlock>& w) {
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, relative_error(g[i], w[i]));
  };
  scan(got.diag, want.diag);
  scan(got.lower, want.lower);
  scan(got.upper, want.upper);
  scan(got.arrow_row, want.arrow_row);
  scan(got.arrow_col, want.arrow_col);
  if (got.a() > 0) worst = std::max(worst, relative_error(got.tip, want.tip));
  return worst;
}

}  // namespace bta::testing
