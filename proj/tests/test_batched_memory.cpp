// Replaces global allocation to measure the peak live heap during a solve.
#include <atomic>
#include <cstdlib>
#include <new>

#include "bta/baselines.hpp"
#include "bta/bta_io.hpp"
#include "doctest.h"

namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};

void* tracked_alloc(std::size_t size) {
  // Size header keeps the accounting exact on free.
  auto* p = static_cast<std::size_t*>(std::malloc(size + sizeof(std::max_align_t)));
  if (p == nullptr) throw std::bad_alloc();
  *p = size;
  const std::size_t now = g_live.fetch_add(size) + size;
  std::size_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
  return reinterpret_cast<char*>(p) + sizeof(std::max_align_t);
}

void tracked_free(void* ptr) noexcept {
  if (ptr == nullptr) return;
  auto* p = reinterpret_cast<std::size_t*>(static_cast<char*>(ptr) - sizeof(std::max_align_t));
  g_live.fetch_sub(*p);
  std::free(p);
}

// Peak heap growth above the live level at entry.
template <typename F>
std::size_t peak_growth(F&& f) {
  const std::size_t base = g_live.load();
  g_peak.store(base);
  f();
  return g_peak.load() - base;
}

}  // namespace

void* operator new(std::size_t size) { return tracked_alloc(size); }
void* operator new[](std::size_t size) { return tracked_alloc(size); }
void operator delete(void* p) noexcept { tracked_free(p); }
void operator delete[](void* p) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t) noexcept { tracked_free(p); }

TEST_CASE("batched_solve stays within LU factors, output and a few vectors") {
  using namespace bta;
  const BtaMatrix a = generate_dd_bta(12, 16, 8, 3);
  const BtaMatrix b = hermitianize(generate_random_bta(12, 16, 8, 4));
  const std::size_t N = a.order();
  const std::size_t entry = sizeof(complex);
  const std::size_t lu_bytes = N * N * entry + N * sizeof(std::size_t);
  const std::size_t out_bytes = 2 * bta_payload_bytes(a.shape());
  const std::size_t vector_bytes = N * entry;
  const std::size_t slack = 16 * 1024;  // block headers, small vectors

  const std::size_t batched = peak_growth([&] { (void)batched_solve(a, &b); });
  const std::size_t dense = peak_growth([&] { (void)dense_solve(a, &b, SolveMode::si_sq); });
  MESSAGE("N=" << N << " batched peak=" << batched << " bytes; LU=" << lu_bytes
               << " out=" << out_bytes << " vector=" << vector_bytes << "; dense peak=" << dense);

  CHECK(batched <= lu_bytes + out_bytes + 4 * vector_bytes + slack);
  // The dense reference materializes full N x N intermediates and must not fit.
  CHECK(dense > lu_bytes + out_bytes + 4 * vector_bytes + slack);
}
