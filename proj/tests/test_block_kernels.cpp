#include <cmath>

#include "bta/dense_block.hpp"
#include "bta/errors.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace bta;
using bta::testing::random_block;
using bta::testing::random_dd_block;
using bta::testing::relative_error;

namespace {
const complex I{0.0, 1.0};
}

TEST_CASE("multiply_acc computes a scalar product") {
  DenseBlock c(1, 1);
  multiply_acc(c, 1.0, DenseBlock{{2.0}}, Op::none, DenseBlock{{3.0}}, Op::none, 0.0, nullptr);
  CHECK(c(0, 0) == complex(6.0));
}

TEST_CASE("multiply_acc with alpha zero and beta one leaves C unchanged") {
  DenseBlock c = DenseBlock::identity(2);
  multiply_acc(c, 0.0, random_block(2, 3, 1), Op::none, random_block(3, 2, 2), Op::none, 1.0,
               nullptr);
  CHECK(c == DenseBlock::identity(2));
}

TEST_CASE("multiply_acc conjugates under the adjoint flag") {
  DenseBlock c(1, 1);
  multiply_acc(c, 1.0, DenseBlock{{I}}, Op::adjoint, DenseBlock{{I}}, Op::none, 0.0, nullptr);
  CHECK(c(0, 0) == complex(1.0));
}

TEST_CASE("multiply_acc applies general alpha and beta") {
  const DenseBlock a = random_block(3, 4, 11);
  const DenseBlock b = random_block(4, 2, 12);
  DenseBlock c = random_block(3, 2, 13);
  const DenseBlock c0 = c;
  const complex alpha(0.5, -1.0), beta(2.0, 0.25);
  multiply_acc(c, alpha, a, Op::none, b, Op::none, beta, nullptr);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t col = 0; col < 2; ++col) {
      complex want = beta * c0(r, col);
      for (std::size_t k = 0; k < 4; ++k) want += alpha * a(r, k) * b(k, col);
      CHECK(std::abs(c(r, col) - want) < 1e-14);
    }
  }
}

TEST_CASE("adjoint flags agree with explicit adjoints") {
  const DenseBlock a = random_block(3, 5, 21);
  const DenseBlock b = random_block(4, 5, 22);
  const DenseBlock direct = multiply(a, b.adjoint(), nullptr);
  CHECK(relative_error(multiply(a, b, nullptr, Op::none, Op::adjoint), direct) < 1e-15);
  const DenseBlock both = multiply(a.adjoint(), b, nullptr, Op::adjoint, Op::adjoint);
  CHECK(relative_error(both, multiply(a, b.adjoint(), nullptr)) < 1e-15);
}

TEST_CASE("double conjugate transposition is the identity") {
  const DenseBlock a = random_block(3, 4, 31);
  const DenseBlock b = random_block(4, 3, 32);
  // adjoint(adjoint(A)) via two nested flag applications.
  const DenseBlock ah = multiply(a, DenseBlock::identity(3), nullptr, Op::adjoint, Op::none);
  const DenseBlock twice = multiply(ah, b, nullptr, Op::adjoint, Op::none);
  CHECK(relative_error(twice, multiply(a, b, nullptr)) < 1e-15);
}

TEST_CASE("multiply_acc rejects mismatched shapes and names them") {
  DenseBlock c(2, 2);
  try {
    multiply_acc(c, 1.0, random_block(2, 3, 1), Op::none, random_block(2, 2, 2), Op::none, 0.0,
                 nullptr);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("2x2") != std::string::npos);
  }
}

TEST_CASE("op counter classifies product shapes") {
  OpCounter k(8, 3);
  DenseBlock c(3, 8);
  multiply_acc(c, 1.0, random_block(3, 8, 1), Op::none, random_block(8, 8, 2), Op::none, 0.0, &k);
  CHECK(k.gemm(ShapeClass::abb) == 1);
  CHECK(k.gemm_total() == 1);

  CHECK(k.classify(8, 8, 8) == ShapeClass::bbb);
  CHECK(k.classify(8, 8, 3) == ShapeClass::bba);
  CHECK(k.classify(3, 3, 8) == ShapeClass::aab);
  CHECK(k.classify(8, 3, 3) == ShapeClass::baa);
  CHECK(k.classify(3, 8, 3) == ShapeClass::aba);
  CHECK(k.classify(8, 3, 8) == ShapeClass::bab);
  CHECK(k.classify(3, 3, 3) == ShapeClass::aaa);
  CHECK(k.classify(5, 8, 8) == ShapeClass::other);
}

TEST_CASE("adjoint operands classify by their effective shape") {
  OpCounter k(4, 2);
  // (4x2)^H (4x4) is a (2x4)(4x4) product.
  multiply(random_block(4, 2, 1), random_block(4, 4, 2), &k, Op::adjoint, Op::none);
  CHECK(k.gemm(ShapeClass::abb) == 1);
}

TEST_CASE("op counter difference isolates a window") {
  OpCounter k(2, 1);
  multiply(random_block(2, 2, 1), random_block(2, 2, 2), &k);
  const OpCounter before = k;
  multiply(random_block(2, 2, 1), random_block(2, 1, 2), &k);
  block_inverse(random_dd_block(2, 3), &k);
  const OpCounter d = k - before;
  CHECK(d.gemm(ShapeClass::bbb) == 0);
  CHECK(d.gemm(ShapeClass::bba) == 1);
  CHECK(d.inv_count() == 1);
  CHECK(d.lu_count() == 1);
  CHECK(d.trsm_count() == 2);
}

TEST_CASE("block_lu of a scalar") {
  const LuFactors f = block_lu(DenseBlock{{2.0}}, nullptr);
  CHECK(f.lower() == DenseBlock{{1.0}});
  CHECK(f.upper() == DenseBlock{{2.0}});
  CHECK(f.perm == std::vector<std::size_t>{0});
}

TEST_CASE("block_lu of the exchange matrix is a pure permutation") {
  const LuFactors f = block_lu(DenseBlock{{0.0, 1.0}, {1.0, 0.0}}, nullptr);
  CHECK(f.perm == std::vector<std::size_t>{1, 0});
  CHECK(f.lower() == DenseBlock::identity(2));
  CHECK(f.upper() == DenseBlock::identity(2));
}

TEST_CASE("block_lu reconstructs a random diagonally dominant block") {
  const DenseBlock a = random_dd_block(8, 77);
  const LuFactors f = block_lu(a, nullptr);
  const DenseBlock pa = f.permute_rows(a);
  CHECK(relative_error(multiply(f.lower(), f.upper(), nullptr), pa) <= 1e-13);
  CHECK(relative_error(multiply(f.permutation_matrix(), a, nullptr), pa) == 0.0);
}

TEST_CASE("block_lu pivots toward the largest magnitude") {
  // Random non-dominant block: pivoting is exercised and |L| stays bounded by 1.
  const DenseBlock a = random_block(12, 12, 5);
  const LuFactors f = block_lu(a, nullptr);
  for (std::size_t r = 0; r < 12; ++r) {
    for (std::size_t c = 0; c < r; ++c) CHECK(std::abs(f.packed(r, c)) <= 1.0 + 1e-15);
  }
  CHECK(relative_error(multiply(f.lower(), f.upper(), nullptr), f.permute_rows(a)) <= 1e-12);
}

TEST_CASE("block_lu reports the singular pivot") {
  const DenseBlock s{{1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}, {1.0, 0.0, 1.0}};
  try {
    block_lu(s, nullptr);
    FAIL("expected SingularError");
  } catch (const SingularError& e) {
    CHECK(e.pivot() == 2);
  }
  CHECK_THROWS_AS(block_lu(DenseBlock(2, 2), nullptr), SingularError);
  CHECK_THROWS_AS(block_lu(DenseBlock(2, 3), nullptr), DimensionError);
}

TEST_CASE("block_inverse examples") {
  CHECK(block_inverse(DenseBlock{{2.0}}, nullptr) == DenseBlock{{0.5}});
  const DenseBlock inv = block_inverse(DenseBlock{{2.0, 1.0}, {1.0, 2.0}}, nullptr);
  const DenseBlock want{{2.0 / 3.0, -1.0 / 3.0}, {-1.0 / 3.0, 2.0 / 3.0}};
  CHECK(relative_error(inv, want) < 1e-15);
}

TEST_CASE("block_inverse residual on diagonally dominant blocks") {
  for (std::size_t n : {1u, 7u, 64u, 200u}) {
    const DenseBlock a = random_dd_block(n, 1000 + n);
    const DenseBlock x = block_inverse(a, nullptr);
    const DenseBlock id = DenseBlock::identity(n);
    const double res = frobenius_distance(multiply(a, x, nullptr), id);
    CHECK(res / id.frobenius_norm() <= 1e-12);
    CHECK(res <= 1e-12 * a.frobenius_norm());
  }
}

TEST_CASE("block_inverse propagates singularity") {
  CHECK_THROWS_AS(block_inverse(DenseBlock{{1.0, 1.0}, {1.0, 1.0}}, nullptr), SingularError);
}

TEST_CASE("triangular_solve examples") {
  CHECK(triangular_solve(DenseBlock{{2.0}}, Side::left, UpLo::lower, Diag::non_unit,
                         DenseBlock{{4.0}}, nullptr) == DenseBlock{{2.0}});
  const DenseBlock b = random_block(3, 2, 9);
  CHECK(triangular_solve(DenseBlock::identity(3), Side::left, UpLo::lower, Diag::unit, b,
                         nullptr) == b);
}

TEST_CASE("triangular_solve residuals for every side and triangle") {
  DenseBlock lo = random_block(8, 8, 41), up = random_block(8, 8, 42);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      if (c > r) lo(r, c) = 0.0;
      if (c < r) up(r, c) = 0.0;
    }
    lo(r, r) = 1.0;
    up(r, r) += 3.0;
  }
  const DenseBlock bl = random_block(8, 5, 43);
  const DenseBlock br = random_block(5, 8, 44);

  const DenseBlock x1 = triangular_solve(lo, Side::left, UpLo::lower, Diag::unit, bl, nullptr);
  CHECK(relative_error(multiply(lo, x1, nullptr), bl) <= 1e-13);
  const DenseBlock x2 = triangular_solve(up, Side::left, UpLo::upper, Diag::non_unit, bl, nullptr);
  CHECK(relative_error(multiply(up, x2, nullptr), bl) <= 1e-13);
  const DenseBlock x3 = triangular_solve(lo, Side::right, UpLo::lower, Diag::unit, br, nullptr);
  CHECK(relative_error(multiply(x3, lo, nullptr), br) <= 1e-13);
  const DenseBlock x4 = triangular_solve(up, Side::right, UpLo::upper, Diag::non_unit, br, nullptr);
  CHECK(relative_error(multiply(x4, up, nullptr), br) <= 1e-13);
}

TEST_CASE("triangular_solve unit flag ignores the stored diagonal") {
  DenseBlock t{{5.0, 0.0}, {2.0, 7.0}};
  const DenseBlock b{{1.0}, {4.0}};
  const DenseBlock x = triangular_solve(t, Side::left, UpLo::lower, Diag::unit, b, nullptr);
  CHECK(x == DenseBlock{{1.0}, {2.0}});
}

TEST_CASE("triangular_solve rejects a zero diagonal and bad shapes") {
  const DenseBlock t{{1.0, 0.0}, {1.0, 0.0}};
  CHECK_THROWS_AS(triangular_solve(t, Side::left, UpLo::lower, Diag::non_unit, DenseBlock(2, 1),
                                   nullptr),
                  SingularError);
  CHECK_NOTHROW(triangular_solve(t, Side::left, UpLo::lower, Diag::unit, DenseBlock(2, 1), nullptr));
  CHECK_THROWS_AS(triangular_solve(DenseBlock::identity(2), Side::right, UpLo::lower, Diag::unit,
                                   DenseBlock(2, 3), nullptr),
                  DimensionError);
}

TEST_CASE("lu solves against A and its adjoint") {
  const DenseBlock a = random_block(9, 9, 51);
  const LuFactors f = block_lu(a, nullptr);
  const DenseBlock b = random_block(9, 3, 52);
  DenseBlock x = b;
  lu_solve_inplace(f, x, nullptr);
  CHECK(relative_error(multiply(a, x, nullptr), b) <= 1e-12);
  DenseBlock y = b;
  lu_solve_adjoint_inplace(f, y, nullptr);
  CHECK(relative_error(multiply(a, y, nullptr, Op::adjoint), b) <= 1e-12);
}

TEST_CASE("zero-sized blocks pass through the kernels") {
  DenseBlock c(0, 4);
  CHECK_NOTHROW(multiply_acc(c, 1.0, DenseBlock(0, 3), Op::none, DenseBlock(3, 4), Op::none, 0.0,
                             nullptr));
  DenseBlock d(2, 2);
  multiply_acc(d, 1.0, DenseBlock(2, 0), Op::none, DenseBlock(0, 2), Op::none, 0.0, nullptr);
  CHECK(d == DenseBlock(2, 2));
  CHECK(block_inverse(DenseBlock(0, 0), nullptr).empty());
}
