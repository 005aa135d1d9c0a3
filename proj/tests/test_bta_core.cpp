#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "bta/bta_io.hpp"
#include "bta/bta_matrix.hpp"
#include "bta/errors.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace bta;

namespace {

std::filesystem::path temp_file(const std::string& stem) {
  return std::filesystem::temp_directory_path() /
         (stem + "_" + std::to_string(::getpid()) + ".bta");
}

bool row_dominant(const DenseBlock& d) {
  for (std::size_t r = 0; r < d.rows(); ++r) {
    double off = 0.0;
    for (std::size_t c = 0; c < d.cols(); ++c) {
      if (c != r) off += std::abs(d(r, c));
    }
    if (!(std::abs(d(r, r)) > off)) return false;
  }
  return true;
}

bool bitwise_equal(const BtaMatrix& x, const BtaMatrix& y) {
  std::string bx, by;
  auto enc = [](const BtaMatrix& m, std::string& s) {
    std::ostringstream o;
    write_bta(m, o);
    s = o.str();
  };
  enc(x, bx);
  enc(y, by);
  return bx == by;
}

}  // namespace

TEST_CASE("generator: a single scalar block is dominant") {
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const BtaMatrix m = generate_dd_bta(1, 1, 0, seed);
    CHECK(std::abs(m.diag[0](0, 0)) > 1.0);
  }
}

TEST_CASE("generator: dense expansion places pattern zeros") {
  const BtaMatrix m = generate_dd_bta(3, 2, 1, 5);
  const DenseBlock d = to_dense(m);
  REQUIRE(d.rows() == 7);
  for (auto [r, c] : {std::pair{0, 4}, {0, 5}, {4, 0}, {5, 0}, {1, 4}, {5, 1}}) {
    CHECK(d(r, c) == complex{});
  }
  for (std::size_t r = 0; r < 7; ++r) {
    for (std::size_t c = 0; c < 7; ++c) {
      if (!in_pattern(m.shape(), r, c)) CHECK(d(r, c) == complex{});
      if (r == 6 || c == 6) CHECK(d(r, c) != complex{});
    }
  }
}

TEST_CASE("generator: condition number stays small") {
  const BtaMatrix m = generate_dd_bta(8, 16, 4, 42);
  const DenseBlock d = to_dense(m);
  using Mat = Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Mat e = Eigen::Map<const Mat>(d.data().data(), d.rows(), d.cols());
  const Eigen::JacobiSVD<Mat> svd(e);
  const auto& s = svd.singularValues();
  CHECK(s(0) / s(s.size() - 1) < 1e3);
}

TEST_CASE("generator: every global row is strictly dominant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 1 + seed % 5, b = 1 + seed % 4, a = seed % 3;
    CHECK(row_dominant(to_dense(generate_dd_bta(n, b, a, seed))));
  }
  CHECK(row_dominant(to_dense(generate_dd_bta(4, 3, 2, 8, 1.0))));
}

TEST_CASE("generator: deterministic per seed and sensitive to it") {
  CHECK(generate_dd_bta(4, 3, 2, 17) == generate_dd_bta(4, 3, 2, 17));
  CHECK_FALSE(generate_dd_bta(4, 3, 2, 17) == generate_dd_bta(4, 3, 2, 18));
}

TEST_CASE("generator: a=0 matches the block-tridiagonal generator") {
  const BtaMatrix x = generate_dd_bta(5, 3, 0, 23);
  const BtaMatrix y = generate_dd_bt(5, 3, 23);
  CHECK(x.diag == y.diag);
  CHECK(x.lower == y.lower);
  CHECK(x.upper == y.upper);
  CHECK(x.arrow_row.empty());
  CHECK(x.tip.empty());
}

TEST_CASE("generator: parameter validation") {
  CHECK_THROWS_AS(generate_dd_bta(0, 2, 0, 1), ParameterError);
  CHECK_THROWS_AS(generate_dd_bta(2, 0, 0, 1), ParameterError);
  CHECK_THROWS_AS(generate_dd_bta(2, 2, 0, 1, 0.5), ParameterError);
}

TEST_CASE("to_dense examples") {
  const BtaShape s{3, 2, 1};
  const DenseBlock d = to_dense(BtaMatrix::identity(s));
  CHECK(d == DenseBlock::identity(7));

  BtaMatrix m(BtaShape{2, 1, 0});
  m.diag = {DenseBlock{{2.0}}, DenseBlock{{2.0}}};
  m.lower = {DenseBlock{{1.0}}};
  m.upper = {DenseBlock{{1.0}}};
  CHECK(to_dense(m) == DenseBlock{{2.0, 1.0}, {1.0, 2.0}});
}

TEST_CASE("mask_to_pattern inverts to_dense") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const BtaMatrix m = generate_random_bta(1 + seed % 4, 1 + seed % 3, seed % 3, seed);
    CHECK(mask_to_pattern(to_dense(m), m.shape()) == m);
  }
}

TEST_CASE("mask_to_pattern keeps only in-pattern entries") {
  const BtaShape s{3, 2, 1};
  CHECK(mask_to_pattern(DenseBlock(7, 7), s) == BtaMatrix(s));
  DenseBlock d(7, 7);
  d(0, 4) = complex(3.0, 1.0);
  CHECK(mask_to_pattern(d, s) == BtaMatrix(s));
  CHECK_THROWS_AS(mask_to_pattern(DenseBlock(6, 7), s), DimensionError);
}

TEST_CASE("hermitianize examples") {
  const BtaMatrix m = generate_random_bta(4, 3, 2, 3);
  const BtaMatrix h = hermitianize(m);
  CHECK(is_pattern_hermitian(h, 0.0));
  CHECK(hermitianize(h) == h);

  BtaMatrix ii = BtaMatrix::identity(BtaShape{2, 2, 1});
  for (auto& d : ii.diag) d *= complex(0.0, 1.0);
  ii.tip *= complex(0.0, 1.0);
  CHECK(hermitianize(ii) == BtaMatrix(ii.shape()));

  // Against the dense definition (M + M^H) / 2.
  const DenseBlock dm = to_dense(m);
  DenseBlock want = dm + dm.adjoint();
  want *= 0.5;
  CHECK(bta::testing::max_block_error(h, mask_to_pattern(want, m.shape())) < 1e-15);
  CHECK_FALSE(is_pattern_hermitian(m, 1e-12));
}

TEST_CASE("pattern helpers") {
  const BtaShape s{4, 2, 3};
  CHECK(block_of(s, 0) == 0);
  CHECK(block_of(s, 7) == 3);
  CHECK(block_of(s, 8) == 4);
  CHECK(in_pattern(s, 0, 3));
  CHECK_FALSE(in_pattern(s, 0, 4));
  CHECK(in_pattern(s, 0, 10));
}

TEST_CASE("check_consistent flags malformed containers") {
  BtaMatrix m = generate_random_bta(3, 2, 1, 1);
  CHECK_NOTHROW(m.check_consistent());
  m.lower[1] = DenseBlock(2, 3);
  CHECK_THROWS_AS(m.check_consistent(), DimensionError);
  m = generate_random_bta(3, 2, 1, 1);
  m.arrow_row.pop_back();
  CHECK_THROWS_AS(m.check_consistent(), DimensionError);
}

// --- BTA1 format -----------------------------------------------------------

TEST_CASE("BTA1 round trip is bitwise lossless") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BtaMatrix m = generate_random_bta(1 + seed % 5, 1 + seed % 4, seed % 3, seed);
    std::stringstream io;
    write_bta(m, io);
    CHECK(io.str().size() == kBtaHeaderBytes + bta_payload_bytes(m.shape()));
    const BtaMatrix back = read_bta(io);
    CHECK(back == m);
    CHECK(bitwise_equal(back, m));
  }
}

TEST_CASE("BTA1 preserves special values bit for bit") {
  BtaMatrix m(BtaShape{1, 2, 0});
  m.diag[0](0, 0) = complex(-0.0, std::numeric_limits<double>::denorm_min());
  m.diag[0](1, 1) = complex(std::numeric_limits<double>::max(), 1e-300);
  std::stringstream io;
  write_bta(m, io);
  const BtaMatrix back = read_bta(io);
  CHECK(std::signbit(back.diag[0](0, 0).real()));
  CHECK(bitwise_equal(back, m));
}

TEST_CASE("BTA1 header layout is little-endian") {
  BtaMatrix m(BtaShape{2, 1, 0});
  m.diag[0](0, 0) = 1.0;
  std::ostringstream o;
  write_bta(m, o);
  const std::string s = o.str();
  CHECK(s.substr(0, 4) == "BTA1");
  CHECK(static_cast<unsigned char>(s[4]) == 2);
  CHECK(static_cast<unsigned char>(s[12]) == 1);
  CHECK(static_cast<unsigned char>(s[28]) == 0x10);
  // 1.0 = 0x3ff0000000000000, low byte first.
  CHECK(static_cast<unsigned char>(s[29 + 7]) == 0x3f);
  CHECK(static_cast<unsigned char>(s[29 + 6]) == 0xf0);
}

TEST_CASE("BTA1 error kinds") {
  auto kind_of = [](const std::string& bytes) {
    std::istringstream in(bytes);
    try {
      read_bta(in);
    } catch (const FormatError& e) {
      return e.kind();
    }
    FAIL("expected FormatError");
    return FormatError::Kind::io;
  };
  CHECK(kind_of("") == FormatError::Kind::bad_magic);
  CHECK(kind_of("BTA2xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx") == FormatError::Kind::bad_magic);

  std::ostringstream one;
  write_bta(generate_random_bta(1, 2, 0, 3), one);
  std::string lying = one.str();
  lying[4] = 2;  // header claims n = 2, payload is for n = 1
  CHECK(kind_of(lying) == FormatError::Kind::truncated);
  CHECK(kind_of(one.str().substr(0, 20)) == FormatError::Kind::truncated);

  std::string bad_tag = one.str();
  bad_tag[28] = 0x08;
  CHECK(kind_of(bad_tag) == FormatError::Kind::dtype);

  std::string zero_b = one.str();
  zero_b[12] = 0;
  CHECK(kind_of(zero_b) == FormatError::Kind::shape);
  CHECK(kind_of(one.str() + std::string(16, '\0')) == FormatError::Kind::shape);
}

TEST_CASE("BTA1 file helpers") {
  const auto path = temp_file("bta_core_io");
  const BtaMatrix m = generate_dd_bta(3, 2, 2, 9);
  write_bta(m, path);
  CHECK(read_bta_shape(path) == m.shape());
  CHECK(read_bta(path) == m);
  std::filesystem::remove(path);
  try {
    read_bta(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::io);
  }
}
