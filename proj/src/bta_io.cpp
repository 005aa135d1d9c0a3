#include "bta/bta_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>

namespace bta {

namespace {

constexpr char kMagic[4] = {'B', 'T', 'A', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(std::string_view bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

// Blocks in file order; a BT matrix simply has empty arrow lists.
template <typename M, typename F>
void visit_blocks(M& m, F&& f) {
  for (auto& blk : m.diag) f(blk);
  for (auto& blk : m.lower) f(blk);
  for (auto& blk : m.upper) f(blk);
  for (auto& blk : m.arrow_row) f(blk);
  for (auto& blk : m.arrow_col) f(blk);
  if (m.a() > 0) f(m.tip);
}

std::string header_bytes(BtaShape s) {
  std::string h(kMagic, 4);
  put_u64(h, s.n);
  put_u64(h, s.b);
  put_u64(h, s.a);
  h.push_back(static_cast<char>(kComplex128Tag));
  return h;
}

// Parses and validates the header; returns the declared shape.
BtaShape parse_header(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::bad_magic, "BTA1: missing magic bytes");
  }
  if (bytes.size() < kBtaHeaderBytes) {
    throw FormatError(FormatError::Kind::truncated, "BTA1: header truncated");
  }
  BtaShape s{get_u64(bytes, 4), get_u64(bytes, 12), get_u64(bytes, 20)};
  const auto tag = static_cast<std::uint8_t>(bytes[28]);
  if (tag != kComplex128Tag) {
    throw FormatError(FormatError::Kind::dtype,
                      "BTA1: unsupported dtype tag " + std::to_string(tag));
  }
  if (s.n == 0 || s.b == 0) {
    throw FormatError(FormatError::Kind::shape, "BTA1: header declares n = " +
                                                    std::to_string(s.n) + ", b = " +
                                                    std::to_string(s.b));
  }
  // Reject shapes whose payload size would overflow 64 bits.
  const long double entries = static_cast<long double>(s.n) * (3.0L * s.b * s.b + 2.0L * s.a * s.b) +
                              static_cast<long double>(s.a) * s.a;
  if (entries * 16.0L > static_cast<long double>(std::numeric_limits<std::uint64_t>::max() / 2)) {
    throw FormatError(FormatError::Kind::shape, "BTA1: declared shape is too large");
  }
  return s;
}

}  // namespace

std::uint64_t bta_payload_bytes(BtaShape s) {
  const std::uint64_t bb = s.b * s.b;
  std::uint64_t entries = s.n * bb + 2 * (s.n - 1) * bb;
  if (s.a > 0) entries += 2 * s.n * s.a * s.b + s.a * s.a;
  return entries * 16;
}

void append_block_bytes(const DenseBlock& blk, std::string& out) {
  for (const complex& v : blk.data()) {
    put_u64(out, std::bit_cast<std::uint64_t>(v.real()));
    put_u64(out, std::bit_cast<std::uint64_t>(v.imag()));
  }
}

DenseBlock parse_block_bytes(std::string_view bytes, std::size_t& offset, std::size_t rows,
                             std::size_t cols) {
  const std::size_t need = rows * cols * 16;
  if (offset > bytes.size() || bytes.size() - offset < need) {
    throw FormatError(FormatError::Kind::truncated, "BTA1: block payload truncated");
  }
  DenseBlock blk(rows, cols);
  for (complex& v : blk.data()) {
    const double re = std::bit_cast<double>(get_u64(bytes, offset));
    const double im = std::bit_cast<double>(get_u64(bytes, offset + 8));
    v = complex(re, im);
    offset += 16;
  }
  return blk;
}

void write_bta(const BtaMatrix& m, std::ostream& out) {
  m.check_consistent();
  std::string buf = header_bytes(m.shape());
  buf.reserve(kBtaHeaderBytes + bta_payload_bytes(m.shape()));
  visit_blocks(m, [&](const DenseBlock& blk) { append_block_bytes(blk, buf); });
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError(FormatError::Kind::io, "BTA1: write failed");
}

BtaMatrix read_bta(std::istream& in) {
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const BtaShape s = parse_header(bytes);
  const std::uint64_t expected = kBtaHeaderBytes + bta_payload_bytes(s);
  if (bytes.size() < expected) {
    throw FormatError(FormatError::Kind::truncated,
                      "BTA1: payload has " + std::to_string(bytes.size() - kBtaHeaderBytes) +
                          " bytes, header needs " + std::to_string(expected - kBtaHeaderBytes));
  }
  if (bytes.size() > expected) {
    throw FormatError(FormatError::Kind::shape,
                      "BTA1: " + std::to_string(bytes.size() - expected) +
                          " trailing bytes beyond the declared shape");
  }
  BtaMatrix m(s);
  std::size_t offset = kBtaHeaderBytes;
  visit_blocks(m, [&](DenseBlock& blk) {
    blk = parse_block_bytes(bytes, offset, blk.rows(), blk.cols());
  });
  return m;
}

void write_bta(const BtaMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::io, "BTA1: cannot open " + path.string());
  write_bta(m, out);
}

BtaMatrix read_bta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "BTA1: cannot open " + path.string());
  return read_bta(in);
}

BtaShape read_bta_shape(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "BTA1: cannot open " + path.string());
  std::string head(kBtaHeaderBytes, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  return parse_header(head);
}

}  // namespace bta
