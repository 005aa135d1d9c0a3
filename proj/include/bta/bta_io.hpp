#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "bta/bta_matrix.hpp"

namespace bta {

/// Failure while decoding a `BTA1` stream. `kind()` tells the cases apart.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, truncated, shape, dtype, io };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint8_t kComplex128Tag = 0x10;

/// Header size in bytes: magic (4) + n, b, a (3 x u64) + dtype tag (1).
inline constexpr std::size_t kBtaHeaderBytes = 4 + 3 * 8 + 1;

/// Number of payload bytes for a given shape.
std::uint64_t bta_payload_bytes(BtaShape shape);

void write_bta(const BtaMatrix& m, std::ostream& out);
BtaMatrix read_bta(std::istream& in);

void write_bta(const BtaMatrix& m, const std::filesystem::path& path);
BtaMatrix read_bta(const std::filesystem::path& path);

/// Reads only the header; throws FormatError like `read_bta`.
BtaShape read_bta_shape(const std::filesystem::path& path);

/// Appends the little-endian complex128 encoding of a block to `out`.
void append_block_bytes(const DenseBlock& blk, std::string& out);
/// Decodes a rows x cols block starting at `offset`; advances `offset`.
DenseBlock parse_block_bytes(std::string_view bytes, std::size_t& offset, std::size_t rows,
                             std::size_t cols);

}  // namespace bta
