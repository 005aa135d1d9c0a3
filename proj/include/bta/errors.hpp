#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bta {

/// Operand shapes do not fit the requested operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid user-facing parameter (generator shape, partition count, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An exactly zero pivot was met during factorization.
///
/// `pivot()` is the row/column inside the failing block. `block()` is the
/// diagonal block index when the failure happened inside a block-sequential
/// solver, or `npos` for a standalone kernel call.
class SingularError : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  SingularError(std::size_t pivot, std::size_t block, const std::string& what)
      : std::runtime_error(what), pivot_(pivot), block_(block) {}

  std::size_t pivot() const noexcept { return pivot_; }
  std::size_t block() const noexcept { return block_; }

 private:
  std::size_t pivot_;
  std::size_t block_;
};

/// Dense oracle refused an input that would not fit its memory guard.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched messages between distributed workers.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bta
