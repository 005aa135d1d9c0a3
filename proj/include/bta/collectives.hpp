#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bta/dense_block.hpp"

namespace bta {

enum class CollectiveKind : std::uint8_t { all_gather, all_reduce, gather_to_root };

std::string_view collective_name(CollectiveKind kind) noexcept;

/// One collective call as seen by the calling rank.
struct CollectiveEvent {
  CollectiveKind kind;
  std::uint32_t round;
  std::size_t bytes_sent;  ///< this rank's contribution
  std::size_t elements;    ///< complex entries for all_reduce, 0 otherwise
};

/// Communication contract shared by all transports. Results are identical on
/// every rank and never depend on arrival order.
class Collectives {
 public:
  virtual ~Collectives() = default;

  virtual std::size_t rank() const noexcept = 0;
  virtual std::size_t size() const noexcept = 0;

  /// Every rank receives every payload, indexed by rank.
  std::vector<std::string> all_gather(std::string_view payload);
  /// Element-wise sum over ranks, accumulated in rank order.
  std::vector<complex> all_reduce_sum(std::span<const complex> values);
  /// Rank 0 receives every payload; other ranks get an empty vector.
  std::vector<std::string> gather_to_root(std::string_view payload);

  const std::vector<CollectiveEvent>& trace() const noexcept { return trace_; }
  std::size_t count(CollectiveKind kind) const noexcept;
  void clear_trace() noexcept { trace_.clear(); }

 protected:
  /// Transport primitive: exchange one payload per rank. With `to_root_only`
  /// only rank 0 needs the result.
  virtual std::vector<std::string> exchange(std::string_view payload, CollectiveKind kind,
                                            std::uint32_t round, bool to_root_only) = 0;

 private:
  std::vector<CollectiveEvent> trace_;
  std::uint32_t next_round_ = 0;
};

/// Shared rendezvous for P in-process workers (one thread per rank).
class InProcessGroup {
 public:
  explicit InProcessGroup(std::size_t size);
  InProcessGroup(const InProcessGroup&) = delete;
  InProcessGroup& operator=(const InProcessGroup&) = delete;

  std::size_t size() const noexcept { return size_; }
  std::unique_ptr<Collectives> communicator(std::size_t rank);

  /// Wakes every blocked rank with a ProtocolError; later calls fail too.
  void abort();

 private:
  friend class InProcessCommunicator;
  std::vector<std::string> exchange(std::size_t rank, std::string_view payload,
                                    CollectiveKind kind, std::uint32_t round);

  std::size_t size_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t generation_ = 0;
  std::size_t arrived_ = 0;
  bool aborted_ = false;
  CollectiveKind kind_ = CollectiveKind::all_gather;
  std::uint32_t round_ = 0;
  std::vector<std::string> slots_;
  std::vector<std::string> result_;
};

/// Multi-process transport: a TCP star with rank 0 as the hub.
///
/// Wire frames are `[u32 rank][u32 round][u64 length][payload]`, little-endian.
class SocketCollectives final : public Collectives {
 public:
  /// Rank 0 binds and listens immediately (port 0 picks a free port); other
  /// ranks connect to `rendezvous` ("host:port"), retrying until `timeout_s`.
  SocketCollectives(std::size_t rank, std::size_t size, const std::string& rendezvous,
                    double timeout_s = 30.0);
  ~SocketCollectives() override;

  /// Reads BTA_WORLD_SIZE, BTA_RANK and BTA_RENDEZVOUS.
  static std::unique_ptr<SocketCollectives> from_environment(double timeout_s = 30.0);

  /// Rank 0: accepts the other ranks. Other ranks: no-op. Also called lazily.
  void establish();
  /// Port rank 0 listens on.
  std::uint16_t port() const noexcept { return port_; }

  std::size_t rank() const noexcept override { return rank_; }
  std::size_t size() const noexcept override { return size_; }

 protected:
  std::vector<std::string> exchange(std::string_view payload, CollectiveKind kind,
                                    std::uint32_t round, bool to_root_only) override;

 private:
  std::size_t rank_;
  std::size_t size_;
  double timeout_s_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::vector<int> peers_;  // rank 0: fd per rank (index 0 unused); others: [hub]
  bool established_ = false;
};

}  // namespace bta
