#include "bta/collectives.hpp"

#include <bit>
#include <cstring>

#include "bta/errors.hpp"

namespace bta {

namespace {

std::string encode_values(std::span<const complex> values) {
  std::string out(values.size() * sizeof(complex), '\0');
  if (!values.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

}  // namespace

std::string_view collective_name(CollectiveKind kind) noexcept {
  switch (kind) {
    case CollectiveKind::all_gather: return "all_gather";
    case CollectiveKind::all_reduce: return "all_reduce";
    case CollectiveKind::gather_to_root: return "gather_to_root";
  }
  return "unknown";
}

std::vector<std::string> Collectives::all_gather(std::string_view payload) {
  const std::uint32_t round = next_round_++;
  trace_.push_back({CollectiveKind::all_gather, round, payload.size(), 0});
  return exchange(payload, CollectiveKind::all_gather, round, false);
}

std::vector<complex> Collectives::all_reduce_sum(std::span<const complex> values) {
  static_assert(std::endian::native == std::endian::little,
                "reduction payloads are sent in native (little-endian) layout");
  const std::uint32_t round = next_round_++;
  const std::string bytes = encode_values(values);
  trace_.push_back({CollectiveKind::all_reduce, round, bytes.size(), values.size()});
  const std::vector<std::string> parts =
      exchange(bytes, CollectiveKind::all_reduce, round, false);

  std::vector<complex> sum(values.size());
  for (std::size_t r = 0; r < parts.size(); ++r) {
    if (parts[r].size() != bytes.size()) {
      throw ProtocolError("all_reduce: rank " + std::to_string(r) + " sent " +
                          std::to_string(parts[r].size()) + " bytes, expected " +
                          std::to_string(bytes.size()));
    }
    for (std::size_t k = 0; k < sum.size(); ++k) {
      complex v;
      std::memcpy(&v, parts[r].data() + k * sizeof(complex), sizeof(complex));
      sum[k] += v;
    }
  }
  return sum;
}

std::vector<std::string> Collectives::gather_to_root(std::string_view payload) {
  const std::uint32_t round = next_round_++;
  trace_.push_back({CollectiveKind::gather_to_root, round, payload.size(), 0});
  std::vector<std::string> parts = exchange(payload, CollectiveKind::gather_to_root, round, true);
  if (rank() != 0) parts.clear();
  return parts;
}

std::size_t Collectives::count(CollectiveKind kind) const noexcept {
  std::size_t c = 0;
  for (const auto& e : trace_) c += e.kind == kind ? 1 : 0;
  return c;
}

// ---------------------------------------------------------------------------

class InProcessCommunicator final : public Collectives {
 public:
  InProcessCommunicator(InProcessGroup& group, std::size_t rank) : group_(group), rank_(rank) {}
  std::size_t rank() const noexcept override { return rank_; }
  std::size_t size() const noexcept override { return group_.size(); }

 protected:
  std::vector<std::string> exchange(std::string_view payload, CollectiveKind kind,
                                    std::uint32_t round, bool) override {
    return group_.exchange(rank_, payload, kind, round);
  }

 private:
  InProcessGroup& group_;
  std::size_t rank_;
};

InProcessGroup::InProcessGroup(std::size_t size) : size_(size), slots_(size) {
  if (size == 0) throw ParameterError("InProcessGroup: size must be positive");
}

std::unique_ptr<Collectives> InProcessGroup::communicator(std::size_t rank) {
  if (rank >= size_) throw ParameterError("InProcessGroup: rank out of range");
  return std::make_unique<InProcessCommunicator>(*this, rank);
}

void InProcessGroup::abort() {
  {
    const std::lock_guard lock(mutex_);
    aborted_ = true;
  }
  cv_.notify_all();
}

std::vector<std::string> InProcessGroup::exchange(std::size_t rank, std::string_view payload,
                                                  CollectiveKind kind, std::uint32_t round) {
  std::unique_lock lock(mutex_);
  if (aborted_) throw ProtocolError("collective aborted by another rank");
  if (arrived_ == 0) {
    kind_ = kind;
    round_ = round;
  } else if (kind_ != kind || round_ != round) {
    aborted_ = true;
    cv_.notify_all();
    throw ProtocolError("rank " + std::to_string(rank) + " entered " +
                        std::string(collective_name(kind)) + " round " + std::to_string(round) +
                        " while the group is in " + std::string(collective_name(kind_)) +
                        " round " + std::to_string(round_));
  }
  slots_[rank].assign(payload);
  const std::uint64_t my_generation = generation_;
  if (++arrived_ == size_) {
    result_ = slots_;
    arrived_ = 0;
    ++generation_;
    cv_.notify_all();
    return result_;
  }
  cv_.wait(lock, [&] { return generation_ != my_generation || aborted_; });
  if (generation_ == my_generation) throw ProtocolError("collective aborted by another rank");
  return result_;
}

}  // namespace bta
