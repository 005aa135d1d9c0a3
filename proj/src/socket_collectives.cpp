#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "bta/collectives.hpp"
#include "bta/errors.hpp"

namespace bta {

namespace {

constexpr std::uint32_t kHelloRound = 0xffffffffu;
constexpr std::size_t kFrameHeader = 16;

[[noreturn]] void sys_fail(const std::string& what) {
  throw ProtocolError("socket transport: " + what + ": " + std::strerror(errno));
}

void send_all(int fd, const char* data, std::size_t len) {
  while (len > 0) {
    const ssize_t k = ::send(fd, data, len, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    data += k;
    len -= static_cast<std::size_t>(k);
  }
}

void recv_all(int fd, char* data, std::size_t len) {
  while (len > 0) {
    const ssize_t k = ::recv(fd, data, len, 0);
    if (k < 0) {
      if (errno == EINTR) continue;
      sys_fail("recv");
    }
    if (k == 0) throw ProtocolError("socket transport: peer closed the connection");
    data += k;
    len -= static_cast<std::size_t>(k);
  }
}

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_le(const char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void append_frame(std::string& out, std::uint32_t rank, std::uint32_t round,
                  std::string_view payload) {
  put_le(out, rank, 4);
  put_le(out, round, 4);
  put_le(out, payload.size(), 8);
  out.append(payload);
}

struct Frame {
  std::uint32_t rank;
  std::uint32_t round;
  std::string payload;
};

Frame read_frame(int fd) {
  char head[kFrameHeader];
  recv_all(fd, head, sizeof head);
  Frame f;
  f.rank = static_cast<std::uint32_t>(get_le(head, 4));
  f.round = static_cast<std::uint32_t>(get_le(head + 4, 4));
  const std::uint64_t len = get_le(head + 8, 8);
  if (len > (std::uint64_t{1} << 40)) throw ProtocolError("socket transport: oversized frame");
  f.payload.resize(len);
  recv_all(fd, f.payload.data(), len);
  return f;
}

std::pair<std::string, std::string> split_address(const std::string& rendezvous) {
  const auto colon = rendezvous.rfind(':');
  if (colon == std::string::npos) {
    throw ParameterError("rendezvous address must look like host:port, got '" + rendezvous + "'");
  }
  return {rendezvous.substr(0, colon), rendezvous.substr(colon + 1)};
}

addrinfo* resolve(const std::string& host, const std::string& port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) {
    throw ProtocolError("socket transport: cannot resolve " + host + ":" + port + ": " +
                        ::gai_strerror(rc));
  }
  return res;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

SocketCollectives::SocketCollectives(std::size_t rank, std::size_t size,
                                     const std::string& rendezvous, double timeout_s)
    : rank_(rank), size_(size), timeout_s_(timeout_s) {
  if (size == 0 || rank >= size) throw ParameterError("socket transport: invalid rank/size");
  const auto [host, port] = split_address(rendezvous);

  if (rank == 0) {
    addrinfo* res = resolve(host, port, true);
    listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (listen_fd_ < 0) {
      ::freeaddrinfo(res);
      sys_fail("socket");
    }
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0) {
      ::freeaddrinfo(res);
      ::close(listen_fd_);
      sys_fail("bind " + rendezvous);
    }
    ::freeaddrinfo(res);
    if (::listen(listen_fd_, static_cast<int>(size)) != 0) sys_fail("listen");
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    peers_.assign(size, -1);
    if (size == 1) established_ = true;
    return;
  }

  // Non-root: connect with retry until the hub is up.
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_s);
  int fd = -1;
  while (true) {
    addrinfo* res = resolve(host, port, false);
    fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    const int rc = fd < 0 ? -1 : ::connect(fd, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc == 0) break;
    if (fd >= 0) ::close(fd);
    if (std::chrono::steady_clock::now() > deadline) {
      throw ProtocolError("socket transport: rank " + std::to_string(rank) +
                          " could not reach " + rendezvous);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  set_nodelay(fd);
  std::string hello;
  append_frame(hello, static_cast<std::uint32_t>(rank), kHelloRound, {});
  send_all(fd, hello.data(), hello.size());
  peers_ = {fd};
  established_ = true;
}

SocketCollectives::~SocketCollectives() {
  for (int fd : peers_) {
    if (fd >= 0) ::close(fd);
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

std::unique_ptr<SocketCollectives> SocketCollectives::from_environment(double timeout_s) {
  const char* world = std::getenv("BTA_WORLD_SIZE");
  const char* rank = std::getenv("BTA_RANK");
  const char* addr = std::getenv("BTA_RENDEZVOUS");
  if (world == nullptr || rank == nullptr || addr == nullptr) {
    throw ParameterError("socket transport needs BTA_WORLD_SIZE, BTA_RANK and BTA_RENDEZVOUS");
  }
  return std::make_unique<SocketCollectives>(std::stoul(rank), std::stoul(world), addr, timeout_s);
}

void SocketCollectives::establish() {
  if (established_) return;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_s_);
  std::size_t joined = 0;
  while (joined + 1 < size_) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(std::max<long long>(0, left.count())));
    if (ready <= 0) {
      throw ProtocolError("socket transport: only " + std::to_string(joined + 1) + " of " +
                          std::to_string(size_) + " ranks joined before the timeout");
    }
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      sys_fail("accept");
    }
    set_nodelay(fd);
    const Frame hello = read_frame(fd);
    if (hello.round != kHelloRound || hello.rank == 0 || hello.rank >= size_ ||
        peers_[hello.rank] >= 0) {
      ::close(fd);
      throw ProtocolError("socket transport: bad handshake from rank " +
                          std::to_string(hello.rank));
    }
    peers_[hello.rank] = fd;
    ++joined;
  }
  established_ = true;
}

std::vector<std::string> SocketCollectives::exchange(std::string_view payload, CollectiveKind,
                                                     std::uint32_t round, bool to_root_only) {
  establish();
  std::vector<std::string> parts(size_);
  if (rank_ == 0) {
    parts[0].assign(payload);
    for (std::size_t r = 1; r < size_; ++r) {
      Frame f = read_frame(peers_[r]);
      if (f.rank != r || f.round != round) {
        throw ProtocolError("socket transport: expected rank " + std::to_string(r) + " round " +
                            std::to_string(round) + ", got rank " + std::to_string(f.rank) +
                            " round " + std::to_string(f.round));
      }
      parts[r] = std::move(f.payload);
    }
    if (!to_root_only) {
      std::string all;
      for (std::size_t r = 0; r < size_; ++r) {
        append_frame(all, static_cast<std::uint32_t>(r), round, parts[r]);
      }
      for (std::size_t r = 1; r < size_; ++r) send_all(peers_[r], all.data(), all.size());
    }
    return parts;
  }

  std::string frame;
  append_frame(frame, static_cast<std::uint32_t>(rank_), round, payload);
  send_all(peers_[0], frame.data(), frame.size());
  if (to_root_only) return parts;
  for (std::size_t r = 0; r < size_; ++r) {
    Frame f = read_frame(peers_[0]);
    if (f.rank != r || f.round != round) {
      throw ProtocolError("socket transport: out-of-order broadcast frame");
    }
    parts[r] = std::move(f.payload);
  }
  return parts;
}

}  // namespace bta
