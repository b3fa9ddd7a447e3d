#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cert_factory.hpp"

namespace certfraud::testing {

/// Connections open across every listener sharing it.
struct ConnectionGauge {
  std::atomic<int> current{0};
  std::atomic<int> peak{0};
  std::atomic<int> accepted{0};

  void enter();
  void leave();
};

/// Serves a fixed certificate chain (leaf first) over TLS.
struct TlsIdentity {
  std::vector<TestCert> chain;
};

class Listener {
 public:
  enum class Kind { Http, Tls };

  /// `port` 0 picks an ephemeral port. A connection counts in `gauge` from
  /// accept until the server starts its reply, which follows `delay`.
  Listener(Kind kind, const std::string& ip, std::uint16_t port, ConnectionGauge& gauge,
           std::chrono::milliseconds delay, const TlsIdentity* identity = nullptr);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }

 private:
  void accept_loop();
  void serve(int fd);

  Kind kind_;
  ConnectionGauge& gauge_;
  std::chrono::milliseconds delay_;
  void* ctx_ = nullptr;  // SSL_CTX*
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

/// Picks a port free on every listed loopback address.
std::uint16_t common_free_port(const std::vector<std::string>& ips);

}  // namespace certfraud::testing
