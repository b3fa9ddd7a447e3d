#include "certfraud/harvester.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/err.h>
#include <openssl/ssl.h>

#include <atomic>
#include <csignal>
#include <cerrno>
#include <cstring>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "certfraud/error.hpp"

namespace certfraud {

void ProbeConfig::validate() const {
  if (max_concurrency < 1) throw Error(ErrorCode::Usage, "max_concurrency must be >= 1");
  if (connect_timeout.count() <= 0 || handshake_timeout.count() <= 0)
    throw Error(ErrorCode::Usage, "timeouts must be positive");
  if (http_port == 0 || https_port == 0) throw Error(ErrorCode::Usage, "ports must be non-zero");
}

namespace {

using Clock = std::chrono::steady_clock;

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int fd() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }

 private:
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int fd_ = -1;
};

int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

// Waits until `events` is ready on fd. False on timeout or poll error.
bool wait_for(int fd, short events, Clock::time_point deadline) {
  for (;;) {
    int ms = remaining_ms(deadline);
    if (ms == 0) return false;
    pollfd p{fd, events, 0};
    int rc = ::poll(&p, 1, ms);
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) return false;
  }
}

struct Address {
  sockaddr_storage storage{};
  socklen_t length = 0;
};

std::vector<Address> resolve(const std::string& domain, std::uint16_t port, const ProbeConfig& cfg,
                             std::string& error) {
  std::vector<Address> out;
  std::string host = domain;
  if (auto it = cfg.resolve.find(domain); it != cfg.resolve.end()) host = it->second;

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) {
    error = std::string("resolve: ") + ::gai_strerror(rc);
    return out;
  }
  for (auto* ai = res; ai; ai = ai->ai_next) {
    Address a;
    std::memcpy(&a.storage, ai->ai_addr, ai->ai_addrlen);
    a.length = static_cast<socklen_t>(ai->ai_addrlen);
    out.push_back(a);
  }
  ::freeaddrinfo(res);
  return out;
}

Socket connect_any(const std::vector<Address>& addrs, std::chrono::milliseconds timeout,
                   std::string& error) {
  auto deadline = Clock::now() + timeout;
  for (const auto& a : addrs) {
    Socket s(::socket(a.storage.ss_family, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
    if (!s) {
      error = std::string("socket: ") + std::strerror(errno);
      continue;
    }
    int rc = ::connect(s.fd(), reinterpret_cast<const sockaddr*>(&a.storage), a.length);
    if (rc == 0) return s;
    if (errno != EINPROGRESS) {
      error = std::string("connect: ") + std::strerror(errno);
      continue;
    }
    if (!wait_for(s.fd(), POLLOUT, deadline)) {
      error = "connect: timed out";
      continue;
    }
    int so_error = 0;
    socklen_t len = sizeof so_error;
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &so_error, &len);
    if (so_error == 0) return s;
    error = std::string("connect: ") + std::strerror(so_error);
  }
  if (error.empty()) error = "connect: no addresses";
  return {};
}

bool is_ip_literal(const std::string& host) {
  in6_addr buf;
  return ::inet_pton(AF_INET, host.c_str(), &buf) == 1 || ::inet_pton(AF_INET6, host.c_str(), &buf) == 1;
}

// "HTTP/x.y NNN"
bool is_status_line(std::string_view line) {
  if (line.size() < 12 || line.substr(0, 5) != "HTTP/") return false;
  auto d = [&](std::size_t i) { return line[i] >= '0' && line[i] <= '9'; };
  return d(5) && line[6] == '.' && d(7) && line[8] == ' ' && d(9) && d(10) && d(11);
}

struct Attempt {
  bool ok = false;
  std::string error;
};

Attempt http_attempt(const std::string& domain, const ProbeConfig& cfg) {
  Attempt r;
  auto addrs = resolve(domain, cfg.http_port, cfg, r.error);
  if (addrs.empty()) return r;
  Socket s = connect_any(addrs, cfg.connect_timeout, r.error);
  if (!s) return r;

  auto deadline = Clock::now() + cfg.handshake_timeout;
  std::string req = "GET / HTTP/1.1\r\nHost: " + domain +
                    "\r\nUser-Agent: certfraud-probe\r\nAccept: */*\r\nConnection: close\r\n\r\n";
  std::size_t sent = 0;
  while (sent < req.size()) {
    if (!wait_for(s.fd(), POLLOUT, deadline)) {
      r.error = "http: send timed out";
      return r;
    }
    ssize_t n = ::send(s.fd(), req.data() + sent, req.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      r.error = std::string("http: send: ") + std::strerror(errno);
      return r;
    }
    sent += static_cast<std::size_t>(n);
  }

  std::string head;
  char buf[512];
  while (head.find("\r\n") == std::string::npos && head.size() < 4096) {
    if (!wait_for(s.fd(), POLLIN, deadline)) {
      r.error = "http: response timed out";
      return r;
    }
    ssize_t n = ::recv(s.fd(), buf, sizeof buf, 0);
    if (n == 0) break;
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      r.error = std::string("http: recv: ") + std::strerror(errno);
      return r;
    }
    head.append(buf, static_cast<std::size_t>(n));
  }
  auto eol = head.find("\r\n");
  std::string_view line = eol == std::string::npos ? std::string_view(head) : std::string_view(head).substr(0, eol);
  if (!is_status_line(line)) {
    r.error = head.empty() ? "http: connection closed without response" : "http: malformed status line";
    return r;
  }
  r.ok = true;
  return r;
}

struct TlsCapture {
  std::optional<Bytes> leaf;
  std::vector<Bytes> chain;
};

std::uint32_t be24(const unsigned char* p) { return (std::uint32_t{p[0]} << 16) | (p[1] << 8) | p[2]; }

// Pulls the certificate_list out of a plaintext Certificate handshake message.
void parse_certificate_message(const unsigned char* msg, std::size_t len, bool tls13, TlsCapture& cap) {
  if (len < 4 || msg[0] != SSL3_MT_CERTIFICATE) return;
  std::size_t body_len = be24(msg + 1);
  if (body_len + 4 > len) return;
  const unsigned char* p = msg + 4;
  const unsigned char* end = p + body_len;
  if (tls13) {
    if (p >= end) return;
    p += 1 + *p;  // certificate_request_context
  }
  if (end - p < 3) return;
  std::size_t list_len = be24(p);
  p += 3;
  if (static_cast<std::size_t>(end - p) < list_len) return;
  end = p + list_len;
  std::vector<Bytes> certs;
  while (end - p >= 3) {
    std::size_t n = be24(p);
    p += 3;
    if (static_cast<std::size_t>(end - p) < n) return;
    certs.emplace_back(p, p + n);
    p += n;
    if (tls13) {
      if (end - p < 2) return;
      std::size_t ext = (std::size_t{p[0]} << 8) | p[1];
      p += 2;
      if (static_cast<std::size_t>(end - p) < ext) return;
      p += ext;
    }
  }
  if (certs.empty()) return;
  cap.leaf = std::move(certs.front());
  cap.chain.assign(std::make_move_iterator(certs.begin() + 1), std::make_move_iterator(certs.end()));
}

void on_tls_message(int write_p, int /*version*/, int content_type, const void* buf, std::size_t len,
                    SSL* ssl, void* /*arg*/) {
  if (write_p || content_type != SSL3_RT_HANDSHAKE) return;
  auto* cap = static_cast<TlsCapture*>(SSL_get_app_data(ssl));
  if (!cap || cap->leaf) return;
  parse_certificate_message(static_cast<const unsigned char*>(buf), len,
                            SSL_version(ssl) == TLS1_3_VERSION, *cap);
}

SSL_CTX* client_context() {
  static SSL_CTX* ctx = [] {
    SSL_CTX* c = SSL_CTX_new(TLS_client_method());
    SSL_CTX_set_min_proto_version(c, 0);
    SSL_CTX_set_security_level(c, 0);
    SSL_CTX_set_cipher_list(c, "ALL:!aNULL:@SECLEVEL=0");
    SSL_CTX_set_options(c, SSL_OP_LEGACY_SERVER_CONNECT | SSL_OP_IGNORE_UNEXPECTED_EOF);
    SSL_CTX_set_verify(c, SSL_VERIFY_NONE, nullptr);
    SSL_CTX_set_msg_callback(c, on_tls_message);
    return c;
  }();
  return ctx;
}

std::string openssl_error(const char* what) {
  unsigned long e = ERR_get_error();
  std::string msg = std::string("tls: ") + what;
  if (e) {
    char buf[256];
    ERR_error_string_n(e, buf, sizeof buf);
    msg += ": ";
    msg += buf;
  }
  ERR_clear_error();
  return msg;
}

struct TlsAttempt {
  bool handshake_ok = false;
  TlsCapture capture;
  std::string error;

  bool reached_certificate() const { return handshake_ok || capture.leaf.has_value(); }
};

TlsAttempt https_attempt(const std::string& domain, const ProbeConfig& cfg) {
  TlsAttempt r;
  auto addrs = resolve(domain, cfg.https_port, cfg, r.error);
  if (addrs.empty()) return r;
  Socket s = connect_any(addrs, cfg.connect_timeout, r.error);
  if (!s) return r;

  std::unique_ptr<SSL, decltype(&SSL_free)> ssl(SSL_new(client_context()), SSL_free);
  if (!ssl) {
    r.error = openssl_error("SSL_new");
    return r;
  }
  SSL_set_app_data(ssl.get(), &r.capture);
  SSL_set_fd(ssl.get(), s.fd());
  if (!is_ip_literal(domain)) SSL_set_tlsext_host_name(ssl.get(), domain.c_str());

  auto deadline = Clock::now() + cfg.handshake_timeout;
  for (;;) {
    int rc = SSL_connect(ssl.get());
    if (rc == 1) {
      r.handshake_ok = true;
      break;
    }
    int err = SSL_get_error(ssl.get(), rc);
    short events = 0;
    if (err == SSL_ERROR_WANT_READ) events = POLLIN;
    else if (err == SSL_ERROR_WANT_WRITE) events = POLLOUT;
    if (events == 0) {
      r.error = err == SSL_ERROR_SYSCALL && ERR_peek_error() == 0
                    ? std::string("tls: connection reset during handshake")
                    : openssl_error("handshake failed");
      break;
    }
    if (!wait_for(s.fd(), events, deadline)) {
      r.error = "tls: handshake timed out";
      break;
    }
  }
  if (r.handshake_ok) {
    SSL_shutdown(ssl.get());
    if (!r.capture.leaf) {
      if (X509* peer = SSL_get0_peer_certificate(ssl.get())) {
        unsigned char* der = nullptr;
        int n = i2d_X509(peer, &der);
        if (n > 0) r.capture.leaf = Bytes(der, der + n);
        OPENSSL_free(der);
      }
    }
  }
  ERR_clear_error();
  return r;
}

// TLS writes go through plain write(2); a peer reset must not kill the process.
void ignore_sigpipe_once() {
  static std::once_flag once;
  std::call_once(once, [] {
    struct sigaction current {};
    if (sigaction(SIGPIPE, nullptr, &current) == 0 && current.sa_handler == SIG_DFL) std::signal(SIGPIPE, SIG_IGN);
  });
}

}  // namespace

DomainRecord probe_domain(std::string_view raw_domain, const ProbeConfig& config) {
  config.validate();
  ignore_sigpipe_once();
  DomainRecord rec;
  rec.domain = canonical_domain(raw_domain);
  rec.harvest_time = utc_now();

  for (unsigned i = 0; i <= config.retries && !rec.http_ok; ++i)
    rec.http_ok = http_attempt(rec.domain, config).ok;

  std::optional<TlsAttempt> best;
  for (unsigned i = 0; i <= config.retries; ++i) {
    TlsAttempt a = https_attempt(rec.domain, config);
    bool better = !best || (a.reached_certificate() && !best->reached_certificate()) ||
                  (a.handshake_ok && !best->handshake_ok);
    if (better) best = std::move(a);
    if (best->handshake_ok) break;
  }
  rec.https_ok = best->reached_certificate();
  if (best->capture.leaf) {
    rec.cert_der = std::move(best->capture.leaf);
    rec.presented_chain_der = std::move(best->capture.chain);
  }
  if (!best->handshake_ok && !best->error.empty()) rec.tls_error = best->error;
  return rec;
}

CategoryCounts probe_corpus(std::span<const std::string> domains, const ProbeConfig& config,
                            const RecordSink& sink) {
  config.validate();
  CategoryCounts counts;
  if (domains.empty()) return counts;

  std::vector<std::optional<DomainRecord>> slots(domains.size());
  std::size_t next_to_deliver = 0;
  std::atomic<std::size_t> next_index{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex mu;

  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      std::size_t i = next_index.fetch_add(1);
      if (i >= domains.size()) return;
      DomainRecord rec;
      try {
        rec = probe_domain(domains[i], config);
      } catch (const Error& e) {
        rec = DomainRecord{};
        rec.domain = domains[i];
        rec.harvest_time = utc_now();
        rec.tls_error = e.what();
      }
      std::lock_guard lock(mu);
      slots[i] = std::move(rec);
      try {
        while (next_to_deliver < slots.size() && slots[next_to_deliver]) {
          auto& r = *slots[next_to_deliver];
          counts.add(r.category());
          sink(r);
          slots[next_to_deliver].reset();
          ++next_to_deliver;
        }
      } catch (...) {
        if (!failure) failure = std::current_exception();
        stop = true;
        return;
      }
    }
  };

  std::size_t n_threads = std::min<std::size_t>(config.max_concurrency, domains.size());
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return counts;
}

std::vector<std::string> read_domain_list(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace certfraud
