#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "certfraud/record.hpp"

namespace certfraud {

struct ProbeConfig {
  std::chrono::milliseconds connect_timeout{3000};
  std::chrono::milliseconds handshake_timeout{5000};  // also bounds the HTTP response wait
  unsigned max_concurrency = 32;
  unsigned retries = 1;
  std::uint16_t http_port = 80;
  std::uint16_t https_port = 443;
  /// domain -> literal IPv4/IPv6 address, bypassing DNS (like curl --resolve).
  std::map<std::string, std::string> resolve;

  /// Throws Error(Usage) when an invariant is violated.
  void validate() const;
};

/// Probes HTTP and HTTPS and keeps the served leaf certificate. Network
/// failures are recorded in the result; only a malformed name throws
/// (Error(InvalidDomainName)). SIGPIPE is set to ignored if still at its default.
DomainRecord probe_domain(std::string_view domain, const ProbeConfig& config);

using RecordSink = std::function<void(const DomainRecord&)>;

/// Probes every domain with at most `max_concurrency` probes in flight. The
/// sink is called once per input domain, serially and in input order.
CategoryCounts probe_corpus(std::span<const std::string> domains, const ProbeConfig& config,
                            const RecordSink& sink);

/// Newline-delimited domain list; blank lines and '#' comments are skipped.
std::vector<std::string> read_domain_list(std::istream& in);

}  // namespace certfraud
