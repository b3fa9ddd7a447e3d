#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "certfraud/encoding.hpp"
#include "certfraud/timeutil.hpp"

namespace certfraud {

/// Web reachability of one probed domain.
enum class Category { Both, HttpsOnly, HttpOnly, Neither };

std::string_view to_string(Category c);

struct DomainRecord {
  std::string domain;
  bool http_ok = false;
  bool https_ok = false;
  UtcTime harvest_time{};
  std::optional<Bytes> cert_der;                     // leaf as presented
  std::optional<std::vector<Bytes>> presented_chain_der;  // excludes the leaf
  std::optional<std::string> tls_error;

  Category category() const;

  friend bool operator==(const DomainRecord&, const DomainRecord&) = default;
};

struct CategoryCounts {
  std::size_t both = 0;
  std::size_t https_only = 0;
  std::size_t http_only = 0;
  std::size_t neither = 0;

  void add(Category c);
  std::size_t total() const { return both + https_only + http_only + neither; }

  friend bool operator==(const CategoryCounts&, const CategoryCounts&) = default;
};

/// Lowercased, trailing-dot-stripped DNS name. Throws Error(InvalidDomainName).
std::string canonical_domain(std::string_view name);

}  // namespace certfraud
