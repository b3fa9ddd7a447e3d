#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace certfraud {

using Bytes = std::vector<std::uint8_t>;

std::string base64_encode(std::span<const std::uint8_t> data);

/// Strict standard-alphabet decode; whitespace is skipped. Returns nullopt on bad input.
std::optional<Bytes> base64_decode(std::string_view text);

std::string hex_lower(std::span<const std::uint8_t> data);

/// SHA-256 of `data`, lowercase hex.
std::string sha256_hex(std::span<const std::uint8_t> data);

std::uint32_t crc32(std::string_view data);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace certfraud
