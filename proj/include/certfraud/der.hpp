#pragma once

// Minimal DER reader: definite lengths only, single-byte tags (enough for X.509).

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace certfraud::der {

namespace tag {
inline constexpr std::uint8_t kBoolean = 0x01;
inline constexpr std::uint8_t kInteger = 0x02;
inline constexpr std::uint8_t kBitString = 0x03;
inline constexpr std::uint8_t kOctetString = 0x04;
inline constexpr std::uint8_t kNull = 0x05;
inline constexpr std::uint8_t kOid = 0x06;
inline constexpr std::uint8_t kUtf8String = 0x0c;
inline constexpr std::uint8_t kPrintableString = 0x13;
inline constexpr std::uint8_t kT61String = 0x14;
inline constexpr std::uint8_t kIa5String = 0x16;
inline constexpr std::uint8_t kUtcTime = 0x17;
inline constexpr std::uint8_t kGeneralizedTime = 0x18;
inline constexpr std::uint8_t kVisibleString = 0x1a;
inline constexpr std::uint8_t kUniversalString = 0x1c;
inline constexpr std::uint8_t kBmpString = 0x1e;
inline constexpr std::uint8_t kSequence = 0x30;
inline constexpr std::uint8_t kSet = 0x31;

constexpr std::uint8_t context(unsigned n, bool constructed = true) {
  return static_cast<std::uint8_t>(0x80 | (constructed ? 0x20 : 0) | n);
}
}  // namespace tag

struct Element {
  std::uint8_t tag = 0;
  std::span<const std::uint8_t> value;   // content octets
  std::span<const std::uint8_t> encoded; // tag + length + content
};

// Throws Error(MalformedInput) on any framing problem.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  bool empty() const { return pos_ >= data_.size(); }
  std::optional<std::uint8_t> peek_tag() const;

  Element next();
  Element expect(std::uint8_t tag, const char* what);
  std::optional<Element> next_if(std::uint8_t tag);

  // Enter a constructed element's contents.
  Reader enter(std::uint8_t tag, const char* what) { return Reader(expect(tag, what).value); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::string decode_oid(std::span<const std::uint8_t> content);

}  // namespace certfraud::der
