#include "certfraud/der.hpp"

#include "certfraud/error.hpp"

namespace certfraud::der {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::MalformedInput, msg); }
}  // namespace

std::optional<std::uint8_t> Reader::peek_tag() const {
  if (empty()) return std::nullopt;
  return data_[pos_];
}

Element Reader::next() {
  const std::size_t start = pos_;
  if (data_.size() - pos_ < 2) fail("truncated DER header");
  std::uint8_t tag = data_[pos_++];
  if ((tag & 0x1f) == 0x1f) fail("multi-byte DER tags are not supported");

  std::size_t len = data_[pos_++];
  if (len & 0x80) {
    std::size_t n = len & 0x7f;
    if (n == 0) fail("indefinite length is not DER");
    if (n > 4) fail("DER length too large");
    if (data_.size() - pos_ < n) fail("truncated DER length");
    len = 0;
    for (std::size_t i = 0; i < n; ++i) len = (len << 8) | data_[pos_++];
    if (len < 0x80 || (n > 1 && (len >> (8 * (n - 1))) == 0)) fail("non-minimal DER length");
  }
  if (data_.size() - pos_ < len) fail("truncated DER value");
  Element e;
  e.tag = tag;
  e.value = data_.subspan(pos_, len);
  pos_ += len;
  e.encoded = data_.subspan(start, pos_ - start);
  return e;
}

Element Reader::expect(std::uint8_t tag, const char* what) {
  auto t = peek_tag();
  if (!t) fail(std::string("missing ") + what);
  if (*t != tag) fail(std::string("unexpected tag for ") + what);
  return next();
}

std::optional<Element> Reader::next_if(std::uint8_t tag) {
  if (peek_tag() != tag) return std::nullopt;
  return next();
}

std::string decode_oid(std::span<const std::uint8_t> content) {
  if (content.empty()) fail("empty OID");
  std::string out;
  std::uint64_t value = 0;
  bool first = true;
  for (std::size_t i = 0; i < content.size(); ++i) {
    if (value > (UINT64_MAX >> 7)) fail("OID arc overflow");
    value = (value << 7) | (content[i] & 0x7f);
    if (content[i] & 0x80) {
      if (i + 1 == content.size()) fail("truncated OID arc");
      continue;
    }
    if (first) {
      std::uint64_t a = value < 40 ? 0 : (value < 80 ? 1 : 2);
      out = std::to_string(a) + "." + std::to_string(value - 40 * a);
      first = false;
    } else {
      out += "." + std::to_string(value);
    }
    value = 0;
  }
  return out;
}

}  // namespace certfraud::der
