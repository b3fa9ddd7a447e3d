#include "certfraud/cert_model.hpp"

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/x509.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "certfraud/der.hpp"
#include "certfraud/error.hpp"

namespace certfraud {

namespace {

[[noreturn]] void malformed(const std::string& msg) { throw Error(ErrorCode::MalformedInput, msg); }

struct OidName {
  std::string_view oid;
  std::string_view name;
};

constexpr std::array kAttributeNames{
    OidName{"2.5.4.3", "CN"},
    OidName{"2.5.4.4", "SN"},
    OidName{"2.5.4.5", "serialNumber"},
    OidName{"2.5.4.6", "C"},
    OidName{"2.5.4.7", "L"},
    OidName{"2.5.4.8", "ST"},
    OidName{"2.5.4.9", "street"},
    OidName{"2.5.4.10", "O"},
    OidName{"2.5.4.11", "OU"},
    OidName{"2.5.4.12", "title"},
    OidName{"2.5.4.42", "GN"},
    OidName{"2.5.4.15", "businessCategory"},
    OidName{"2.5.4.17", "postalCode"},
    OidName{"1.2.840.113549.1.9.1", "emailAddress"},
    OidName{"0.9.2342.19200300.100.1.25", "DC"},
    OidName{"0.9.2342.19200300.100.1.1", "UID"},
};

constexpr std::array kSignatureNames{
    OidName{"1.2.840.113549.1.1.2", "md2WithRSAEncryption"},
    OidName{"1.2.840.113549.1.1.3", "md4WithRSAEncryption"},
    OidName{"1.2.840.113549.1.1.4", "md5WithRSAEncryption"},
    OidName{"1.2.840.113549.1.1.5", "sha1WithRSAEncryption"},
    OidName{"1.2.840.113549.1.1.10", "rsassaPss"},
    OidName{"1.2.840.113549.1.1.11", "sha256WithRSAEncryption"},
    OidName{"1.2.840.113549.1.1.12", "sha384WithRSAEncryption"},
    OidName{"1.2.840.113549.1.1.13", "sha512WithRSAEncryption"},
    OidName{"1.2.840.113549.1.1.14", "sha224WithRSAEncryption"},
    OidName{"1.2.840.10040.4.3", "dsaWithSHA1"},
    OidName{"2.16.840.1.101.3.4.3.2", "dsa_with_SHA256"},
    OidName{"1.2.840.10045.4.1", "ecdsa-with-SHA1"},
    OidName{"1.2.840.10045.4.3.1", "ecdsa-with-SHA224"},
    OidName{"1.2.840.10045.4.3.2", "ecdsa-with-SHA256"},
    OidName{"1.2.840.10045.4.3.3", "ecdsa-with-SHA384"},
    OidName{"1.2.840.10045.4.3.4", "ecdsa-with-SHA512"},
    OidName{"1.3.101.112", "ED25519"},
    OidName{"1.3.101.113", "ED448"},
};

template <std::size_t N>
std::string_view lookup(const std::array<OidName, N>& table, std::string_view oid) {
  for (const auto& e : table)
    if (e.oid == oid) return e.name;
  return {};
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

std::string decode_string(const der::Element& e) {
  std::string out;
  switch (e.tag) {
    case der::tag::kT61String:  // treated as Latin-1
      for (auto b : e.value) append_utf8(out, b);
      return out;
    case der::tag::kBmpString:
      if (e.value.size() % 2) malformed("odd-length BMPString");
      for (std::size_t i = 0; i < e.value.size(); i += 2)
        append_utf8(out, (std::uint32_t{e.value[i]} << 8) | e.value[i + 1]);
      return out;
    case der::tag::kUniversalString:
      if (e.value.size() % 4) malformed("bad UniversalString length");
      for (std::size_t i = 0; i < e.value.size(); i += 4)
        append_utf8(out, (std::uint32_t{e.value[i]} << 24) | (std::uint32_t{e.value[i + 1]} << 16) |
                             (std::uint32_t{e.value[i + 2]} << 8) | e.value[i + 3]);
      return out;
    default:
      return std::string(e.value.begin(), e.value.end());
  }
}

DistinguishedName parse_name(der::Reader& parent, const char* what) {
  der::Reader rdn_seq = parent.enter(der::tag::kSequence, what);
  std::vector<DnAttribute> attrs;
  while (!rdn_seq.empty()) {
    der::Reader set = rdn_seq.enter(der::tag::kSet, "RelativeDistinguishedName");
    while (!set.empty()) {
      der::Reader atv = set.enter(der::tag::kSequence, "AttributeTypeAndValue");
      DnAttribute a;
      a.oid = der::decode_oid(atv.expect(der::tag::kOid, "attribute type").value);
      a.value = decode_string(atv.next());
      attrs.push_back(std::move(a));
    }
  }
  return DistinguishedName(std::move(attrs));
}

int digits(std::span<const std::uint8_t> s, std::size_t pos, std::size_t n) {
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto c = s[pos + i];
    if (c < '0' || c > '9') malformed("non-digit in time value");
    v = v * 10 + (c - '0');
  }
  return v;
}

UtcTime parse_time(const der::Element& e) {
  auto s = e.value;
  int year;
  std::size_t pos;
  if (e.tag == der::tag::kUtcTime) {
    if (s.size() < 11) malformed("short UTCTime");
    int yy = digits(s, 0, 2);
    year = yy < 50 ? 2000 + yy : 1900 + yy;
    pos = 2;
  } else if (e.tag == der::tag::kGeneralizedTime) {
    if (s.size() < 13) malformed("short GeneralizedTime");
    year = digits(s, 0, 4);
    pos = 4;
  } else {
    malformed("validity time has unexpected type");
  }
  if (s.size() < pos + 9) malformed("short time value");
  int month = digits(s, pos, 2);
  int day = digits(s, pos + 2, 2);
  int hour = digits(s, pos + 4, 2);
  int minute = digits(s, pos + 6, 2);
  pos += 8;
  int second = 0;
  if (pos + 2 <= s.size() && s[pos] >= '0' && s[pos] <= '9') {
    second = digits(s, pos, 2);
    pos += 2;
  }
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  }
  if (pos + 1 != s.size() || s[pos] != 'Z') malformed("time value must end in Z");
  std::chrono::year_month_day ymd{std::chrono::year{year},
                                  std::chrono::month{static_cast<unsigned>(month)},
                                  std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) malformed("time value out of range");
  return utc_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day), hour,
                        minute, second);
}

struct PemBlock {
  std::string_view body;
};

constexpr std::string_view kPemBegin = "-----BEGIN CERTIFICATE-----";
constexpr std::string_view kPemEnd = "-----END CERTIFICATE-----";

std::vector<PemBlock> find_pem_blocks(std::string_view text) {
  std::vector<PemBlock> blocks;
  std::size_t pos = 0;
  while ((pos = text.find(kPemBegin, pos)) != std::string_view::npos) {
    auto body_start = pos + kPemBegin.size();
    auto end = text.find(kPemEnd, body_start);
    if (end == std::string_view::npos) malformed("unterminated PEM CERTIFICATE block");
    blocks.push_back({text.substr(body_start, end - body_start)});
    pos = end + kPemEnd.size();
  }
  return blocks;
}

Bytes decode_pem_body(std::string_view body) {
  auto der = base64_decode(body);
  if (!der) malformed("invalid base64 in PEM block");
  return std::move(*der);
}

CertificateSummary parse_der(std::span<const std::uint8_t> input) {
  der::Reader top(input);
  der::Element cert_el = top.expect(der::tag::kSequence, "Certificate");
  if (!top.empty()) malformed("trailing data after certificate");

  CertificateSummary out;
  out.der_bytes.assign(cert_el.encoded.begin(), cert_el.encoded.end());
  out.fingerprint = sha256_hex(out.der_bytes);

  der::Reader cert(cert_el.value);
  der::Reader tbs = cert.enter(der::tag::kSequence, "TBSCertificate");
  der::Reader outer_alg = cert.enter(der::tag::kSequence, "signatureAlgorithm");
  cert.expect(der::tag::kBitString, "signatureValue");
  if (!cert.empty()) malformed("unexpected fields after signatureValue");

  out.signature_algorithm.oid = der::decode_oid(outer_alg.expect(der::tag::kOid, "algorithm").value);
  out.signature_algorithm.name = signature_algorithm_name(out.signature_algorithm.oid);

  tbs.next_if(der::tag::context(0));  // version
  auto serial = tbs.expect(der::tag::kInteger, "serialNumber").value;
  if (serial.empty()) malformed("empty serial number");
  if (serial[0] & 0x80) {
    Bytes mag(serial.begin(), serial.end());
    for (auto& b : mag) b = static_cast<std::uint8_t>(~b);
    for (auto it = mag.rbegin(); it != mag.rend(); ++it)
      if (++*it != 0) break;
    out.serial = Serial::from_magnitude(mag);
    out.warnings.push_back("negative serial number normalized to its absolute value");
  } else {
    out.serial = Serial::from_magnitude(serial);
  }

  tbs.expect(der::tag::kSequence, "signature");
  out.issuer = parse_name(tbs, "issuer");
  {
    if (tbs.peek_tag() != der::tag::kSequence) malformed("missing validity");
    der::Reader validity = tbs.enter(der::tag::kSequence, "validity");
    out.not_before = parse_time(validity.next());
    out.not_after = parse_time(validity.next());
    if (!validity.empty()) malformed("extra fields in validity");
    if (out.not_before > out.not_after) malformed("notBefore is after notAfter");
  }
  out.subject = parse_name(tbs, "subject");
  auto spki = tbs.expect(der::tag::kSequence, "subjectPublicKeyInfo");
  out.subject_public_key_info.assign(spki.encoded.begin(), spki.encoded.end());
  // Unique IDs and extensions are not needed; only check they are well framed.
  while (!tbs.empty()) tbs.next();
  return out;
}

std::string trimmed_copy(std::string_view s) { return std::string(trim(s)); }

}  // namespace

std::string_view DnAttribute::type_name() const {
  auto n = lookup(kAttributeNames, oid);
  return n.empty() ? std::string_view(oid) : n;
}

std::optional<std::string_view> DistinguishedName::find(std::string_view type) const {
  for (const auto& a : attributes_)
    if (a.oid == type || a.type_name() == type) return std::string_view(a.value);
  return std::nullopt;
}

std::string DistinguishedName::to_string() const {
  std::string out;
  for (const auto& a : attributes_) {
    if (!out.empty()) out += ", ";
    out += a.type_name();
    out += '=';
    out += a.value;
  }
  return out;
}

bool dn_equal(const DistinguishedName& a, const DistinguishedName& b) {
  if (a.attributes().size() != b.attributes().size()) return false;
  auto key = [](const DistinguishedName& dn) {
    std::vector<std::pair<std::string, std::string>> v;
    v.reserve(dn.attributes().size());
    for (const auto& at : dn.attributes()) v.emplace_back(at.oid, trimmed_copy(at.value));
    std::sort(v.begin(), v.end());
    return v;
  };
  return key(a) == key(b);
}

Serial Serial::from_magnitude(std::span<const std::uint8_t> big_endian) {
  Serial s;
  auto it = std::find_if(big_endian.begin(), big_endian.end(), [](auto b) { return b != 0; });
  s.magnitude_.assign(it, big_endian.end());
  return s;
}

Serial Serial::from_uint(std::uint64_t v) {
  Bytes be;
  for (int shift = 56; shift >= 0; shift -= 8) be.push_back(static_cast<std::uint8_t>(v >> shift));
  return from_magnitude(be);
}

std::string Serial::to_decimal() const {
  if (magnitude_.empty()) return "0";
  Bytes work = magnitude_;
  std::string digits;
  while (!work.empty()) {
    unsigned rem = 0;
    for (auto& b : work) {
      unsigned cur = (rem << 8) | b;
      b = static_cast<std::uint8_t>(cur / 10);
      rem = cur % 10;
    }
    digits.push_back(static_cast<char>('0' + rem));
    auto nz = std::find_if(work.begin(), work.end(), [](auto b) { return b != 0; });
    work.erase(work.begin(), nz);
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

std::string Serial::to_hex() const { return magnitude_.empty() ? "00" : hex_lower(magnitude_); }

std::string signature_algorithm_name(std::string_view oid) {
  auto n = lookup(kSignatureNames, oid);
  return std::string(n.empty() ? oid : n);
}

CertificateSummary parse_certificate(std::span<const std::uint8_t> input) {
  if (input.empty()) malformed("empty input");
  if (input[0] == der::tag::kSequence) return parse_der(input);

  std::string_view text(reinterpret_cast<const char*>(input.data()), input.size());
  auto blocks = find_pem_blocks(text);
  if (blocks.empty()) malformed("input is neither DER nor PEM with a CERTIFICATE block");
  if (blocks.size() > 1) malformed("PEM input holds more than one CERTIFICATE block");
  return parse_der(decode_pem_body(blocks.front().body));
}

std::vector<CertificateSummary> parse_pem_bundle(std::string_view text) {
  std::vector<CertificateSummary> out;
  for (const auto& block : find_pem_blocks(text)) out.push_back(parse_der(decode_pem_body(block.body)));
  return out;
}

std::vector<CertificateSummary> load_pem_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pem_bundle(ss.str());
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "Verified";
    case Verdict::SelfSigned: return "SelfSigned";
    case Verdict::UntrustedRoot: return "UntrustedRoot";
    case Verdict::Expired: return "Expired";
    case Verdict::NotYetValid: return "NotYetValid";
    case Verdict::BadSignature: return "BadSignature";
    case Verdict::MalformedChain: return "MalformedChain";
  }
  return "Unknown";
}

bool signature_verifies(const CertificateSummary& subject, const CertificateSummary& issuer) {
  const unsigned char* p = subject.der_bytes.data();
  std::unique_ptr<X509, decltype(&X509_free)> x509(
      d2i_X509(nullptr, &p, static_cast<long>(subject.der_bytes.size())), X509_free);
  const unsigned char* k = issuer.subject_public_key_info.data();
  std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)> key(
      d2i_PUBKEY(nullptr, &k, static_cast<long>(issuer.subject_public_key_info.size())),
      EVP_PKEY_free);
  bool ok = x509 && key && X509_verify(x509.get(), key.get()) == 1;
  ERR_clear_error();
  return ok;
}

namespace {
constexpr std::size_t kMaxChainDepth = 16;

VerificationOutcome outcome(Verdict v, std::string detail) { return {v, std::move(detail)}; }
}  // namespace

VerificationOutcome verify_chain(const CertificateSummary& leaf,
                                 std::span<const CertificateSummary> presented_chain,
                                 std::span<const CertificateSummary> trust_store, UtcTime at_time) {
  if (presented_chain.size() > kMaxChainDepth)
    return outcome(Verdict::MalformedChain, "presented chain longer than " +
                                                std::to_string(kMaxChainDepth));
  std::vector<const CertificateSummary*> path{&leaf};
  for (const auto& c : presented_chain) {
    const auto& prev = *path.back();
    if (is_self_issued(prev))
      return outcome(Verdict::MalformedChain, "certificate follows a self-issued one");
    if (!dn_equal(prev.issuer, c.subject))
      return outcome(Verdict::MalformedChain, "chain element '" + c.subject.to_string() +
                                                  "' does not issue '" + prev.subject.to_string() + "'");
    path.push_back(&c);
  }

  if (is_self_issued(leaf)) return outcome(Verdict::SelfSigned, "issuer DN equals subject DN");

  const CertificateSummary& top = *path.back();
  auto in_store = [&](const CertificateSummary& c) {
    return std::any_of(trust_store.begin(), trust_store.end(),
                       [&](const auto& t) { return t.fingerprint == c.fingerprint; });
  };
  const bool top_is_anchor = path.size() > 1 && in_store(top);
  std::vector<const CertificateSummary*> anchors;
  if (!top_is_anchor) {
    for (const auto& t : trust_store)
      if (dn_equal(t.subject, top.issuer)) anchors.push_back(&t);
    if (anchors.empty())
      return outcome(Verdict::UntrustedRoot, "no trusted issuer for '" + top.issuer.to_string() + "'");
  }

  // Prefer an anchor whose key actually verifies the top of the path.
  const CertificateSummary* anchor = nullptr;
  for (auto* a : anchors)
    if (signature_verifies(top, *a)) {
      anchor = a;
      break;
    }
  if (!anchor && !anchors.empty()) anchor = anchors.front();

  std::vector<const CertificateSummary*> members = path;
  if (anchor) members.push_back(anchor);
  for (auto* m : members) {
    if (at_time > m->not_after)
      return outcome(Verdict::Expired, "'" + m->subject.to_string() + "' expired at " +
                                           to_rfc3339(m->not_after));
    if (at_time < m->not_before)
      return outcome(Verdict::NotYetValid, "'" + m->subject.to_string() + "' not valid before " +
                                               to_rfc3339(m->not_before));
  }

  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!signature_verifies(*path[i], *path[i + 1]))
      return outcome(Verdict::BadSignature, "signature on '" + path[i]->subject.to_string() +
                                                "' does not verify");
  if (anchor && !signature_verifies(top, *anchor))
    return outcome(Verdict::BadSignature, "trust anchor does not verify '" +
                                              top.subject.to_string() + "'");
  return outcome(Verdict::Verified, "path of " + std::to_string(members.size()) + " certificates");
}

}  // namespace certfraud
