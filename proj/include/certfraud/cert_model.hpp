#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "certfraud/encoding.hpp"
#include "certfraud/timeutil.hpp"

namespace certfraud {

struct DnAttribute {
  std::string oid;    // dotted decimal, always present
  std::string value;  // decoded to UTF-8

  /// "CN", "O", ... for well-known types, otherwise the dotted OID.
  std::string_view type_name() const;

  friend bool operator==(const DnAttribute&, const DnAttribute&) = default;
};

/// X.500 name. Attribute order is kept exactly as encoded.
class DistinguishedName {
 public:
  DistinguishedName() = default;
  explicit DistinguishedName(std::vector<DnAttribute> attributes)
      : attributes_(std::move(attributes)) {}

  const std::vector<DnAttribute>& attributes() const { return attributes_; }
  bool empty() const { return attributes_.empty(); }

  /// First value whose type matches `type` (short name like "CN" or dotted OID).
  std::optional<std::string_view> find(std::string_view type) const;

  /// OpenSSL-style one-line rendering: "CN=a, O=b".
  std::string to_string() const;

  friend bool operator==(const DistinguishedName&, const DistinguishedName&) = default;

 private:
  std::vector<DnAttribute> attributes_;
};

/// Multiset equality over (type, trimmed value); attribute order is ignored.
bool dn_equal(const DistinguishedName& a, const DistinguishedName& b);

/// Unsigned arbitrary-precision serial number, stored big-endian without leading zeros.
class Serial {
 public:
  Serial() = default;
  static Serial from_magnitude(std::span<const std::uint8_t> big_endian);
  static Serial from_uint(std::uint64_t v);

  const Bytes& magnitude() const { return magnitude_; }
  bool is_zero() const { return magnitude_.empty(); }
  std::string to_decimal() const;
  std::string to_hex() const;

  friend bool operator==(const Serial&, const Serial&) = default;
  /// Numeric order.
  friend std::strong_ordering operator<=>(const Serial& a, const Serial& b) {
    if (a.magnitude_.size() != b.magnitude_.size()) return a.magnitude_.size() <=> b.magnitude_.size();
    return a.magnitude_ <=> b.magnitude_;
  }

 private:
  Bytes magnitude_;
};

struct SignatureAlgorithm {
  std::string oid;
  std::string name;  // e.g. "md5WithRSAEncryption"; the OID when unknown
};

std::string signature_algorithm_name(std::string_view oid);

inline constexpr std::string_view kMd5WithRsaOid = "1.2.840.113549.1.1.4";

struct CertificateSummary {
  Serial serial;
  SignatureAlgorithm signature_algorithm;
  DistinguishedName issuer;
  DistinguishedName subject;
  UtcTime not_before;
  UtcTime not_after;
  Bytes der_bytes;
  std::string fingerprint;  // sha256(der_bytes), lowercase hex
  Bytes subject_public_key_info;
  std::vector<std::string> warnings;  // e.g. negative serial normalized
};

/// Parses one certificate from raw DER or from PEM text holding exactly one
/// CERTIFICATE block. Throws Error(MalformedInput).
CertificateSummary parse_certificate(std::span<const std::uint8_t> input);

/// Every CERTIFICATE block of a PEM bundle, in file order.
std::vector<CertificateSummary> parse_pem_bundle(std::string_view text);
std::vector<CertificateSummary> load_pem_bundle(const std::string& path);

/// Issuer DN equals subject DN.
inline bool is_self_issued(const CertificateSummary& c) { return dn_equal(c.issuer, c.subject); }

enum class Verdict { Verified, SelfSigned, UntrustedRoot, Expired, NotYetValid, BadSignature, MalformedChain };

std::string_view to_string(Verdict v);

struct VerificationOutcome {
  Verdict verdict = Verdict::MalformedChain;
  std::string detail;
};

/// True when `issuer`'s public key verifies the signature on `subject`.
bool signature_verifies(const CertificateSummary& subject, const CertificateSummary& issuer);

/// Path validation without hostname matching or revocation.
///
/// The presented chain must be ordered leaf-upwards, each element issuing the
/// previous one. Failures are reported in this order: MalformedChain,
/// SelfSigned, UntrustedRoot, Expired/NotYetValid, BadSignature.
VerificationOutcome verify_chain(const CertificateSummary& leaf,
                                 std::span<const CertificateSummary> presented_chain,
                                 std::span<const CertificateSummary> trust_store, UtcTime at_time);

}  // namespace certfraud
