#include "certfraud/features.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "certfraud/error.hpp"

namespace certfraud {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string attribute_or_none(const DistinguishedName& dn, std::string_view type) {
  auto v = dn.find(type);
  if (!v || trim(*v).empty()) return std::string(kJustNone);
  return std::string(*v);
}

}  // namespace

std::string_view to_string(Label l) { return l == Label::Positive ? "pos" : "neg"; }

std::optional<Label> parse_label(std::string_view s) {
  if (s == "pos") return Label::Positive;
  if (s == "neg") return Label::Negative;
  return std::nullopt;
}

std::string normalize_hostname(std::string_view name) {
  std::string s = lower(trim(name));
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s.starts_with("*.")) s.erase(0, 2);
  else if (s.starts_with("www.")) s.erase(0, 4);
  return s;
}

std::set<std::string> shingles(std::string_view text, Shingle n) {
  const auto len = static_cast<std::size_t>(n);
  std::set<std::string> out;
  if (text.size() < len) {
    for (char c : text) out.emplace(1, c);
    return out;
  }
  for (std::size_t i = 0; i + len <= text.size(); ++i) out.emplace(text.substr(i, len));
  return out;
}

double jaccard(std::string_view a, std::string_view b, Shingle n) {
  auto sa = shingles(a, n);
  auto sb = shingles(b, n);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& s : sa) common += sb.count(s);
  std::size_t uni = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

std::int64_t serial_digit_count(const Serial& serial) {
  return static_cast<std::int64_t>(serial.to_decimal().size());
}

BogusValueList::BogusValueList(std::set<std::string> entries) {
  for (const auto& e : entries) {
    auto t = lower(trim(e));
    if (!t.empty()) entries_.insert(std::move(t));
  }
  if (entries_.empty()) throw Error(ErrorCode::MalformedInput, "bogus value list is empty");
}

BogusValueList BogusValueList::defaults() {
  return BogusValueList({"--", "somestate", "somecity", "someorganization", "someorganizationalunit",
                         "localhost", "internet widgits pty ltd", "some-state", "default city",
                         "example", "test"});
}

BogusValueList BogusValueList::read(std::istream& in) {
  std::set<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    entries.emplace(t);
  }
  return BogusValueList(std::move(entries));
}

BogusValueList BogusValueList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read(in);
}

bool BogusValueList::matches(std::string_view value) const {
  return entries_.count(lower(trim(value))) != 0;
}

bool is_bogus_subject(const DistinguishedName& subject, const BogusValueList& bogus) {
  return std::any_of(subject.attributes().begin(), subject.attributes().end(),
                     [&](const DnAttribute& a) { return bogus.matches(a.value); });
}

FeatureVector extract_features(const CertificateSummary& cert,
                               std::span<const CertificateSummary> presented_chain,
                               std::string_view domain, UtcTime harvest_time,
                               const ExtractionContext& ctx) {
  const std::string dom(domain);
  if (!ctx.index.contains(dom, cert.fingerprint))
    throw Error(ErrorCode::IndexMismatch,
                "(" + dom + ", " + cert.fingerprint + ") is not in the corpus index");

  FeatureVector fv;
  fv.domain = dom;
  fv.f1_md5 = cert.signature_algorithm.oid == kMd5WithRsaOid;
  fv.f2_bogus_subject = is_bogus_subject(cert.subject, ctx.bogus);
  fv.f3_self_signed = dn_equal(cert.issuer, cert.subject);
  fv.f4_expired = harvest_time > cert.not_after;
  fv.f5_verification_failed =
      verify_chain(cert, presented_chain, ctx.trust_store, harvest_time).verdict != Verdict::Verified;
  const std::string serial = cert.serial.to_decimal();
  fv.f6_common_certificate = ctx.index.common_certificate(cert.fingerprint);
  fv.f7_common_serial = ctx.index.common_serial(serial);

  auto validity = std::chrono::floor<std::chrono::days>(cert.not_after - cert.not_before);
  fv.f13_validity_days = validity.count();
  fv.f8_validity_gt_3y = fv.f13_validity_days > kThreeYearsDays;

  fv.f9_issuer_cn = attribute_or_none(cert.issuer, "CN");
  fv.f10_issuer_org = attribute_or_none(cert.issuer, "O");
  fv.f11_issuer_country = attribute_or_none(cert.issuer, "C");
  fv.f12_subject_country = attribute_or_none(cert.subject, "C");
  fv.f14_serial_digit_count = static_cast<std::int64_t>(serial.size());
  fv.f15_name_similarity = jaccard(normalize_hostname(domain),
                                   normalize_hostname(attribute_or_none(cert.subject, "CN")), ctx.shingle);
  return fv;
}

}  // namespace certfraud
