#include <gtest/gtest.h>

#include "cert_factory.hpp"
#include "certfraud/cert_model.hpp"
#include "certfraud/error.hpp"

using namespace certfraud;
using namespace certfraud::testing;

namespace {

const UtcTime kStart = utc_from_civil(2024, 3, 1);

CertOptions leaf_options(const std::string& cn, const std::string& serial = "1000") {
  CertOptions o;
  o.subject = {{"C", "US"}, {"O", "Leaf Org"}, {"CN", cn}};
  o.serial = serial;
  o.not_before = kStart;
  o.not_after = kStart + 365 * kDay;
  o.key_slot = 2;
  return o;
}

CertOptions ca_options(const std::string& cn, int slot) {
  CertOptions o;
  o.subject = {{"C", "ZA"}, {"O", "Fixture Trust"}, {"CN", cn}};
  o.serial = "1";
  o.not_before = utc_from_civil(2020, 1, 1);
  o.not_after = utc_from_civil(2040, 1, 1);
  o.key_slot = slot;
  o.ca = true;
  return o;
}

DistinguishedName dn(std::vector<std::pair<std::string, std::string>> attrs) {
  std::vector<DnAttribute> out;
  for (auto& [oid, v] : attrs) out.push_back({oid, v});
  return DistinguishedName(out);
}

}  // namespace

TEST(ParseCertificate, SelfSignedFixtureRoundTrips) {
  CertOptions o;
  o.subject = {{"CN", "test.example"}};
  o.serial = "7";
  o.not_before = kStart;
  o.not_after = kStart + 365 * kDay;
  auto cert = make_cert(o);
  auto s = parse_certificate(cert.der);

  EXPECT_EQ(s.serial.to_decimal(), "7");
  EXPECT_EQ(s.subject.find("CN"), "test.example");
  EXPECT_EQ(s.issuer.find("CN"), "test.example");
  EXPECT_EQ(s.not_before, kStart);
  EXPECT_EQ(s.not_after - s.not_before, 365 * kDay);
  EXPECT_EQ(s.signature_algorithm.name, "sha256WithRSAEncryption");
  EXPECT_EQ(s.fingerprint, sha256_hex(cert.der));
  EXPECT_EQ(s.der_bytes, cert.der);
  EXPECT_TRUE(is_self_issued(s));
  EXPECT_TRUE(s.warnings.empty());
}

TEST(ParseCertificate, PemAndDerAgree) {
  auto cert = make_cert(leaf_options("pem.example"));
  auto pem = cert.pem();
  auto a = parse_certificate(as_bytes(pem));
  auto b = parse_certificate(cert.der);
  EXPECT_EQ(a.fingerprint, b.fingerprint);
  EXPECT_EQ(a.subject, b.subject);
}

TEST(ParseCertificate, Md5SignatureName) {
  auto o = leaf_options("md5.example");
  o.md5 = true;
  auto s = parse_certificate(make_cert(o).der);
  EXPECT_EQ(s.signature_algorithm.oid, kMd5WithRsaOid);
  EXPECT_EQ(s.signature_algorithm.name, "md5WithRSAEncryption");
}

TEST(ParseCertificate, TruncatedDerIsMalformed) {
  auto der = make_cert(leaf_options("cut.example")).der;
  Bytes half(der.begin(), der.begin() + static_cast<std::ptrdiff_t>(der.size() / 2));
  try {
    parse_certificate(half);
    FAIL() << "expected MalformedInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedInput);
  }
}

TEST(ParseCertificate, TrailingBytesRejected) {
  auto der = make_cert(leaf_options("tail.example")).der;
  der.push_back(0);
  EXPECT_THROW(parse_certificate(der), Error);
}

TEST(ParseCertificate, EmptyAndGarbageRejected) {
  EXPECT_THROW(parse_certificate(Bytes{}), Error);
  EXPECT_THROW(parse_certificate(as_bytes("-----BEGIN CERTIFICATE-----\n@@@\n-----END CERTIFICATE-----\n")),
               Error);
}

TEST(ParseCertificate, LargeAndNegativeSerials) {
  const std::string big = "170141183460469231731687303715884105727";
  auto s = parse_certificate(make_cert(leaf_options("big.example", big)).der);
  EXPECT_EQ(s.serial.to_decimal(), big);
  EXPECT_EQ(s.serial.to_decimal().size(), 39u);

  auto neg = parse_certificate(make_cert(leaf_options("neg.example", "-5")).der);
  EXPECT_EQ(neg.serial.to_decimal(), "5");
  EXPECT_FALSE(neg.warnings.empty());

  auto zero = parse_certificate(make_cert(leaf_options("zero.example", "0")).der);
  EXPECT_TRUE(zero.serial.is_zero());
  EXPECT_EQ(zero.serial.to_decimal(), "0");
}

TEST(ParseCertificate, GeneralizedTimeAfter2049) {
  auto o = leaf_options("far.example");
  o.not_after = utc_from_civil(2051, 7, 4, 12, 0, 0);
  auto s = parse_certificate(make_cert(o).der);
  EXPECT_EQ(s.not_after, utc_from_civil(2051, 7, 4, 12, 0, 0));
}

TEST(ParseCertificate, PemBundleKeepsOrder) {
  auto a = make_cert(leaf_options("a.example"));
  auto b = make_cert(leaf_options("b.example"));
  auto list = parse_pem_bundle("junk\n" + a.pem() + b.pem());
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].subject.find("CN"), "a.example");
  EXPECT_EQ(list[1].subject.find("CN"), "b.example");
}

TEST(SerialNumber, DecimalAndOrdering) {
  EXPECT_EQ(Serial::from_uint(1234567890123).to_decimal(), "1234567890123");
  EXPECT_EQ(Serial::from_uint(255).to_hex(), "ff");
  const Bytes with_zero{0x00, 0x01, 0x00};
  EXPECT_EQ(Serial::from_magnitude(with_zero), Serial::from_uint(256));
  EXPECT_LT(Serial::from_uint(5), Serial::from_uint(300));
}

TEST(DnEqual, Semantics) {
  auto a = dn({{"2.5.4.6", "US"}, {"2.5.4.3", "a.com"}});
  EXPECT_TRUE(dn_equal(a, a));
  EXPECT_TRUE(dn_equal(a, dn({{"2.5.4.3", "a.com"}, {"2.5.4.6", "US"}})));
  EXPECT_FALSE(dn_equal(dn({{"2.5.4.3", "a.com"}}), dn({{"2.5.4.3", "b.com"}})));
  EXPECT_TRUE(dn_equal(dn({{"2.5.4.3", " a.com "}}), dn({{"2.5.4.3", "a.com"}})));
  EXPECT_FALSE(dn_equal(dn({{"2.5.4.3", "x"}, {"2.5.4.3", "x"}}), dn({{"2.5.4.3", "x"}})));
}

TEST(DnRender, OneLine) {
  auto d = dn({{"2.5.4.3", "a"}, {"2.5.4.10", "b"}, {"1.2.3.4", "c"}});
  EXPECT_EQ(d.to_string(), "CN=a, O=b, 1.2.3.4=c");
  EXPECT_EQ(d.find("O"), "b");
  EXPECT_FALSE(d.find("C"));
}

class VerifyChain : public ::testing::Test {
 protected:
  void SetUp() override {
    root = make_cert(ca_options("Fixture Root", 0));
    inter = make_cert(ca_options("Fixture Intermediate", 1), &root);
    leaf = make_cert(leaf_options("leaf.example"), &root);
    deep_leaf = make_cert(leaf_options("deep.example"), &inter);
    store = {root.summary()};
  }
  VerificationOutcome check(const TestCert& c, std::vector<CertificateSummary> chain, UtcTime at) {
    return verify_chain(c.summary(), chain, store, at);
  }

  TestCert root, inter, leaf, deep_leaf;
  std::vector<CertificateSummary> store;
  UtcTime inside = kStart + 100 * kDay;
};

TEST_F(VerifyChain, TrustedLeafVerifies) {
  EXPECT_EQ(check(leaf, {}, inside).verdict, Verdict::Verified);
  EXPECT_EQ(check(leaf, {root.summary()}, inside).verdict, Verdict::Verified);
}

TEST_F(VerifyChain, IntermediatePath) {
  EXPECT_EQ(check(deep_leaf, {inter.summary()}, inside).verdict, Verdict::Verified);
  EXPECT_EQ(check(deep_leaf, {inter.summary(), root.summary()}, inside).verdict, Verdict::Verified);
  EXPECT_EQ(check(deep_leaf, {}, inside).verdict, Verdict::UntrustedRoot);
}

TEST_F(VerifyChain, SelfSignedLeaf) {
  auto self = make_cert(leaf_options("self.example"));
  EXPECT_EQ(check(self, {}, inside).verdict, Verdict::SelfSigned);
  store.push_back(self.summary());
  EXPECT_EQ(check(self, {}, inside).verdict, Verdict::SelfSigned);
}

TEST_F(VerifyChain, ExpiryWindow) {
  auto after = leaf.summary().not_after + kDay;
  EXPECT_EQ(check(leaf, {}, after).verdict, Verdict::Expired);
  EXPECT_EQ(check(leaf, {}, kStart - kDay).verdict, Verdict::NotYetValid);
  EXPECT_EQ(check(leaf, {}, leaf.summary().not_after).verdict, Verdict::Verified);
}

TEST_F(VerifyChain, UntrustedIssuer) {
  auto other_root = make_cert(ca_options("Other Root", 3));
  auto stray = make_cert(leaf_options("stray.example"), &other_root);
  EXPECT_EQ(check(stray, {}, inside).verdict, Verdict::UntrustedRoot);
  EXPECT_EQ(check(stray, {other_root.summary()}, inside).verdict, Verdict::UntrustedRoot);
}

TEST_F(VerifyChain, ForgedSignature) {
  auto forged = make_cert_signed_by(leaf_options("forged.example"), root, test_key(3));
  EXPECT_EQ(check(forged, {}, inside).verdict, Verdict::BadSignature);
}

TEST_F(VerifyChain, MisorderedChain) {
  EXPECT_EQ(check(deep_leaf, {root.summary(), inter.summary()}, inside).verdict, Verdict::MalformedChain);
  std::vector<CertificateSummary> long_chain(17, inter.summary());
  EXPECT_EQ(check(deep_leaf, long_chain, inside).verdict, Verdict::MalformedChain);
}
