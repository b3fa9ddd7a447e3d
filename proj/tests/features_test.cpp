#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cert_factory.hpp"
#include "certfraud/error.hpp"
#include "certfraud/features.hpp"

using namespace certfraud;
using namespace certfraud::testing;

namespace {

const UtcTime kHarvest = utc_from_civil(2025, 6, 1);

struct Extractor {
  CorpusIndex index;
  std::vector<CertificateSummary> trust;
  BogusValueList bogus = BogusValueList::defaults();

  FeatureVector run(const TestCert& c, const std::string& domain, std::vector<CertificateSummary> chain = {}) {
    auto s = c.summary();
    index.add(domain, s.fingerprint, s.serial.to_decimal());
    ExtractionContext ctx{index, trust, bogus, Shingle::Bigram};
    return extract_features(s, chain, domain, kHarvest, ctx);
  }
};

CertOptions options(std::vector<std::pair<std::string, std::string>> subject) {
  CertOptions o;
  o.subject = std::move(subject);
  o.not_before = kHarvest - 100 * kDay;
  o.not_after = kHarvest + 265 * kDay;
  o.key_slot = 2;
  return o;
}

DistinguishedName subject_of(std::vector<std::pair<std::string, std::string>> attrs) {
  CertOptions o = options(std::move(attrs));
  return make_cert(o).summary().subject;
}

}  // namespace

TEST(Extract, Md5SignatureSetsF1) {
  auto o = options({{"CN", "md5.example"}});
  o.md5 = true;
  Extractor x;
  EXPECT_TRUE(x.run(make_cert(o), "md5.example").f1_md5);
  EXPECT_FALSE(x.run(make_cert(options({{"CN", "sha.example"}})), "sha.example").f1_md5);
}

TEST(Extract, BogusStateSetsF2) {
  Extractor x;
  auto fv = x.run(make_cert(options({{"ST", "somestate"}, {"CN", "b.example"}})), "b.example");
  EXPECT_TRUE(fv.f2_bogus_subject);
}

TEST(Extract, SelfSignedAndExpiredComposition) {
  auto o = options({{"CN", "old.example"}});
  o.not_before = kHarvest - 400 * kDay;
  o.not_after = kHarvest - kDay;
  Extractor x;
  auto fv = x.run(make_cert(o), "old.example");
  EXPECT_TRUE(fv.f3_self_signed);
  EXPECT_TRUE(fv.f4_expired);
  EXPECT_TRUE(fv.f5_verification_failed);
  EXPECT_EQ(fv.f13_validity_days, 399);
}

TEST(Extract, TrustedLeafPassesVerification) {
  CertOptions ca = options({{"O", "Trust Co"}, {"CN", "Trust Root"}});
  ca.ca = true;
  ca.key_slot = 0;
  ca.not_after = kHarvest + 3000 * kDay;
  auto root = make_cert(ca);
  Extractor x;
  x.trust = {root.summary()};
  auto fv = x.run(make_cert(options({{"C", "DE"}, {"CN", "good.example"}}), &root), "good.example");
  EXPECT_FALSE(fv.f3_self_signed);
  EXPECT_FALSE(fv.f5_verification_failed);
  EXPECT_EQ(fv.f9_issuer_cn, "Trust Root");
  EXPECT_EQ(fv.f10_issuer_org, "Trust Co");
  EXPECT_EQ(fv.f11_issuer_country, std::string(kJustNone));
  EXPECT_EQ(fv.f12_subject_country, "DE");
  EXPECT_DOUBLE_EQ(fv.f15_name_similarity, 1.0);
}

TEST(Extract, ValidityBoundaryForF8) {
  Extractor x;
  auto o = options({{"CN", "a.example"}});
  o.not_after = o.not_before + kThreeYearsDays * kDay;
  auto at = x.run(make_cert(o), "a.example");
  EXPECT_EQ(at.f13_validity_days, 1095);
  EXPECT_FALSE(at.f8_validity_gt_3y);
  o.not_after += kDay;
  auto over = x.run(make_cert(o), "b.example");
  EXPECT_EQ(over.f13_validity_days, 1096);
  EXPECT_TRUE(over.f8_validity_gt_3y);
  o.not_after = o.not_before + kThreeYearsDays * kDay + std::chrono::hours(23);
  EXPECT_FALSE(x.run(make_cert(o), "c.example").f8_validity_gt_3y);
}

TEST(Extract, MissingNameAttributesBecomeJustNone) {
  Extractor x;
  auto fv = x.run(make_cert(options({{"O", "No Name Org"}})), "noname.example");
  EXPECT_EQ(fv.f9_issuer_cn, std::string(kJustNone));
  EXPECT_EQ(fv.f10_issuer_org, "No Name Org");
  EXPECT_DOUBLE_EQ(fv.f15_name_similarity, jaccard("noname.example", "justnone"));
}

TEST(Extract, SerialDigitsAndIndexFlags) {
  Extractor x;
  auto o = options({{"CN", "s.example"}});
  o.serial = "1234567890123";
  auto c = make_cert(o);
  auto s = c.summary();
  x.index.add("other.example", s.fingerprint, s.serial.to_decimal());
  auto fv = x.run(c, "s.example");
  EXPECT_EQ(fv.f14_serial_digit_count, 13);
  EXPECT_TRUE(fv.f6_common_certificate);
  EXPECT_TRUE(fv.f7_common_serial);
}

TEST(Extract, IndexMismatch) {
  auto c = make_cert(options({{"CN", "m.example"}}));
  CorpusIndex empty;
  std::vector<CertificateSummary> trust;
  auto bogus = BogusValueList::defaults();
  ExtractionContext ctx{empty, trust, bogus, Shingle::Bigram};
  try {
    extract_features(c.summary(), {}, "m.example", kHarvest, ctx);
    FAIL() << "expected IndexMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexMismatch);
  }
}

TEST(Hostname, Normalization) {
  EXPECT_EQ(normalize_hostname("WWW.Example.COM."), "example.com");
  EXPECT_EQ(normalize_hostname("*.example.com"), "example.com");
  EXPECT_EQ(normalize_hostname("mail.example.com"), "mail.example.com");
  EXPECT_EQ(normalize_hostname("  Www.www.example.com "), "www.example.com");
  EXPECT_EQ(normalize_hostname(""), "");
}

TEST(Jaccard, FixedCases) {
  EXPECT_EQ(jaccard("paypal.com", "paypal.com"), 1.0);
  EXPECT_EQ(jaccard("abc.com", "xyz.net"), 0.0);
  EXPECT_EQ(jaccard("bank.com", "banc.com"), 5.0 / 9.0);
  EXPECT_EQ(jaccard("", ""), 1.0);
  EXPECT_EQ(jaccard("a", ""), 0.0);
  EXPECT_EQ(jaccard("ab", "ba", Shingle::Unigram), 1.0);
  EXPECT_EQ(jaccard("abcd", "abce", Shingle::Trigram), 1.0 / 3.0);
}

TEST(Jaccard, ShortTextFallsBackToCharacters) {
  EXPECT_EQ(shingles("a", Shingle::Bigram), (std::set<std::string>{"a"}));
  EXPECT_EQ(shingles("ab", Shingle::Trigram), (std::set<std::string>{"a", "b"}));
  EXPECT_EQ(shingles("abab", Shingle::Bigram), (std::set<std::string>{"ab", "ba"}));
}

TEST(Jaccard, SymmetricAndBounded) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(0, 12), ch(0, 4);
  for (int i = 0; i < 500; ++i) {
    std::string a, b;
    for (int k = len(rng); k > 0; --k) a += static_cast<char>('a' + ch(rng));
    for (int k = len(rng); k > 0; --k) b += static_cast<char>('a' + ch(rng));
    double ab = jaccard(a, b), ba = jaccard(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(jaccard(a, a), 1.0);
  }
}

TEST(SerialDigits, Cases) {
  EXPECT_EQ(serial_digit_count(Serial{}), 1);
  EXPECT_EQ(serial_digit_count(Serial::from_uint(1234567890123)), 13);
  Bytes max128(16, 0xff);
  EXPECT_EQ(serial_digit_count(Serial::from_magnitude(max128)), 39);
  Bytes min39{0x4b, 0x3b, 0x4c, 0xa8, 0x5a, 0x86, 0xc4, 0x7a, 0x09, 0x8a, 0x22, 0x40, 0x00, 0x00, 0x00, 0x00};
  EXPECT_EQ(Serial::from_magnitude(min39).to_decimal(), "100000000000000000000000000000000000000");
  EXPECT_EQ(serial_digit_count(Serial::from_magnitude(min39)), 39);
}

TEST(Bogus, DefaultList) {
  auto bogus = BogusValueList::defaults();
  EXPECT_TRUE(is_bogus_subject(subject_of({{"O", "SomeOrganization"}}), bogus));
  EXPECT_TRUE(is_bogus_subject(subject_of({{"CN", "localhost"}}), bogus));
  EXPECT_TRUE(is_bogus_subject(subject_of({{"C", "--"}}), bogus));
  EXPECT_FALSE(is_bogus_subject(
      subject_of({{"C", "US"}, {"ST", "California"}, {"L", "San Jose"}, {"O", "PayPal, Inc."}, {"CN", "www.paypal.com"}}),
      bogus));
}

TEST(Bogus, ShippedFileMatchesDefaults) {
  auto file = BogusValueList::load(std::string(CERTFRAUD_DATA_DIR) + "/bogus_values.txt");
  EXPECT_EQ(file.entries(), BogusValueList::defaults().entries());
  std::istringstream custom("# comment\n\n  Acme  \n");
  auto list = BogusValueList::read(custom);
  EXPECT_TRUE(list.matches("acme"));
  EXPECT_FALSE(list.matches("localhost"));
}

TEST(FeatureCsv, RoundTrip) {
  FeatureVector a;
  a.domain = "a.example";
  a.f1_md5 = a.f6_common_certificate = true;
  a.f9_issuer_cn = "Equifax, \"Secure\"";
  a.f13_validity_days = 365;
  a.f14_serial_digit_count = 39;
  a.f15_name_similarity = 0.5;
  a.label = Label::Positive;
  FeatureVector b;
  b.domain = "b.example";
  std::vector<FeatureVector> rows{a, b};
  std::stringstream ss;
  write_feature_csv(ss, rows);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "domain,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13,f14,f15,label");
  auto back = read_feature_csv(ss);
  EXPECT_EQ(back, rows);
}

TEST(FeatureCsv, ErrorsNameTheLine) {
  std::istringstream in(
      "domain,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13,f14,f15,label\n"
      "a,0,0,0,0,0,0,0,0,x,y,z,w,1,1,0.5,pos\n"
      "b,2,0,0,0,0,0,0,0,x,y,z,w,1,1,0.5,pos\n");
  try {
    read_feature_csv(in);
    FAIL() << "expected MalformedInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedInput);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream bad_header("domain,f1\n");
  EXPECT_THROW(read_feature_csv(bad_header), Error);
}
