#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "certfraud/cert_model.hpp"
#include "certfraud/corpus_store.hpp"

namespace certfraud {

/// Placeholder for a missing DN attribute.
inline constexpr std::string_view kJustNone = "JustNone";

enum class Label { Positive, Negative };

std::string_view to_string(Label l);  // "pos" / "neg"
std::optional<Label> parse_label(std::string_view s);

struct FeatureVector {
  std::string domain;
  bool f1_md5 = false;
  bool f2_bogus_subject = false;
  bool f3_self_signed = false;
  bool f4_expired = false;
  bool f5_verification_failed = false;
  bool f6_common_certificate = false;
  bool f7_common_serial = false;
  bool f8_validity_gt_3y = false;
  std::string f9_issuer_cn{kJustNone};
  std::string f10_issuer_org{kJustNone};
  std::string f11_issuer_country{kJustNone};
  std::string f12_subject_country{kJustNone};
  std::int64_t f13_validity_days = 0;
  std::int64_t f14_serial_digit_count = 1;
  double f15_name_similarity = 0.0;
  std::optional<Label> label;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Validity longer than this many days sets f8.
inline constexpr std::int64_t kThreeYearsDays = 1095;

/// Shingle length for the host/common-name Jaccard coefficient.
enum class Shingle { Unigram = 1, Bigram = 2, Trigram = 3 };

/// Lowercases, strips a trailing dot and one leading "*." or "www.".
std::string normalize_hostname(std::string_view name);

/// Set of overlapping n-character substrings; the character set when the
/// text is shorter than n.
std::set<std::string> shingles(std::string_view text, Shingle n);

/// |S(a) ∩ S(b)| / |S(a) ∪ S(b)|; 1.0 when both are empty. Larger is more similar.
double jaccard(std::string_view a, std::string_view b, Shingle n = Shingle::Bigram);

/// Digits in the decimal rendering; zero has one digit.
std::int64_t serial_digit_count(const Serial& serial);

class BogusValueList {
 public:
  explicit BogusValueList(std::set<std::string> entries);

  /// Built-in template placeholders ("--", "somestate", "localhost", ...).
  static BogusValueList defaults();
  /// One value per line; '#' comments and blank lines skipped.
  static BogusValueList read(std::istream& in);
  static BogusValueList load(const std::string& path);

  bool matches(std::string_view value) const;
  const std::set<std::string>& entries() const { return entries_; }

 private:
  std::set<std::string> entries_;
};

bool is_bogus_subject(const DistinguishedName& subject, const BogusValueList& bogus);

struct ExtractionContext {
  const CorpusIndex& index;
  std::span<const CertificateSummary> trust_store;
  const BogusValueList& bogus;
  Shingle shingle = Shingle::Bigram;
};

/// Throws Error(IndexMismatch) when (domain, fingerprint) is not in the index.
FeatureVector extract_features(const CertificateSummary& cert,
                               std::span<const CertificateSummary> presented_chain,
                               std::string_view domain, UtcTime harvest_time,
                               const ExtractionContext& ctx);

// Feature CSV: header "domain,f1,...,f15,label".
void write_feature_csv(std::ostream& out, std::span<const FeatureVector> rows);
/// Throws Error(MalformedInput) with the offending line number.
std::vector<FeatureVector> read_feature_csv(std::istream& in);
std::vector<FeatureVector> load_feature_csv(const std::string& path);

}  // namespace certfraud
