#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "certfraud/cert_model.hpp"
#include "certfraud/record.hpp"

namespace certfraud {

/// One NDJSON line (no trailing newline), including the crc32 integrity field.
std::string record_to_json_line(const DomainRecord& record);

/// Throws Error(SerializationFailure) on malformed JSON, schema or crc mismatch.
DomainRecord record_from_json_line(std::string_view line);

/// Append-only corpus file writer. A partial final line left by an earlier
/// crash is cut off when the file is opened.
class CorpusWriter {
 public:
  explicit CorpusWriter(const std::string& path, bool sync_each_append = true);
  CorpusWriter(CorpusWriter&&) noexcept;
  CorpusWriter& operator=(CorpusWriter&&) noexcept;
  CorpusWriter(const CorpusWriter&) = delete;
  CorpusWriter& operator=(const CorpusWriter&) = delete;
  ~CorpusWriter();

  /// Throws Error(StorageFull) when the device is full, Error(Io) otherwise.
  void append(const DomainRecord& record);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  int fd_ = -1;
  bool sync_ = true;
};

struct CorpusLoad {
  std::vector<DomainRecord> records;
  bool truncated_tail = false;  // an unterminated final line was dropped
};

/// Reads a corpus. Damage on any complete line throws Error(CorruptCorpus).
CorpusLoad read_corpus(std::istream& in);
CorpusLoad load_corpus(const std::string& path);

/// Corpus-wide duplicate maps. Immutable once built.
class CorpusIndex {
 public:
  using DomainSet = std::set<std::string>;
  using Holder = std::pair<std::string, std::string>;  // (domain, fingerprint)

  void add(const std::string& domain, const std::string& fingerprint,
           const std::string& serial_decimal);

  bool contains(const std::string& domain, const std::string& fingerprint) const;

  /// The exact certificate is served by at least two distinct domains.
  bool common_certificate(const std::string& fingerprint) const;

  /// At least two indexed certificates carry this serial.
  bool common_serial(const std::string& serial_decimal) const;

  const std::map<std::string, DomainSet>& by_fingerprint() const { return by_fingerprint_; }
  const std::map<std::string, std::set<Holder>>& by_serial() const { return by_serial_; }

  nlohmann::json to_json() const;
  static CorpusIndex from_json(const nlohmann::json& j);

 private:
  std::map<std::string, DomainSet> by_fingerprint_;
  std::map<std::string, std::set<Holder>> by_serial_;
  std::set<Holder> holders_;
};

struct IndexedCertificate {
  std::string domain;
  UtcTime harvest_time;
  CertificateSummary cert;
  std::vector<CertificateSummary> chain;
};

struct LatestCertificates {
  std::vector<IndexedCertificate> entries;
  std::vector<std::string> diagnostics;  // unparseable certificates, skipped
};

/// Keeps each domain's latest record (by harvest_time, later input wins ties)
/// and parses its certificate. Domains whose latest record has none are dropped.
LatestCertificates latest_certificates(std::span<const DomainRecord> records);

CorpusIndex build_corpus_index(std::span<const IndexedCertificate> entries);
CorpusIndex build_corpus_index(std::span<const DomainRecord> records);

}  // namespace certfraud
