#include "certfraud/corpus_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "certfraud/error.hpp"

namespace certfraud {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kCrcField = "crc32";

std::string crc_hex(std::string_view s) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc32(s));
  return buf;
}

ordered_json record_object(const DomainRecord& r) {
  ordered_json j;
  j["domain"] = r.domain;
  j["http_ok"] = r.http_ok;
  j["https_ok"] = r.https_ok;
  j["harvest_time"] = to_rfc3339(r.harvest_time);
  if (r.cert_der) j["cert_der_b64"] = base64_encode(*r.cert_der);
  if (r.presented_chain_der) {
    auto arr = ordered_json::array();
    for (const auto& c : *r.presented_chain_der) arr.push_back(base64_encode(c));
    j["chain_der_b64"] = std::move(arr);
  }
  if (r.tls_error) j["tls_error"] = *r.tls_error;
  return j;
}

[[noreturn]] void bad_record(const std::string& why) {
  throw Error(ErrorCode::SerializationFailure, why);
}

Bytes decode_b64_field(const ordered_json& v, const char* name) {
  if (!v.is_string()) bad_record(std::string(name) + " must be a string");
  auto bytes = base64_decode(v.get<std::string>());
  if (!bytes) bad_record(std::string(name) + " is not valid base64");
  return std::move(*bytes);
}

}  // namespace

std::string record_to_json_line(const DomainRecord& record) {
  ordered_json j = record_object(record);
  std::string body = j.dump();
  j[kCrcField] = crc_hex(body);
  return j.dump();
}

DomainRecord record_from_json_line(std::string_view line) {
  ordered_json j = ordered_json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) bad_record("line is not a JSON object");
  if (auto it = j.find(kCrcField); it != j.end()) {
    if (!it->is_string()) bad_record("crc32 must be a string");
    std::string expected = it->get<std::string>();
    j.erase(kCrcField);
    if (crc_hex(j.dump()) != expected) bad_record("crc32 mismatch");
  }

  DomainRecord r;
  try {
    r.domain = j.at("domain").get<std::string>();
    r.http_ok = j.at("http_ok").get<bool>();
    r.https_ok = j.at("https_ok").get<bool>();
    auto t = parse_rfc3339(j.at("harvest_time").get<std::string>());
    if (!t) bad_record("harvest_time is not RFC 3339");
    r.harvest_time = *t;
    if (auto it = j.find("cert_der_b64"); it != j.end() && !it->is_null())
      r.cert_der = decode_b64_field(*it, "cert_der_b64");
    if (auto it = j.find("chain_der_b64"); it != j.end() && !it->is_null()) {
      if (!it->is_array()) bad_record("chain_der_b64 must be a list");
      std::vector<Bytes> chain;
      for (const auto& c : *it) chain.push_back(decode_b64_field(c, "chain_der_b64[]"));
      r.presented_chain_der = std::move(chain);
    }
    if (auto it = j.find("tls_error"); it != j.end() && !it->is_null())
      r.tls_error = it->get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    bad_record(std::string("record schema: ") + e.what());
  }
  if (r.cert_der && !r.https_ok) bad_record("cert_der present but https_ok is false");
  return r;
}

CorpusWriter::CorpusWriter(const std::string& path, bool sync_each_append)
    : path_(path), sync_(sync_each_append) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::Io, "cannot open " + path + ": " + std::strerror(errno));

  // Cut an unterminated tail so the next record starts on a fresh line.
  struct stat st{};
  if (::fstat(fd_, &st) == 0 && st.st_size > 0) {
    off_t end = st.st_size;
    off_t keep = 0;
    char buf[4096];
    for (off_t pos = end; pos > 0 && keep == 0;) {
      off_t chunk = std::min<off_t>(pos, sizeof buf);
      pos -= chunk;
      if (::pread(fd_, buf, static_cast<std::size_t>(chunk), pos) != chunk) break;
      for (off_t i = chunk; i > 0; --i)
        if (buf[i - 1] == '\n') {
          keep = pos + i;
          break;
        }
    }
    if (keep != end && ::ftruncate(fd_, keep) != 0)
      throw Error(ErrorCode::Io, "cannot repair " + path + ": " + std::strerror(errno));
  }
  ::lseek(fd_, 0, SEEK_END);
}

CorpusWriter::CorpusWriter(CorpusWriter&& o) noexcept
    : path_(std::move(o.path_)), fd_(std::exchange(o.fd_, -1)), sync_(o.sync_) {}

CorpusWriter& CorpusWriter::operator=(CorpusWriter&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(o.path_);
    fd_ = std::exchange(o.fd_, -1);
    sync_ = o.sync_;
  }
  return *this;
}

CorpusWriter::~CorpusWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void CorpusWriter::append(const DomainRecord& record) {
  std::string line;
  try {
    line = record_to_json_line(record) + "\n";
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SerializationFailure, e.what());
  }
  std::size_t off = 0;
  while (off < line.size()) {
    ssize_t n = ::write(fd_, line.data() + off, line.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ENOSPC || errno == EDQUOT)
        throw Error(ErrorCode::StorageFull, path_ + ": " + std::strerror(errno));
      throw Error(ErrorCode::Io, path_ + ": " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0 && errno != EINVAL)
    throw Error(errno == ENOSPC ? ErrorCode::StorageFull : ErrorCode::Io,
                path_ + ": " + std::strerror(errno));
}

CorpusLoad read_corpus(std::istream& in) {
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();

  CorpusLoad out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < data.size()) {
    auto nl = data.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) {
      out.truncated_tail = true;
      break;
    }
    std::string_view line(data.data() + pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      out.records.push_back(record_from_json_line(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptCorpus, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

CorpusLoad load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_corpus(in);
}

void CorpusIndex::add(const std::string& domain, const std::string& fingerprint,
                      const std::string& serial_decimal) {
  by_fingerprint_[fingerprint].insert(domain);
  by_serial_[serial_decimal].insert({domain, fingerprint});
  holders_.insert({domain, fingerprint});
}

bool CorpusIndex::contains(const std::string& domain, const std::string& fingerprint) const {
  return holders_.count({domain, fingerprint}) != 0;
}

bool CorpusIndex::common_certificate(const std::string& fingerprint) const {
  auto it = by_fingerprint_.find(fingerprint);
  return it != by_fingerprint_.end() && it->second.size() >= 2;
}

bool CorpusIndex::common_serial(const std::string& serial_decimal) const {
  auto it = by_serial_.find(serial_decimal);
  return it != by_serial_.end() && it->second.size() >= 2;
}

nlohmann::json CorpusIndex::to_json() const {
  nlohmann::json j;
  j["format"] = "certfraud-corpus-index";
  j["version"] = 1;
  auto& serials = j["by_serial"] = nlohmann::json::object();
  for (const auto& [serial, holders] : by_serial_) {
    auto arr = nlohmann::json::array();
    for (const auto& [domain, fp] : holders) arr.push_back({domain, fp});
    serials[serial] = std::move(arr);
  }
  return j;
}

CorpusIndex CorpusIndex::from_json(const nlohmann::json& j) {
  CorpusIndex idx;
  try {
    if (j.at("format") != "certfraud-corpus-index" || j.at("version") != 1)
      throw Error(ErrorCode::SerializationFailure, "not a version 1 corpus index");
    for (const auto& [serial, holders] : j.at("by_serial").items())
      for (const auto& h : holders) idx.add(h.at(0).get<std::string>(), h.at(1).get<std::string>(), serial);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SerializationFailure, std::string("corpus index: ") + e.what());
  }
  return idx;
}

LatestCertificates latest_certificates(std::span<const DomainRecord> records) {
  std::unordered_map<std::string, std::size_t> latest;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = latest.try_emplace(records[i].domain, i);
    if (!inserted && records[i].harvest_time >= records[it->second].harvest_time) it->second = i;
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(latest.size());
  for (const auto& [domain, i] : latest) chosen.push_back(i);
  std::sort(chosen.begin(), chosen.end());

  LatestCertificates out;
  for (std::size_t i : chosen) {
    const auto& r = records[i];
    if (!r.cert_der) continue;
    IndexedCertificate e;
    e.domain = r.domain;
    e.harvest_time = r.harvest_time;
    try {
      e.cert = parse_certificate(*r.cert_der);
    } catch (const Error& err) {
      out.diagnostics.push_back(r.domain + ": " + err.what());
      continue;
    }
    if (r.presented_chain_der) {
      try {
        for (const auto& c : *r.presented_chain_der) e.chain.push_back(parse_certificate(c));
      } catch (const Error& err) {
        out.diagnostics.push_back(r.domain + ": presented chain dropped: " + err.what());
        e.chain.clear();
      }
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

CorpusIndex build_corpus_index(std::span<const IndexedCertificate> entries) {
  CorpusIndex idx;
  for (const auto& e : entries) idx.add(e.domain, e.cert.fingerprint, e.cert.serial.to_decimal());
  return idx;
}

CorpusIndex build_corpus_index(std::span<const DomainRecord> records) {
  auto latest = latest_certificates(records);
  return build_corpus_index(latest.entries);
}

}  // namespace certfraud
