#include <charconv>
#include <cstdio>
#include <fstream>

#include "certfraud/error.hpp"
#include "certfraud/features.hpp"

namespace certfraud {

namespace {

constexpr std::string_view kHeader =
    "domain,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13,f14,f15,label";

std::string csv_quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string maybe_quoted(std::string_view s) {
  return s.find_first_of(",\"\r\n") == std::string_view::npos ? std::string(s) : csv_quoted(s);
}

// One CSV record; false at end of input. Quoted fields may span lines.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (in_quotes) throw Error(ErrorCode::MalformedInput, "feature csv: unterminated quote");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

[[noreturn]] void bad(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::MalformedInput, "feature csv line " + std::to_string(line) + ": " + why);
}

bool parse_bool(const std::string& s, std::size_t line) {
  if (s == "0") return false;
  if (s == "1") return true;
  bad(line, "boolean must be 0 or 1, got '" + s + "'");
}

std::int64_t parse_int(const std::string& s, std::size_t line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || v < 0) bad(line, "bad integer '" + s + "'");
  return v;
}

double parse_real(const std::string& s, std::size_t line) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !(v >= 0.0 && v <= 1.0))
    bad(line, "similarity must be a real in [0,1], got '" + s + "'");
  return v;
}

}  // namespace

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> rows) {
  out << kHeader << '\n';
  char real[32];
  for (const auto& r : rows) {
    std::snprintf(real, sizeof real, "%.6f", r.f15_name_similarity);
    out << maybe_quoted(r.domain) << ',' << r.f1_md5 << ',' << r.f2_bogus_subject << ','
        << r.f3_self_signed << ',' << r.f4_expired << ',' << r.f5_verification_failed << ','
        << r.f6_common_certificate << ',' << r.f7_common_serial << ',' << r.f8_validity_gt_3y << ','
        << csv_quoted(r.f9_issuer_cn) << ',' << csv_quoted(r.f10_issuer_org) << ','
        << csv_quoted(r.f11_issuer_country) << ',' << csv_quoted(r.f12_subject_country) << ','
        << r.f13_validity_days << ',' << r.f14_serial_digit_count << ',' << real << ','
        << (r.label ? to_string(*r.label) : "") << '\n';
  }
}

std::vector<FeatureVector> read_feature_csv(std::istream& in) {
  std::vector<std::string> f;
  std::size_t line = 0;
  if (!read_record(in, f, line)) throw Error(ErrorCode::MalformedInput, "feature csv: empty input");
  std::string header;
  for (std::size_t i = 0; i < f.size(); ++i) header += (i ? "," : "") + f[i];
  if (header != kHeader) bad(1, "unexpected header");

  std::vector<FeatureVector> rows;
  while (true) {
    std::size_t start_line = line + 1;
    if (!read_record(in, f, line)) break;
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 17) bad(start_line, "expected 17 fields, got " + std::to_string(f.size()));
    FeatureVector r;
    r.domain = f[0];
    r.f1_md5 = parse_bool(f[1], start_line);
    r.f2_bogus_subject = parse_bool(f[2], start_line);
    r.f3_self_signed = parse_bool(f[3], start_line);
    r.f4_expired = parse_bool(f[4], start_line);
    r.f5_verification_failed = parse_bool(f[5], start_line);
    r.f6_common_certificate = parse_bool(f[6], start_line);
    r.f7_common_serial = parse_bool(f[7], start_line);
    r.f8_validity_gt_3y = parse_bool(f[8], start_line);
    r.f9_issuer_cn = f[9].empty() ? std::string(kJustNone) : f[9];
    r.f10_issuer_org = f[10].empty() ? std::string(kJustNone) : f[10];
    r.f11_issuer_country = f[11].empty() ? std::string(kJustNone) : f[11];
    r.f12_subject_country = f[12].empty() ? std::string(kJustNone) : f[12];
    r.f13_validity_days = parse_int(f[13], start_line);
    r.f14_serial_digit_count = parse_int(f[14], start_line);
    r.f15_name_similarity = parse_real(f[15], start_line);
    if (!f[16].empty()) {
      r.label = parse_label(f[16]);
      if (!r.label) bad(start_line, "label must be pos, neg or empty");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<FeatureVector> load_feature_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_feature_csv(in);
}

}  // namespace certfraud
