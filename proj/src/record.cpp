#include "certfraud/record.hpp"

#include <cctype>

#include "certfraud/error.hpp"

namespace certfraud {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Both: return "both";
    case Category::HttpsOnly: return "https_only";
    case Category::HttpOnly: return "http_only";
    case Category::Neither: return "neither";
  }
  return "unknown";
}

Category DomainRecord::category() const {
  if (http_ok && https_ok) return Category::Both;
  if (https_ok) return Category::HttpsOnly;
  if (http_ok) return Category::HttpOnly;
  return Category::Neither;
}

void CategoryCounts::add(Category c) {
  switch (c) {
    case Category::Both: ++both; break;
    case Category::HttpsOnly: ++https_only; break;
    case Category::HttpOnly: ++http_only; break;
    case Category::Neither: ++neither; break;
  }
}

std::string canonical_domain(std::string_view name) {
  auto invalid = [&](const char* why) {
    return Error(ErrorCode::InvalidDomainName, "'" + std::string(name) + "': " + why);
  };
  std::string out;
  out.reserve(name.size());
  for (char c : name) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (!out.empty() && out.back() == '.') out.pop_back();
  if (out.empty()) throw invalid("empty name");
  if (out.size() > 253) throw invalid("name longer than 253 characters");

  std::size_t label_start = 0;
  for (std::size_t i = 0; i <= out.size(); ++i) {
    if (i == out.size() || out[i] == '.') {
      std::size_t len = i - label_start;
      if (len == 0) throw invalid("empty label");
      if (len > 63) throw invalid("label longer than 63 characters");
      if (out[label_start] == '-' || out[i - 1] == '-') throw invalid("label starts or ends with '-'");
      label_start = i + 1;
      continue;
    }
    char c = out[i];
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    if (!ok) throw invalid("illegal character");
  }
  return out;
}

}  // namespace certfraud
