#include "certfraud/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "certfraud/error.hpp"
#include "certfraud/ml.hpp"

namespace certfraud {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string one_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string BooleanTable::cell_text(std::size_t feature, std::size_t column) const {
  const auto& c = cells.at(feature).at(column);
  return c ? one_decimal(*c) : "n/a";
}

BooleanTable boolean_feature_table(std::span<const NamedFeatures> datasets) {
  BooleanTable t;
  for (const auto& d : datasets) {
    t.headers.push_back(d.name + " (" + std::to_string(d.rows.size()) + ")");
    for (std::size_t f = 0; f < 8; ++f) {
      if (d.rows.empty()) {
        t.cells[f].push_back(std::nullopt);
        continue;
      }
      std::size_t on = 0;
      for (const auto& r : d.rows) on += numeric_value(r, f) != 0.0;
      t.cells[f].push_back(100.0 * static_cast<double>(on) / static_cast<double>(d.rows.size()));
    }
  }
  return t;
}

void write_table_csv(std::ostream& out, const BooleanTable& table) {
  out << "feature";
  for (const auto& h : table.headers) out << ',' << csv_field(h);
  out << '\n';
  for (std::size_t f = 0; f < 8; ++f) {
    out << 'F' << f + 1;
    for (std::size_t c = 0; c < table.headers.size(); ++c) out << ',' << table.cell_text(f, c);
    out << '\n';
  }
}

std::vector<CdfPoint> cdf_series(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values for CDF");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.push_back({v[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

void write_cdf_csv(std::ostream& out, std::span<const CdfPoint> series) {
  out << "value,cum_frac\n";
  for (const auto& p : series) out << shortest(p.value) << ',' << shortest(p.fraction) << '\n';
}

std::vector<double> feature_values(std::span<const FeatureVector> rows, std::size_t index) {
  if (!is_numeric(feature_kind(index)))
    throw Error(ErrorCode::SchemaError, feature_name(index) + " is not numeric");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(numeric_value(r, index));
  return out;
}

CategoryCounts summarize_categories(std::span<const DomainRecord> records) {
  CategoryCounts c;
  for (const auto& r : records) c.add(r.category());
  return c;
}

void write_category_csv(std::ostream& out, const CategoryCounts& counts) {
  out << "category,count,percent\n";
  const std::pair<Category, std::size_t> rows[] = {{Category::Both, counts.both},
                                                   {Category::HttpsOnly, counts.https_only},
                                                   {Category::HttpOnly, counts.http_only},
                                                   {Category::Neither, counts.neither}};
  for (const auto& [cat, n] : rows) {
    out << to_string(cat) << ',' << n << ',';
    if (counts.total() == 0) out << "n/a\n";
    else out << one_decimal(100.0 * static_cast<double>(n) / static_cast<double>(counts.total())) << '\n';
  }
}

}  // namespace certfraud
