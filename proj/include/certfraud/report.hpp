#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "certfraud/features.hpp"
#include "certfraud/record.hpp"

namespace certfraud {

struct NamedFeatures {
  std::string name;
  std::vector<FeatureVector> rows;
};

/// Percent of rows with f1..f8 true, one column per dataset.
struct BooleanTable {
  std::vector<std::string> headers;                        // "alexa (33905)"
  std::array<std::vector<std::optional<double>>, 8> cells;  // nullopt for an empty dataset

  /// "28.0", or "n/a".
  std::string cell_text(std::size_t feature, std::size_t column) const;
};

BooleanTable boolean_feature_table(std::span<const NamedFeatures> datasets);
void write_table_csv(std::ostream& out, const BooleanTable& table);

struct CdfPoint {
  double value = 0;
  double fraction = 0;
  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

/// Distinct values ascending with cumulative fractions. Throws Error(EmptyInput).
std::vector<CdfPoint> cdf_series(std::span<const double> values);
void write_cdf_csv(std::ostream& out, std::span<const CdfPoint> series);

/// Values of numeric feature `index` (0-based) across rows.
std::vector<double> feature_values(std::span<const FeatureVector> rows, std::size_t index);

CategoryCounts summarize_categories(std::span<const DomainRecord> records);
/// "category,count,percent" rows in both/https_only/http_only/neither order.
void write_category_csv(std::ostream& out, const CategoryCounts& counts);

}  // namespace certfraud
