#include <gtest/gtest.h>

#include <sstream>

#include "certfraud/error.hpp"
#include "certfraud/report.hpp"
#include "certfraud/synthgen.hpp"

using namespace certfraud;

TEST(BooleanTable, CountsPercentages) {
  NamedFeatures set{"synthetic", {}};
  for (int i = 0; i < 100; ++i) {
    FeatureVector fv;
    fv.f3_self_signed = i < 28;
    fv.f1_md5 = i < 1;
    set.rows.push_back(fv);
  }
  std::vector<NamedFeatures> sets{set, {"empty", {}}};
  auto t = boolean_feature_table(sets);
  EXPECT_EQ(t.headers, (std::vector<std::string>{"synthetic (100)", "empty (0)"}));
  EXPECT_EQ(t.cell_text(2, 0), "28.0");
  EXPECT_EQ(t.cell_text(0, 0), "1.0");
  EXPECT_EQ(t.cell_text(1, 0), "0.0");
  for (std::size_t f = 0; f < 8; ++f) EXPECT_EQ(t.cell_text(f, 1), "n/a");

  std::ostringstream out;
  write_table_csv(out, t);
  EXPECT_EQ(out.str(),
            "feature,synthetic (100),empty (0)\nF1,1.0,n/a\nF2,0.0,n/a\nF3,28.0,n/a\nF4,0.0,n/a\n"
            "F5,0.0,n/a\nF6,0.0,n/a\nF7,0.0,n/a\nF8,0.0,n/a\n");
}

TEST(BooleanTable, ShippedAlexaSpecF3) {
  auto alexa = load_spec(std::string(CERTFRAUD_DATA_DIR) + "/specs/alexa.json");
  auto d = sample_corpus(alexa, alexa, 100000, 2);
  NamedFeatures set{"alexa", {}};
  for (auto& r : d.rows)
    if (r.label == Label::Positive) set.rows.push_back(r);
  std::vector<NamedFeatures> sets{set};
  auto t = boolean_feature_table(sets);
  EXPECT_NEAR(*t.cells[2][0], 28.0, 0.5);
}

TEST(Cdf, Steps) {
  const double v[] = {730, 365, 365};
  auto s = cdf_series(v);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].value, 365);
  EXPECT_NEAR(s[0].fraction, 0.6667, 1e-4);
  EXPECT_EQ(s[1], (CdfPoint{730, 1.0}));
  const double one[] = {4.5};
  EXPECT_EQ(cdf_series(one), (std::vector<CdfPoint>{{4.5, 1.0}}));
  EXPECT_THROW(cdf_series(std::span<const double>{}), Error);

  std::ostringstream out;
  write_cdf_csv(out, s);
  EXPECT_EQ(out.str(), "value,cum_frac\n365,0.6666666666666666\n730,1\n");
}

TEST(Cdf, MonotoneEndsAtOne) {
  std::vector<double> v;
  for (int i = 0; i < 997; ++i) v.push_back(static_cast<double>((i * 7919) % 113) / 7.0);
  auto s = cdf_series(v);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_LT(s[i - 1].value, s[i].value);
    EXPECT_LT(s[i - 1].fraction, s[i].fraction);
  }
  EXPECT_EQ(s.back().fraction, 1.0);
}

TEST(Cdf, PhishingSimilarityMassAtZero) {
  auto phish = load_spec(std::string(CERTFRAUD_DATA_DIR) + "/specs/phishing.json");
  auto d = sample_corpus(phish, phish, 20000, 4);
  std::vector<FeatureVector> rows;
  for (auto& r : d.rows)
    if (r.label == Label::Positive) rows.push_back(r);
  auto s = cdf_series(feature_values(rows, 14));
  EXPECT_EQ(s.front().value, 0.0);
  EXPECT_NEAR(s.front().fraction, 0.43, 0.015);
  EXPECT_THROW(feature_values(rows, 0), Error);
}

TEST(Categories, Summary) {
  std::vector<DomainRecord> recs(4);
  recs[0].http_ok = recs[0].https_ok = true;
  recs[1].https_ok = true;
  recs[2].http_ok = true;
  auto c = summarize_categories(recs);
  EXPECT_EQ(c, (CategoryCounts{1, 1, 1, 1}));
  std::ostringstream out;
  write_category_csv(out, c);
  EXPECT_EQ(out.str(), "category,count,percent\nboth,1,25.0\nhttps_only,1,25.0\nhttp_only,1,25.0\nneither,1,25.0\n");
}
