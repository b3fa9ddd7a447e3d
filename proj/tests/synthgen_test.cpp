#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "certfraud/error.hpp"
#include "certfraud/synthgen.hpp"

using namespace certfraud;

namespace {

const std::string kSpecs = std::string(CERTFRAUD_DATA_DIR) + "/specs/";

MarginalSpec spec(const std::string& name) { return load_spec(kSpecs + name + ".json"); }

MarginalSpec booleans_only(Label label, std::array<double, 8> p) {
  MarginalSpec s;
  s.label = label;
  for (std::size_t i = 0; i < 8; ++i) s.boolean[i] = p[i];
  return s;
}

const FeatureSchema kBooleanSchema = [] {
  const int f[] = {1, 2, 3, 4, 5, 6, 7, 8};
  return FeatureSchema::with_features(f);
}();

double rate(const Dataset& d, Label label, std::size_t feature) {
  std::size_t on = 0, n = 0;
  for (const auto& r : d.rows) {
    if (r.label != label) continue;
    ++n;
    on += numeric_value(r, feature) != 0.0;
  }
  return static_cast<double>(on) / static_cast<double>(n);
}

}  // namespace

TEST(ShippedSpecs, LoadAndValidate) {
  for (auto name : {"alexa", "com", "net", "phishing", "typosquatting"}) {
    auto s = spec(name);
    EXPECT_EQ(s.name, name);
    for (std::size_t f = 0; f < kFeatureCount; ++f) EXPECT_TRUE(s.covers(f)) << name << " f" << f + 1;
  }
  EXPECT_EQ(spec("phishing").label, Label::Positive);
  EXPECT_EQ(spec("alexa").label, Label::Negative);
  EXPECT_DOUBLE_EQ(*spec("phishing").boolean[0], 0.35);
}

TEST(SpecFile, JsonRoundTrip) {
  auto s = spec("alexa");
  EXPECT_EQ(spec_from_json(spec_to_json(s)), s);
  auto path = (std::filesystem::temp_directory_path() / "certfraud_spec_test.json").string();
  save_spec(s, path);
  EXPECT_EQ(load_spec(path), s);
}

TEST(SpecFile, RejectsBadDistributions) {
  auto j = spec_to_json(spec("alexa"));
  j["boolean"]["f1"] = 1.5;
  EXPECT_THROW(spec_from_json(j), Error);
  auto k = spec_to_json(spec("alexa"));
  k["numeric"]["f13"][0][1] = 0.9;
  EXPECT_THROW(spec_from_json(k), Error);
  auto u = spec_to_json(spec("alexa"));
  u["boolean"]["f99"] = 0.5;
  EXPECT_THROW(spec_from_json(u), Error);
}

TEST(Sample, PhishingF1Frequency) {
  auto d = sample_corpus(spec("phishing"), spec("alexa"), 10000, 1);
  EXPECT_NEAR(rate(d, Label::Positive, 0), 0.35, 0.015);
  EXPECT_EQ(d.rows.size(), 20000u);
  EXPECT_EQ(d.rows.front().domain, "pos-000000");
  EXPECT_EQ(d.rows.back().domain, "neg-009999");
}

TEST(Sample, CertainFeaturesAlwaysTrue) {
  auto all = booleans_only(Label::Positive, {1, 1, 1, 1, 1, 1, 1, 1});
  auto none = booleans_only(Label::Negative, {0, 0, 0, 0, 0, 0, 0, 0});
  auto d = sample_corpus(all, none, 50, 3, kBooleanSchema);
  for (const auto& r : d.rows)
    for (std::size_t f = 0; f < 8; ++f) EXPECT_EQ(numeric_value(r, f), r.label == Label::Positive ? 1.0 : 0.0);
}

TEST(Sample, DeterministicPerSeed) {
  auto a = sample_corpus(spec("phishing"), spec("alexa"), 300, 42);
  auto b = sample_corpus(spec("phishing"), spec("alexa"), 300, 42);
  auto c = sample_corpus(spec("phishing"), spec("alexa"), 300, 43);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_NE(a.rows, c.rows);
}

TEST(Sample, MissingFeatureIsIncomplete) {
  auto pos = booleans_only(Label::Positive, {.5, .5, .5, .5, .5, .5, .5, .5});
  auto neg = pos;
  neg.label = Label::Negative;
  try {
    sample_corpus(pos, neg, 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecIncomplete);
  }
  EXPECT_NO_THROW(sample_corpus(pos, neg, 10, 1, kBooleanSchema));
}

TEST(Fit, RecoversRates) {
  Dataset d;
  for (int i = 0; i < 100; ++i) {
    FeatureVector fv;
    fv.domain = "t" + std::to_string(i);
    fv.f1_md5 = i < 26;
    fv.f13_validity_days = i < 50 ? 365 : 730;
    fv.f9_issuer_cn = i < 10 ? "Equifax" : "Other";
    fv.label = Label::Positive;
    d.rows.push_back(fv);
  }
  auto s = fit_marginals(d, Label::Positive);
  EXPECT_DOUBLE_EQ(*s.boolean[0], 0.26);
  EXPECT_DOUBLE_EQ(s.categorical[0].at("Equifax"), 0.10);
  EXPECT_EQ(s.numeric[0], (Support{{365, 0.5}, {730, 0.5}}));
  EXPECT_THROW(fit_marginals(d, Label::Negative), Error);
}

TEST(Fit, SingleRowIsPointMass) {
  Dataset d;
  FeatureVector fv;
  fv.domain = "only";
  fv.f3_self_signed = true;
  fv.f15_name_similarity = 0.25;
  fv.label = Label::Negative;
  d.rows.push_back(fv);
  auto s = fit_marginals(d, Label::Negative);
  EXPECT_EQ(*s.boolean[2], 1.0);
  EXPECT_EQ(*s.boolean[0], 0.0);
  EXPECT_EQ(s.numeric[2], (Support{{0.25, 1.0}}));
  EXPECT_EQ(s.categorical[3].size(), 1u);
}

TEST(Fit, SampleRefitWithinTwoSigma) {
  auto src = spec("typosquatting");
  auto d = sample_corpus(src, spec("net"), 20000, 5);
  auto fit = fit_marginals(d, Label::Positive);
  // Each rate lands inside 2 sigma with ~95% probability, so a few of the
  // eight may not; all must sit inside 3 sigma.
  int within_two = 0;
  for (std::size_t f = 0; f < 8; ++f) {
    double p = *src.boolean[f];
    double sigma = std::sqrt(p * (1 - p) / 20000.0);
    double err = std::fabs(*fit.boolean[f] - p);
    within_two += err <= 2 * sigma;
    EXPECT_LE(err, 3 * sigma) << "f" << f + 1;
  }
  EXPECT_GE(within_two, 6);
}

TEST(Bayes, KnownValues) {
  const int subset[] = {1, 2, 3, 4, 6, 7, 8};
  auto a = spec("alexa");
  EXPECT_DOUBLE_EQ(bayes_optimal_accuracy(a, a, subset), 0.5);
  auto pos = booleans_only(Label::Positive, {1, .5, .5, .5, .5, .5, .5, .5});
  auto neg = booleans_only(Label::Negative, {0, .5, .5, .5, .5, .5, .5, .5});
  const int one[] = {1};
  EXPECT_DOUBLE_EQ(bayes_optimal_accuracy(pos, neg, one), 1.0);
  EXPECT_NEAR(bayes_optimal_accuracy(spec("phishing"), a, subset), 0.7378404970848406, 1e-12);
}

TEST(Bayes, MonotoneAndBounded) {
  auto p = spec("typosquatting"), n = spec("com");
  std::vector<int> subset;
  double last = 0.5;
  for (int f : {3, 1, 8, 6, 2, 7, 4, 5}) {
    subset.push_back(f);
    double acc = bayes_optimal_accuracy(p, n, subset);
    EXPECT_GE(acc, last - 1e-12);
    EXPECT_LE(acc, 1.0);
    last = acc;
  }
  EXPECT_DOUBLE_EQ(bayes_optimal_accuracy(p, n, std::vector<int>{}), 0.5);
}

TEST(Bayes, Preconditions) {
  auto a = spec("alexa");
  std::vector<int> many(21, 1);
  try {
    bayes_optimal_accuracy(a, a, many);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SubsetTooLarge);
  }
  const int numeric[] = {13};
  EXPECT_THROW(bayes_optimal_accuracy(a, a, numeric), Error);
  const int twice[] = {1, 1};
  EXPECT_THROW(bayes_optimal_accuracy(a, a, twice), Error);
}

TEST(Bayes, RuleAccuracyConvergesToOracle) {
  const int subset[] = {1, 2, 3, 4, 6, 7, 8};
  auto p = spec("phishing"), n = spec("alexa");
  auto d = sample_corpus(p, n, 100000, 11, kBooleanSchema);
  std::size_t right = 0;
  for (const auto& r : d.rows) right += bayes_decision(p, n, subset, r) == *r.label;
  double acc = static_cast<double>(right) / static_cast<double>(d.rows.size());
  EXPECT_NEAR(acc, bayes_optimal_accuracy(p, n, subset), 0.01);
}
