#include "certfraud/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "certfraud/error.hpp"

namespace certfraud {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "certfraud-marginal-spec";
constexpr double kSumTolerance = 1e-9;
constexpr std::size_t kCategoricalBase = kBooleanFeatureCount;
constexpr std::size_t kNumericBase = kBooleanFeatureCount + kCategoricalFeatureCount;

struct SplitMix {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::MalformedInput, what + " probability out of [0,1]");
}

template <class It, class Prob>
void check_sum(It first, It last, Prob prob, const std::string& what) {
  double sum = 0;
  for (auto it = first; it != last; ++it) {
    check_probability(prob(*it), what);
    sum += prob(*it);
  }
  if (std::fabs(sum - 1.0) > kSumTolerance)
    throw Error(ErrorCode::MalformedInput, what + " probabilities sum to " + std::to_string(sum));
}

template <class Seq, class Prob>
auto pick(const Seq& seq, Prob prob, double u) {
  double acc = 0;
  auto last = seq.begin();
  for (auto it = seq.begin(); it != seq.end(); ++it) {
    acc += prob(*it);
    last = it;
    if (u < acc) return it;
  }
  return last;  // rounding slack lands on the final support point
}

void set_numeric(FeatureVector& fv, std::size_t idx, double v) {
  switch (idx) {
    case 12: fv.f13_validity_days = static_cast<std::int64_t>(std::llround(v)); break;
    case 13: fv.f14_serial_digit_count = static_cast<std::int64_t>(std::llround(v)); break;
    default: fv.f15_name_similarity = v; break;
  }
}

bool& boolean_ref(FeatureVector& fv, std::size_t idx) {
  switch (idx) {
    case 0: return fv.f1_md5;
    case 1: return fv.f2_bogus_subject;
    case 2: return fv.f3_self_signed;
    case 3: return fv.f4_expired;
    case 4: return fv.f5_verification_failed;
    case 5: return fv.f6_common_certificate;
    case 6: return fv.f7_common_serial;
    default: return fv.f8_validity_gt_3y;
  }
}

std::string& categorical_ref(FeatureVector& fv, std::size_t idx) {
  switch (idx) {
    case 8: return fv.f9_issuer_cn;
    case 9: return fv.f10_issuer_org;
    case 10: return fv.f11_issuer_country;
    default: return fv.f12_subject_country;
  }
}

FeatureVector sample_row(const MarginalSpec& spec, SplitMix& rng) {
  FeatureVector fv;
  for (std::size_t i = 0; i < kBooleanFeatureCount; ++i)
    if (spec.boolean[i]) boolean_ref(fv, i) = rng.uniform() < *spec.boolean[i];
  for (std::size_t i = 0; i < kCategoricalFeatureCount; ++i) {
    const auto& table = spec.categorical[i];
    if (table.empty()) continue;
    auto it = pick(table, [](const auto& kv) { return kv.second; }, rng.uniform());
    categorical_ref(fv, kCategoricalBase + i) = it->first;
  }
  for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
    const auto& support = spec.numeric[i];
    if (support.empty()) continue;
    auto it = pick(support, [](const auto& vp) { return vp.second; }, rng.uniform());
    set_numeric(fv, kNumericBase + i, it->first);
  }
  return fv;
}

std::vector<std::size_t> checked_subset(const MarginalSpec& pos, const MarginalSpec& neg,
                                        std::span<const int> feature_numbers) {
  if (feature_numbers.size() > 20)
    throw Error(ErrorCode::SubsetTooLarge, std::to_string(feature_numbers.size()) + " features exceed 20");
  std::vector<std::size_t> out;
  std::set<int> seen;
  for (int f : feature_numbers) {
    if (f < 1 || f > static_cast<int>(kBooleanFeatureCount))
      throw Error(ErrorCode::SchemaError, "f" + std::to_string(f) + " is not a boolean feature");
    if (!seen.insert(f).second) throw Error(ErrorCode::SchemaError, "f" + std::to_string(f) + " listed twice");
    auto idx = static_cast<std::size_t>(f - 1);
    if (!pos.boolean[idx] || !neg.boolean[idx])
      throw Error(ErrorCode::SpecIncomplete, "f" + std::to_string(f) + " unspecified");
    out.push_back(idx);
  }
  return out;
}

}  // namespace

bool MarginalSpec::covers(std::size_t index) const {
  if (index < kCategoricalBase) return boolean[index].has_value();
  if (index < kNumericBase) return !categorical[index - kCategoricalBase].empty();
  return !numeric.at(index - kNumericBase).empty();
}

void MarginalSpec::validate() const {
  for (std::size_t i = 0; i < kBooleanFeatureCount; ++i)
    if (boolean[i]) check_probability(*boolean[i], feature_name(i));
  for (std::size_t i = 0; i < kCategoricalFeatureCount; ++i)
    if (!categorical[i].empty())
      check_sum(categorical[i].begin(), categorical[i].end(), [](const auto& kv) { return kv.second; },
                feature_name(kCategoricalBase + i));
  for (std::size_t i = 0; i < kNumericFeatureCount; ++i)
    if (!numeric[i].empty())
      check_sum(numeric[i].begin(), numeric[i].end(), [](const auto& vp) { return vp.second; },
                feature_name(kNumericBase + i));
}

json spec_to_json(const MarginalSpec& spec) {
  json j;
  j["format"] = kFormat;
  j["version"] = 1;
  j["name"] = spec.name;
  j["label"] = to_string(spec.label);
  json b = json::object(), c = json::object(), n = json::object();
  for (std::size_t i = 0; i < kBooleanFeatureCount; ++i)
    if (spec.boolean[i]) b[feature_name(i)] = *spec.boolean[i];
  for (std::size_t i = 0; i < kCategoricalFeatureCount; ++i)
    if (!spec.categorical[i].empty()) c[feature_name(kCategoricalBase + i)] = spec.categorical[i];
  for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
    if (spec.numeric[i].empty()) continue;
    json pts = json::array();
    for (const auto& [v, p] : spec.numeric[i]) pts.push_back({v, p});
    n[feature_name(kNumericBase + i)] = std::move(pts);
  }
  j["boolean"] = std::move(b);
  j["categorical"] = std::move(c);
  j["numeric"] = std::move(n);
  return j;
}

MarginalSpec spec_from_json(const json& j) {
  MarginalSpec s;
  try {
    if (!j.is_object() || j.value("format", "") != kFormat)
      throw Error(ErrorCode::MalformedInput, "not a marginal spec document");
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::VersionMismatch, "unsupported spec version");
    s.name = j.value("name", "");
    auto label = parse_label(j.at("label").get<std::string>());
    if (!label) throw Error(ErrorCode::MalformedInput, "spec label must be pos or neg");
    s.label = *label;
    auto index_of = [](const std::string& key, std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        if (feature_name(i) == key) return i;
      throw Error(ErrorCode::MalformedInput, "unexpected feature '" + key + "'");
    };
    const json empty = json::object();
    auto section = [&](const char* key) -> const json& { return j.contains(key) ? j.at(key) : empty; };
    for (const auto& [k, v] : section("boolean").items())
      s.boolean[index_of(k, 0, kCategoricalBase)] = v.get<double>();
    for (const auto& [k, v] : section("categorical").items())
      s.categorical[index_of(k, kCategoricalBase, kNumericBase) - kCategoricalBase] =
          v.get<std::map<std::string, double>>();
    for (const auto& [k, v] : section("numeric").items()) {
      auto& support = s.numeric[index_of(k, kNumericBase, kFeatureCount) - kNumericBase];
      for (const auto& pt : v) support.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("marginal spec: ") + e.what());
  }
  s.validate();
  return s;
}

MarginalSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedInput, path + " is not valid JSON");
  return spec_from_json(j);
}

void save_spec(const MarginalSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << spec_to_json(spec).dump(1) << '\n';
  if (!out.flush()) throw Error(ErrorCode::Io, "write failed: " + path);
}

Dataset sample_corpus(const MarginalSpec& pos, const MarginalSpec& neg, std::size_t n_per_class,
                      std::uint64_t seed, const FeatureSchema& schema) {
  for (std::size_t f : schema.included_indices())
    for (const MarginalSpec* s : {&pos, &neg})
      if (!s->covers(f))
        throw Error(ErrorCode::SpecIncomplete, "spec '" + s->name + "' has no distribution for " + feature_name(f));
  pos.validate();
  neg.validate();

  Dataset data;
  data.schema = schema;
  data.rows.reserve(2 * n_per_class);
  const std::pair<const MarginalSpec*, Label> classes[] = {{&pos, Label::Positive}, {&neg, Label::Negative}};
  for (const auto& [spec, label] : classes) {
    const std::uint64_t class_seed = derive_seed(seed, label == Label::Positive ? 1 : 2);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      SplitMix rng{derive_seed(class_seed, i)};
      FeatureVector fv = sample_row(*spec, rng);
      char id[32];
      std::snprintf(id, sizeof id, "%s-%06zu", label == Label::Positive ? "pos" : "neg", i);
      fv.domain = id;
      fv.label = label;
      data.rows.push_back(std::move(fv));
    }
  }
  return data;
}

MarginalSpec fit_marginals(const Dataset& data, Label label) {
  std::vector<const FeatureVector*> rows;
  for (const auto& r : data.rows)
    if (r.label == label) rows.push_back(&r);
  if (rows.empty()) throw Error(ErrorCode::EmptyClass, std::string("no rows labelled ") + std::string(to_string(label)));

  MarginalSpec s;
  s.name = std::string(to_string(label));
  s.label = label;
  const double n = static_cast<double>(rows.size());
  for (std::size_t i = 0; i < kBooleanFeatureCount; ++i) {
    std::size_t t = 0;
    for (const auto* r : rows) t += numeric_value(*r, i) != 0.0;
    s.boolean[i] = static_cast<double>(t) / n;
  }
  for (std::size_t i = 0; i < kCategoricalFeatureCount; ++i) {
    std::map<std::string, std::size_t> counts;
    for (const auto* r : rows) ++counts[categorical_value(*r, kCategoricalBase + i)];
    for (const auto& [v, c] : counts) s.categorical[i][v] = static_cast<double>(c) / n;
  }
  for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
    std::map<double, std::size_t> counts;
    for (const auto* r : rows) ++counts[numeric_value(*r, kNumericBase + i)];
    for (const auto& [v, c] : counts) s.numeric[i].emplace_back(v, static_cast<double>(c) / n);
  }
  return s;
}

double bayes_optimal_accuracy(const MarginalSpec& pos, const MarginalSpec& neg,
                              std::span<const int> feature_numbers) {
  const auto idx = checked_subset(pos, neg, feature_numbers);
  const std::uint64_t outcomes = std::uint64_t{1} << idx.size();
  double acc = 0;
  for (std::uint64_t bits = 0; bits < outcomes; ++bits) {
    double pp = 1, pn = 1;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const bool on = (bits >> k) & 1;
      const double a = *pos.boolean[idx[k]], b = *neg.boolean[idx[k]];
      pp *= on ? a : 1 - a;
      pn *= on ? b : 1 - b;
    }
    acc += std::max(pp, pn) / 2;
  }
  return acc;
}

Label bayes_decision(const MarginalSpec& pos, const MarginalSpec& neg, std::span<const int> feature_numbers,
                     const FeatureVector& fv) {
  const auto idx = checked_subset(pos, neg, feature_numbers);
  double pp = 1, pn = 1;
  for (std::size_t i : idx) {
    const bool on = numeric_value(fv, i) != 0.0;
    pp *= on ? *pos.boolean[i] : 1 - *pos.boolean[i];
    pn *= on ? *neg.boolean[i] : 1 - *neg.boolean[i];
  }
  return pp > pn ? Label::Positive : Label::Negative;
}

}  // namespace certfraud
