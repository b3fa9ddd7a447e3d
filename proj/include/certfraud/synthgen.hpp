#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "certfraud/ml.hpp"

namespace certfraud {

inline constexpr std::size_t kBooleanFeatureCount = 8;     // f1..f8
inline constexpr std::size_t kCategoricalFeatureCount = 4;  // f9..f12
inline constexpr std::size_t kNumericFeatureCount = 3;      // f13..f15

using Support = std::vector<std::pair<double, double>>;  // (value, probability)

/// Independent per-feature marginals for one class.
struct MarginalSpec {
  std::string name;
  Label label = Label::Negative;
  std::array<std::optional<double>, kBooleanFeatureCount> boolean{};
  std::array<std::map<std::string, double>, kCategoricalFeatureCount> categorical{};  // empty: unspecified
  std::array<Support, kNumericFeatureCount> numeric{};                               // empty: unspecified

  /// Probabilities in [0,1], distributions summing to 1 +- 1e-9; throws Error(MalformedInput).
  void validate() const;
  /// True when feature `index` (0-based) has a distribution.
  bool covers(std::size_t index) const;

  friend bool operator==(const MarginalSpec&, const MarginalSpec&) = default;
};

nlohmann::json spec_to_json(const MarginalSpec& spec);
MarginalSpec spec_from_json(const nlohmann::json& j);
MarginalSpec load_spec(const std::string& path);
void save_spec(const MarginalSpec& spec, const std::string& path);

/// n_per_class rows from each spec, positives first, ids "pos-000000"/"neg-000000".
/// Throws Error(SpecIncomplete) if a feature included in `schema` is unspecified.
Dataset sample_corpus(const MarginalSpec& pos, const MarginalSpec& neg, std::size_t n_per_class,
                      std::uint64_t seed, const FeatureSchema& schema = FeatureSchema::classifier_default());

/// Empirical marginals of the rows carrying `label`. Throws Error(EmptyClass).
MarginalSpec fit_marginals(const Dataset& data, Label label);

/// Exact accuracy of the Bayes rule under equal priors over the listed
/// boolean features (1-based numbers, at most 20).
/// Throws Error(SubsetTooLarge), Error(SchemaError) or Error(SpecIncomplete).
double bayes_optimal_accuracy(const MarginalSpec& pos, const MarginalSpec& neg,
                              std::span<const int> feature_numbers);

/// The Bayes decision for one vector; ties go negative.
Label bayes_decision(const MarginalSpec& pos, const MarginalSpec& neg, std::span<const int> feature_numbers,
                     const FeatureVector& fv);

}  // namespace certfraud
