#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "certfraud/features.hpp"

namespace certfraud {

enum class FeatureKind { Boolean, Categorical, Integer, Real };

inline constexpr std::size_t kFeatureCount = 15;

std::string_view to_string(FeatureKind k);

/// Fixed kind of feature `index` (0-based, so index 0 is f1).
FeatureKind feature_kind(std::size_t index);
/// "f1" .. "f15"
std::string feature_name(std::size_t index);

/// Boolean, integer and real features as a double.
double numeric_value(const FeatureVector& fv, std::size_t index);
const std::string& categorical_value(const FeatureVector& fv, std::size_t index);
bool is_numeric(FeatureKind k);

/// Per-feature kind plus classifier inclusion flag.
class FeatureSchema {
 public:
  /// f5 and f13 excluded, everything else included.
  static FeatureSchema classifier_default();
  /// Only the listed 1-based feature numbers included.
  static FeatureSchema with_features(std::span<const int> feature_numbers);

  bool included(std::size_t index) const { return included_.at(index); }
  void set_included(std::size_t index, bool on) { included_.at(index) = on; }
  std::vector<std::size_t> included_indices() const;

  /// SHA-256 over the canonical "name:kind:flag" listing.
  std::string fingerprint() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::array<bool, kFeatureCount> included_{};
};

struct Dataset {
  FeatureSchema schema = FeatureSchema::classifier_default();
  std::vector<FeatureVector> rows;  // every row labelled; `domain` is the stable row id

  std::size_t count(Label l) const;
  /// Throws Error(SchemaError) if a row lacks a label or no feature is included.
  void validate() const;
};

enum class ModelKind { Tree, BaggedTrees, Forest, Knn };

std::string_view to_string(ModelKind k);  // "tree" / "bagging" / "forest" / "knn"
std::optional<ModelKind> parse_model_kind(std::string_view s);

struct Hyperparameters {
  int max_depth = 12;
  int min_leaf = 2;
  int n_trees = 0;       // 0: 100 for forest, 50 for bagging
  int max_features = 0;  // 0: ceil(sqrt(d)) for forest, d otherwise
  int k = 5;

  /// Concrete values for `kind` with defaults filled in, for `d` included features.
  Hyperparameters resolved(ModelKind kind, std::size_t d) const;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct TreeNode {
  enum class Test : std::uint8_t { IsTrue, Equals, LessEqual };

  int feature = -1;  // 0-based feature index, -1 for a leaf
  Test test = Test::IsTrue;
  double threshold = 0.0;  // LessEqual
  std::string category;    // Equals; unseen values fail the test
  int left = -1;           // taken when the test passes
  int right = -1;
  std::uint32_t positives = 0;
  std::uint32_t total = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0

  const TreeNode& leaf_for(const FeatureVector& fv) const;
  /// Positive fraction of the reached leaf.
  double score(const FeatureVector& fv) const;
  int depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

/// Min-max ranges of numeric features, fitted on training rows.
struct MinMaxScaler {
  std::array<double, kFeatureCount> lo{};
  std::array<double, kFeatureCount> hi{};

  static MinMaxScaler fit(const Dataset& data);
  /// Scaled into [0,1]; out-of-range values clamp. Constant features map to 0.
  double scale(std::size_t index, double v) const;

  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;
};

/// Mean per-feature distance over included features: 0/1 mismatch for
/// boolean and categorical, |a-b| after min-max scaling for numerics.
double knn_distance(const FeatureVector& a, const FeatureVector& b, const FeatureSchema& schema,
                    const MinMaxScaler& scaler);

/// A feature vector with numerics already min-max scaled.
struct KnnInstance {
  std::array<double, kFeatureCount> values{};    // booleans as 0/1, numerics scaled
  std::array<std::string, kFeatureCount> text{};  // categorical features only
  Label label = Label::Negative;

  static KnnInstance from(const FeatureVector& fv, const MinMaxScaler& scaler);
  friend bool operator==(const KnnInstance&, const KnnInstance&) = default;
};

double knn_distance(const KnnInstance& a, const KnnInstance& b, std::span<const std::size_t> included);

struct KnnModel {
  MinMaxScaler scaler;
  std::vector<KnnInstance> instances;

  friend bool operator==(const KnnModel&, const KnnModel&) = default;
};

struct Prediction {
  Label label = Label::Negative;
  double score = 0.0;  // positive fraction; label is positive when score >= 0.5
};

class TrainedModel {
 public:
  ModelKind kind = ModelKind::Tree;
  Hyperparameters hyper;
  std::uint64_t seed = 0;
  FeatureSchema schema;
  std::vector<DecisionTree> trees;
  KnnModel knn;

  /// Assumes `fv` follows the training schema.
  Prediction predict(const FeatureVector& fv) const;
  /// Throws Error(SchemaError) when `schema` is not the training schema.
  Prediction predict(const FeatureVector& fv, const FeatureSchema& schema) const;
  /// Per-member labels for tree ensembles.
  std::vector<Label> member_votes(const FeatureVector& fv) const;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// SplitMix64 of (seed, stream): independent deterministic seed per ensemble member or fold.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Row indices sorted by row id (stable), the order every seeded operation starts from.
std::vector<std::size_t> canonical_order(const Dataset& data);

/// n draws with replacement from [0, n).
std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed);

/// CART tree over `rows` (indices into data.rows, duplicates allowed) using
/// Gini impurity decrease. `max_features` < d enables per-split subsampling.
DecisionTree train_tree(const Dataset& data, std::span<const std::size_t> rows,
                        const Hyperparameters& hyper, std::size_t max_features, std::uint64_t seed);

/// Throws Error(DegenerateDataset) unless both classes have >= 2 rows, and
/// Error(SchemaError) for unlabelled rows.
TrainedModel train(const Dataset& data, ModelKind kind, const Hyperparameters& hyper,
                   std::uint64_t seed);

struct Confusion {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  void add(Label truth, Label predicted);
  std::uint64_t total() const { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o);
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Undefined ratios (zero denominators) are nullopt, never 0.
struct Metrics {
  std::optional<double> pos_recall, pos_precision, neg_recall, neg_precision;

  static Metrics from(const Confusion& c);
};

struct RowOutcome {
  std::size_t row = 0;  // index into Dataset::rows
  int fold = 0;
  Label truth = Label::Negative;
  Prediction prediction;
};

struct EvalReport {
  ModelKind kind = ModelKind::Tree;
  Hyperparameters hyper;
  int k = 10;
  std::uint64_t seed = 0;
  Confusion confusion;  // summed over folds
  Metrics metrics;      // from the summed confusion
  std::vector<Confusion> per_fold;
  std::vector<RowOutcome> outcomes;  // in row order

  double accuracy() const;
};

/// Stratified fold id per row: each class shuffled from canonical order with
/// the seed, then dealt round-robin (continuing across classes).
std::vector<int> assign_folds(const Dataset& data, int k, std::uint64_t seed);

/// Throws Error(TooFewRows) if k < 2, there are fewer than k rows, or some
/// training split would leave a class with fewer than 2 rows.
EvalReport cross_validate(const Dataset& data, int k, ModelKind kind, const Hyperparameters& hyper,
                          std::uint64_t seed);

std::string format_report_table(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const TrainedModel& model);
/// Throws Error(CorruptModel) or Error(VersionMismatch).
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace certfraud
