#include "certfraud/ml.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "certfraud/error.hpp"

namespace certfraud {

namespace {

constexpr std::array<FeatureKind, kFeatureCount> kKinds{
    FeatureKind::Boolean,     FeatureKind::Boolean,     FeatureKind::Boolean,
    FeatureKind::Boolean,     FeatureKind::Boolean,     FeatureKind::Boolean,
    FeatureKind::Boolean,     FeatureKind::Boolean,     FeatureKind::Categorical,
    FeatureKind::Categorical, FeatureKind::Categorical, FeatureKind::Categorical,
    FeatureKind::Integer,     FeatureKind::Integer,     FeatureKind::Real,
};

constexpr double kGainEpsilon = 1e-12;

}  // namespace

std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Boolean: return "boolean";
    case FeatureKind::Categorical: return "categorical";
    case FeatureKind::Integer: return "integer";
    case FeatureKind::Real: return "real";
  }
  return "unknown";
}

FeatureKind feature_kind(std::size_t index) { return kKinds.at(index); }

std::string feature_name(std::size_t index) { return "f" + std::to_string(index + 1); }

bool is_numeric(FeatureKind k) { return k == FeatureKind::Integer || k == FeatureKind::Real; }

double numeric_value(const FeatureVector& fv, std::size_t index) {
  switch (index) {
    case 0: return fv.f1_md5;
    case 1: return fv.f2_bogus_subject;
    case 2: return fv.f3_self_signed;
    case 3: return fv.f4_expired;
    case 4: return fv.f5_verification_failed;
    case 5: return fv.f6_common_certificate;
    case 6: return fv.f7_common_serial;
    case 7: return fv.f8_validity_gt_3y;
    case 12: return static_cast<double>(fv.f13_validity_days);
    case 13: return static_cast<double>(fv.f14_serial_digit_count);
    case 14: return fv.f15_name_similarity;
    default: throw Error(ErrorCode::SchemaError, feature_name(index) + " is not numeric");
  }
}

const std::string& categorical_value(const FeatureVector& fv, std::size_t index) {
  switch (index) {
    case 8: return fv.f9_issuer_cn;
    case 9: return fv.f10_issuer_org;
    case 10: return fv.f11_issuer_country;
    case 11: return fv.f12_subject_country;
    default: throw Error(ErrorCode::SchemaError, feature_name(index) + " is not categorical");
  }
}

FeatureSchema FeatureSchema::classifier_default() {
  FeatureSchema s;
  s.included_.fill(true);
  s.included_[4] = false;   // f5
  s.included_[12] = false;  // f13
  return s;
}

FeatureSchema FeatureSchema::with_features(std::span<const int> feature_numbers) {
  FeatureSchema s;
  for (int n : feature_numbers) {
    if (n < 1 || n > static_cast<int>(kFeatureCount))
      throw Error(ErrorCode::SchemaError, "no feature f" + std::to_string(n));
    s.included_[static_cast<std::size_t>(n - 1)] = true;
  }
  return s;
}

std::vector<std::size_t> FeatureSchema::included_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (included_[i]) out.push_back(i);
  return out;
}

std::string FeatureSchema::fingerprint() const {
  std::string canon;
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    canon += feature_name(i) + ":" + std::string(to_string(kKinds[i])) + ":" +
             (included_[i] ? "1" : "0") + ";";
  return sha256_hex(as_bytes(canon));
}

std::size_t Dataset::count(Label l) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [&](const auto& r) { return r.label == l; }));
}

void Dataset::validate() const {
  if (schema.included_indices().empty()) throw Error(ErrorCode::SchemaError, "no features included");
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!rows[i].label)
      throw Error(ErrorCode::SchemaError, "row " + std::to_string(i) + " (" + rows[i].domain + ") has no label");
}

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Tree: return "tree";
    case ModelKind::BaggedTrees: return "bagging";
    case ModelKind::Forest: return "forest";
    case ModelKind::Knn: return "knn";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "tree") return ModelKind::Tree;
  if (s == "bagging") return ModelKind::BaggedTrees;
  if (s == "forest") return ModelKind::Forest;
  if (s == "knn") return ModelKind::Knn;
  return std::nullopt;
}

Hyperparameters Hyperparameters::resolved(ModelKind kind, std::size_t d) const {
  Hyperparameters h = *this;
  if (h.max_depth < 1 || h.min_leaf < 1 || h.k < 1 || h.n_trees < 0 || h.max_features < 0)
    throw Error(ErrorCode::Usage, "hyperparameters must be positive");
  if (h.n_trees == 0) h.n_trees = kind == ModelKind::Forest ? 100 : (kind == ModelKind::BaggedTrees ? 50 : 1);
  if (kind == ModelKind::Tree) h.n_trees = 1;
  if (h.max_features == 0)
    h.max_features = kind == ModelKind::Forest
                         ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))))
                         : static_cast<int>(d);
  h.max_features = std::min<int>(h.max_features, static_cast<int>(d));
  return h;
}

// ---------------------------------------------------------------------------
// Trees

const TreeNode& DecisionTree::leaf_for(const FeatureVector& fv) const {
  const TreeNode* n = &nodes.at(0);
  while (!n->is_leaf()) {
    auto f = static_cast<std::size_t>(n->feature);
    bool pass = false;
    switch (n->test) {
      case TreeNode::Test::IsTrue: pass = numeric_value(fv, f) != 0.0; break;
      case TreeNode::Test::Equals: pass = categorical_value(fv, f) == n->category; break;
      case TreeNode::Test::LessEqual: pass = numeric_value(fv, f) <= n->threshold; break;
    }
    n = &nodes[static_cast<std::size_t>(pass ? n->left : n->right)];
  }
  return *n;
}

double DecisionTree::score(const FeatureVector& fv) const {
  const auto& leaf = leaf_for(fv);
  return leaf.total ? static_cast<double>(leaf.positives) / leaf.total : 0.0;
}

int DecisionTree::depth() const {
  std::function<int(int)> rec = [&](int i) -> int {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    return n.is_leaf() ? 0 : 1 + std::max(rec(n.left), rec(n.right));
  };
  return nodes.empty() ? 0 : rec(0);
}

namespace {

struct Encoded {
  std::vector<std::size_t> features;  // included feature indices
  std::vector<std::vector<double>> columns;  // categorical columns hold codes
  std::vector<std::vector<std::string>> dictionaries;
  std::vector<std::uint8_t> positive;
};

Encoded encode(const Dataset& data) {
  Encoded e;
  e.features = data.schema.included_indices();
  e.columns.resize(e.features.size());
  e.dictionaries.resize(e.features.size());
  for (std::size_t s = 0; s < e.features.size(); ++s) {
    const std::size_t f = e.features[s];
    auto& col = e.columns[s];
    col.reserve(data.rows.size());
    if (feature_kind(f) == FeatureKind::Categorical) {
      std::map<std::string, int> codes;
      for (const auto& r : data.rows) codes.emplace(categorical_value(r, f), 0);
      int next = 0;
      for (auto& [value, code] : codes) {
        code = next++;
        e.dictionaries[s].push_back(value);
      }
      for (const auto& r : data.rows) col.push_back(codes.at(categorical_value(r, f)));
    } else {
      for (const auto& r : data.rows) col.push_back(numeric_value(r, f));
    }
  }
  for (const auto& r : data.rows) e.positive.push_back(r.label == Label::Positive);
  return e;
}

double gini(double n, double p) {
  if (n <= 0) return 0.0;
  double q = p / n;
  return 2.0 * q * (1.0 - q);
}

struct Split {
  double gain = 0.0;
  std::size_t slot = SIZE_MAX;
  TreeNode::Test test = TreeNode::Test::IsTrue;
  double threshold = 0.0;
  int code = -1;
};

class TreeBuilder {
 public:
  TreeBuilder(const Encoded& e, const Hyperparameters& h, std::size_t max_features, std::uint64_t seed)
      : e_(e), h_(h), m_(max_features), rng_(seed) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    const auto n = static_cast<std::uint32_t>(rows.size());
    std::uint32_t p = 0;
    for (auto r : rows) p += e_.positive[r];
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes.back().positives = p;
    tree_.nodes.back().total = n;

    if (depth >= h_.max_depth || p == 0 || p == n || n < 2u * static_cast<unsigned>(h_.min_leaf))
      return id;
    Split best = find_split(rows, n, p);
    if (best.slot == SIZE_MAX) return id;

    std::vector<std::size_t> left, right;
    const auto& col = e_.columns[best.slot];
    for (auto r : rows) (passes(best, col[r]) ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    TreeNode node;
    node.feature = static_cast<int>(e_.features[best.slot]);
    node.test = best.test;
    node.threshold = best.threshold;
    if (best.test == TreeNode::Test::Equals)
      node.category = e_.dictionaries[best.slot][static_cast<std::size_t>(best.code)];
    node.positives = p;
    node.total = n;
    node.left = grow(std::move(left), depth + 1);
    node.right = grow(std::move(right), depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)] = std::move(node);
    return id;
  }

  static bool passes(const Split& s, double v) {
    switch (s.test) {
      case TreeNode::Test::IsTrue: return v != 0.0;
      case TreeNode::Test::Equals: return static_cast<int>(v) == s.code;
      case TreeNode::Test::LessEqual: return v <= s.threshold;
    }
    return false;
  }

  // Ties keep the lower feature index, so the chosen split does not depend
  // on the order candidates are visited in.
  void consider(Split& best, const Split& cand) const {
    if (cand.gain <= kGainEpsilon) return;
    if (best.slot == SIZE_MAX || cand.gain > best.gain + kGainEpsilon ||
        (cand.gain >= best.gain - kGainEpsilon && cand.slot < best.slot))
      best = cand;
  }

  double gain(double n, double p, double nl, double pl) const {
    if (nl < h_.min_leaf || n - nl < h_.min_leaf) return -1.0;
    return gini(n, p) - (nl / n) * gini(nl, pl) - ((n - nl) / n) * gini(n - nl, p - pl);
  }

  Split find_split(const std::vector<std::size_t>& rows, std::uint32_t n, std::uint32_t p) {
    std::vector<std::size_t> order(e_.features.size());
    std::iota(order.begin(), order.end(), 0);
    const bool subsample = m_ < order.size();
    if (subsample) std::shuffle(order.begin(), order.end(), rng_);

    Split best;
    std::size_t informative = 0;
    for (std::size_t slot : order) {
      if (subsample && informative >= m_) break;
      if (evaluate(slot, rows, n, p, best)) ++informative;
    }
    return best;
  }

  // Returns false when the feature is constant within the node.
  bool evaluate(std::size_t slot, const std::vector<std::size_t>& rows, double n, double p, Split& best) {
    const auto& col = e_.columns[slot];
    const FeatureKind kind = feature_kind(e_.features[slot]);

    if (kind == FeatureKind::Boolean) {
      double nl = 0, pl = 0;
      for (auto r : rows)
        if (col[r] != 0.0) {
          ++nl;
          pl += e_.positive[r];
        }
      if (nl == 0 || nl == n) return false;
      consider(best, {gain(n, p, nl, pl), slot, TreeNode::Test::IsTrue, 0.0, -1});
      return true;
    }

    if (kind == FeatureKind::Categorical) {
      std::map<int, std::pair<double, double>> counts;
      for (auto r : rows) {
        auto& c = counts[static_cast<int>(col[r])];
        ++c.first;
        c.second += e_.positive[r];
      }
      if (counts.size() < 2) return false;
      for (const auto& [code, c] : counts)
        consider(best, {gain(n, p, c.first, c.second), slot, TreeNode::Test::Equals, 0.0, code});
      return true;
    }

    scratch_.clear();
    for (auto r : rows) scratch_.emplace_back(col[r], e_.positive[r]);
    std::sort(scratch_.begin(), scratch_.end());
    if (scratch_.front().first == scratch_.back().first) return false;
    double nl = 0, pl = 0;
    for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
      ++nl;
      pl += scratch_[i].second;
      double v = scratch_[i].first, next = scratch_[i + 1].first;
      if (v == next) continue;
      consider(best, {gain(n, p, nl, pl), slot, TreeNode::Test::LessEqual, v + (next - v) / 2.0, -1});
    }
    return true;
  }

  const Encoded& e_;
  const Hyperparameters& h_;
  std::size_t m_;
  std::mt19937_64 rng_;
  DecisionTree tree_;
  std::vector<std::pair<double, std::uint8_t>> scratch_;
};

void require_trainable(const Dataset& data) {
  data.validate();
  const auto pos = data.count(Label::Positive), neg = data.count(Label::Negative);
  if (pos < 2 || neg < 2)
    throw Error(ErrorCode::DegenerateDataset, "need at least 2 rows of each class (pos=" +
                                                  std::to_string(pos) + ", neg=" + std::to_string(neg) + ")");
}

Dataset reorder(const Dataset& data, const std::vector<std::size_t>& order) {
  Dataset out;
  out.schema = data.schema;
  out.rows.reserve(order.size());
  for (auto i : order) out.rows.push_back(data.rows[i]);
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> canonical_order(const Dataset& data) {
  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return data.rows[a].domain < data.rows[b].domain; });
  return order;
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = pick(rng);
  return out;
}

DecisionTree train_tree(const Dataset& data, std::span<const std::size_t> rows,
                        const Hyperparameters& hyper, std::size_t max_features, std::uint64_t seed) {
  data.validate();
  Encoded e = encode(data);
  auto h = hyper.resolved(ModelKind::Tree, e.features.size());
  return TreeBuilder(e, h, max_features, seed).build({rows.begin(), rows.end()});
}

// ---------------------------------------------------------------------------
// Nearest neighbour

MinMaxScaler MinMaxScaler::fit(const Dataset& data) {
  MinMaxScaler s;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (feature_kind(f) == FeatureKind::Categorical || data.rows.empty()) continue;
    double lo = numeric_value(data.rows.front(), f), hi = lo;
    for (const auto& r : data.rows) {
      double v = numeric_value(r, f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    s.lo[f] = lo;
    s.hi[f] = hi;
  }
  return s;
}

double MinMaxScaler::scale(std::size_t f, double v) const {
  if (!(hi[f] > lo[f])) return 0.0;
  return std::clamp((v - lo[f]) / (hi[f] - lo[f]), 0.0, 1.0);
}

KnnInstance KnnInstance::from(const FeatureVector& fv, const MinMaxScaler& scaler) {
  KnnInstance k;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    FeatureKind kind = feature_kind(f);
    if (kind == FeatureKind::Categorical) k.text[f] = categorical_value(fv, f);
    else if (kind == FeatureKind::Boolean) k.values[f] = numeric_value(fv, f);
    else k.values[f] = scaler.scale(f, numeric_value(fv, f));
  }
  k.label = fv.label.value_or(Label::Negative);
  return k;
}

double knn_distance(const KnnInstance& a, const KnnInstance& b, std::span<const std::size_t> included) {
  if (included.empty()) throw Error(ErrorCode::SchemaError, "no features included");
  double sum = 0.0;
  for (auto f : included) {
    switch (feature_kind(f)) {
      case FeatureKind::Boolean: sum += a.values[f] != b.values[f] ? 1.0 : 0.0; break;
      case FeatureKind::Categorical: sum += a.text[f] != b.text[f] ? 1.0 : 0.0; break;
      default: sum += std::abs(a.values[f] - b.values[f]); break;
    }
  }
  return sum / static_cast<double>(included.size());
}

double knn_distance(const FeatureVector& a, const FeatureVector& b, const FeatureSchema& schema,
                    const MinMaxScaler& scaler) {
  auto inc = schema.included_indices();
  return knn_distance(KnnInstance::from(a, scaler), KnnInstance::from(b, scaler), inc);
}

// ---------------------------------------------------------------------------
// Model

Prediction TrainedModel::predict(const FeatureVector& fv) const {
  double score = 0.0;
  switch (kind) {
    case ModelKind::Tree:
      score = trees.at(0).score(fv);
      break;
    case ModelKind::BaggedTrees:
    case ModelKind::Forest: {
      if (trees.empty()) throw Error(ErrorCode::CorruptModel, "ensemble has no members");
      std::size_t pos = 0;
      for (const auto& t : trees) pos += t.score(fv) >= 0.5;
      score = static_cast<double>(pos) / static_cast<double>(trees.size());
      break;
    }
    case ModelKind::Knn: {
      if (knn.instances.empty()) throw Error(ErrorCode::CorruptModel, "knn model has no instances");
      const auto inc = schema.included_indices();
      const KnnInstance q = KnnInstance::from(fv, knn.scaler);
      std::vector<std::pair<double, std::size_t>> d;
      d.reserve(knn.instances.size());
      for (std::size_t i = 0; i < knn.instances.size(); ++i)
        d.emplace_back(knn_distance(q, knn.instances[i], inc), i);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(hyper.k), d.size());
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
      // Every instance tied with the k-th distance votes.
      const double cutoff = d[k - 1].first;
      std::size_t pos = 0, votes = 0;
      for (const auto& [dist, i] : d) {
        if (dist > cutoff) continue;
        ++votes;
        pos += knn.instances[i].label == Label::Positive;
      }
      score = static_cast<double>(pos) / static_cast<double>(votes);
      break;
    }
  }
  return {score >= 0.5 ? Label::Positive : Label::Negative, score};
}

Prediction TrainedModel::predict(const FeatureVector& fv, const FeatureSchema& s) const {
  if (s.fingerprint() != schema.fingerprint())
    throw Error(ErrorCode::SchemaError, "feature schema " + s.fingerprint().substr(0, 12) +
                                            " does not match model schema " +
                                            schema.fingerprint().substr(0, 12));
  return predict(fv);
}

std::vector<Label> TrainedModel::member_votes(const FeatureVector& fv) const {
  std::vector<Label> votes;
  for (const auto& t : trees) votes.push_back(t.score(fv) >= 0.5 ? Label::Positive : Label::Negative);
  return votes;
}

TrainedModel train(const Dataset& input, ModelKind kind, const Hyperparameters& hyper,
                   std::uint64_t seed) {
  require_trainable(input);
  const Dataset data = reorder(input, canonical_order(input));

  TrainedModel m;
  m.kind = kind;
  m.seed = seed;
  m.schema = data.schema;
  const auto d = data.schema.included_indices().size();
  m.hyper = hyper.resolved(kind, d);

  if (kind == ModelKind::Knn) {
    m.knn.scaler = MinMaxScaler::fit(data);
    for (const auto& r : data.rows) m.knn.instances.push_back(KnnInstance::from(r, m.knn.scaler));
    return m;
  }

  const Encoded e = encode(data);
  if (kind == ModelKind::Tree) {
    std::vector<std::size_t> all(data.rows.size());
    std::iota(all.begin(), all.end(), 0);
    m.trees.push_back(TreeBuilder(e, m.hyper, d, seed).build(std::move(all)));
    return m;
  }
  const std::size_t max_features = static_cast<std::size_t>(m.hyper.max_features);
  for (int t = 0; t < m.hyper.n_trees; ++t) {
    const std::uint64_t member = derive_seed(seed, static_cast<std::uint64_t>(t));
    auto rows = bootstrap_sample(data.rows.size(), member);
    m.trees.push_back(TreeBuilder(e, m.hyper, max_features, derive_seed(member, 1)).build(std::move(rows)));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

void Confusion::add(Label truth, Label predicted) {
  if (truth == Label::Positive) (predicted == Label::Positive ? tp : fn)++;
  else (predicted == Label::Negative ? tn : fp)++;
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

Metrics Metrics::from(const Confusion& c) {
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(c.tp, c.tp + c.fn), ratio(c.tp, c.tp + c.fp), ratio(c.tn, c.tn + c.fp),
          ratio(c.tn, c.tn + c.fn)};
}

double EvalReport::accuracy() const {
  auto total = confusion.total();
  return total ? static_cast<double>(confusion.tp + confusion.tn) / static_cast<double>(total) : 0.0;
}

std::vector<int> assign_folds(const Dataset& data, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::TooFewRows, "k must be at least 2");
  std::vector<std::size_t> pos, neg;
  for (auto i : canonical_order(data)) (data.rows[i].label == Label::Positive ? pos : neg).push_back(i);
  std::mt19937_64 rng(derive_seed(seed, 0xf01d));
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  std::vector<int> fold(data.rows.size(), -1);
  std::size_t next = 0;
  for (auto i : pos) fold[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  for (auto i : neg) fold[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  return fold;
}

EvalReport cross_validate(const Dataset& data, int k, ModelKind kind, const Hyperparameters& hyper,
                          std::uint64_t seed) {
  data.validate();
  if (k < 2) throw Error(ErrorCode::TooFewRows, "k must be at least 2");
  const auto n = data.rows.size();
  if (n < static_cast<std::size_t>(k))
    throw Error(ErrorCode::TooFewRows, std::to_string(n) + " rows for " + std::to_string(k) + " folds");
  for (Label l : {Label::Positive, Label::Negative}) {
    const std::size_t c = data.count(l);
    const std::size_t worst_fold = (c + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k);
    if (c < worst_fold + 2)
      throw Error(ErrorCode::TooFewRows, "class " + std::string(to_string(l)) + " has " + std::to_string(c) +
                                             " rows; every training split needs 2");
  }

  EvalReport rep;
  rep.kind = kind;
  rep.k = k;
  rep.seed = seed;
  rep.hyper = hyper.resolved(kind, data.schema.included_indices().size());
  rep.per_fold.assign(static_cast<std::size_t>(k), {});
  rep.outcomes.resize(n);

  const auto folds = assign_folds(data, k, seed);
  for (int f = 0; f < k; ++f) {
    Dataset train_set;
    train_set.schema = data.schema;
    for (std::size_t i = 0; i < n; ++i)
      if (folds[i] != f) train_set.rows.push_back(data.rows[i]);
    const TrainedModel model = train(train_set, kind, hyper, derive_seed(seed, static_cast<std::uint64_t>(f) + 1));
    for (std::size_t i = 0; i < n; ++i) {
      if (folds[i] != f) continue;
      RowOutcome o{i, f, *data.rows[i].label, model.predict(data.rows[i])};
      rep.per_fold[static_cast<std::size_t>(f)].add(o.truth, o.prediction.label);
      rep.outcomes[i] = o;
    }
  }
  for (const auto& c : rep.per_fold) rep.confusion += c;
  rep.metrics = Metrics::from(rep.confusion);
  return rep;
}

namespace {
std::string fmt_metric(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

nlohmann::json metric_json(const std::optional<double>& v) {
  if (!v) return "undefined";
  return *v;
}
}  // namespace

std::string format_report_table(const EvalReport& r) {
  std::ostringstream out;
  out << "classifier: " << to_string(r.kind) << "  folds: " << r.k << "  seed: " << r.seed << '\n';
  out << "confusion: tp=" << r.confusion.tp << " fn=" << r.confusion.fn << " tn=" << r.confusion.tn
      << " fp=" << r.confusion.fp << '\n';
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-10s %-10s %-10s %-10s\n", "Classifier", "Pos.Rec", "Pos.Prec",
                "Neg.Rec", "Neg.Prec");
  out << line;
  std::snprintf(line, sizeof line, "%-12s %-10s %-10s %-10s %-10s\n", std::string(to_string(r.kind)).c_str(),
                fmt_metric(r.metrics.pos_recall).c_str(), fmt_metric(r.metrics.pos_precision).c_str(),
                fmt_metric(r.metrics.neg_recall).c_str(), fmt_metric(r.metrics.neg_precision).c_str());
  out << line;
  std::snprintf(line, sizeof line, "accuracy: %.4f\n", r.accuracy());
  out << line;
  return out.str();
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["classifier"] = to_string(r.kind);
  j["folds"] = r.k;
  j["seed"] = r.seed;
  j["hyperparameters"] = {{"max_depth", r.hyper.max_depth}, {"min_leaf", r.hyper.min_leaf},
                          {"n_trees", r.hyper.n_trees},     {"max_features", r.hyper.max_features},
                          {"k", r.hyper.k}};
  j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
  j["metrics"] = {{"positive_recall", metric_json(r.metrics.pos_recall)},
                  {"positive_precision", metric_json(r.metrics.pos_precision)},
                  {"negative_recall", metric_json(r.metrics.neg_recall)},
                  {"negative_precision", metric_json(r.metrics.neg_precision)}};
  j["accuracy"] = r.accuracy();
  auto folds = nlohmann::json::array();
  for (const auto& c : r.per_fold) folds.push_back({{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}});
  j["per_fold"] = std::move(folds);
  return j;
}

}  // namespace certfraud
