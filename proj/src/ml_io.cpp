#include <cstdio>
#include <fstream>
#include <sstream>

#include "certfraud/error.hpp"
#include "certfraud/ml.hpp"

namespace certfraud {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "certfraud-model";

std::string_view test_name(TreeNode::Test t) {
  switch (t) {
    case TreeNode::Test::IsTrue: return "true";
    case TreeNode::Test::Equals: return "eq";
    case TreeNode::Test::LessEqual: return "le";
  }
  return "?";
}

TreeNode::Test parse_test(const std::string& s) {
  if (s == "true") return TreeNode::Test::IsTrue;
  if (s == "eq") return TreeNode::Test::Equals;
  if (s == "le") return TreeNode::Test::LessEqual;
  throw Error(ErrorCode::CorruptModel, "unknown split test '" + s + "'");
}

json tree_json(const DecisionTree& t) {
  auto nodes = json::array();
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) {
      nodes.push_back({{"pos", n.positives}, {"n", n.total}});
      continue;
    }
    json j{{"f", n.feature}, {"test", test_name(n.test)}, {"l", n.left}, {"r", n.right},
           {"pos", n.positives}, {"n", n.total}};
    if (n.test == TreeNode::Test::LessEqual) j["t"] = n.threshold;
    if (n.test == TreeNode::Test::Equals) j["cat"] = n.category;
    nodes.push_back(std::move(j));
  }
  return nodes;
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree t;
  for (const auto& n : j) {
    TreeNode node;
    node.positives = n.at("pos").get<std::uint32_t>();
    node.total = n.at("n").get<std::uint32_t>();
    if (n.contains("f")) {
      node.feature = n.at("f").get<int>();
      node.test = parse_test(n.at("test").get<std::string>());
      node.left = n.at("l").get<int>();
      node.right = n.at("r").get<int>();
      if (node.test == TreeNode::Test::LessEqual) node.threshold = n.at("t").get<double>();
      if (node.test == TreeNode::Test::Equals) node.category = n.at("cat").get<std::string>();
    }
    t.nodes.push_back(std::move(node));
  }
  // Children must point forward so traversal always terminates.
  const int size = static_cast<int>(t.nodes.size());
  if (size == 0) throw Error(ErrorCode::CorruptModel, "empty tree");
  for (int i = 0; i < size; ++i) {
    const auto& n = t.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) continue;
    if (n.feature >= static_cast<int>(kFeatureCount) || n.left <= i || n.right <= i || n.left >= size ||
        n.right >= size)
      throw Error(ErrorCode::CorruptModel, "tree node " + std::to_string(i) + " is inconsistent");
    auto kind = feature_kind(static_cast<std::size_t>(n.feature));
    bool ok = (n.test == TreeNode::Test::IsTrue && kind == FeatureKind::Boolean) ||
              (n.test == TreeNode::Test::Equals && kind == FeatureKind::Categorical) ||
              (n.test == TreeNode::Test::LessEqual && is_numeric(kind));
    if (!ok) throw Error(ErrorCode::CorruptModel, "tree node " + std::to_string(i) + " tests the wrong kind");
  }
  return t;
}

}  // namespace

json model_to_json(const TrainedModel& m) {
  json j;
  j["format"] = kFormat;
  j["version"] = kModelFormatVersion;
  j["kind"] = to_string(m.kind);
  j["seed"] = m.seed;
  j["hyperparameters"] = {{"max_depth", m.hyper.max_depth}, {"min_leaf", m.hyper.min_leaf},
                          {"n_trees", m.hyper.n_trees},     {"max_features", m.hyper.max_features},
                          {"k", m.hyper.k}};
  auto features = json::array();
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    features.push_back({{"name", feature_name(f)}, {"kind", to_string(feature_kind(f))},
                        {"included", m.schema.included(f)}});
  j["schema"] = {{"fingerprint", m.schema.fingerprint()}, {"features", std::move(features)}};

  if (m.kind == ModelKind::Knn) {
    json scaler = json::array();
    for (std::size_t f = 0; f < kFeatureCount; ++f) scaler.push_back({m.knn.scaler.lo[f], m.knn.scaler.hi[f]});
    json inst = json::array();
    for (const auto& k : m.knn.instances) {
      json row = json::array();
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (feature_kind(f) == FeatureKind::Categorical) row.push_back(k.text[f]);
        else row.push_back(k.values[f]);
      }
      inst.push_back({{"x", std::move(row)}, {"y", to_string(k.label)}});
    }
    j["knn"] = {{"scaler", std::move(scaler)}, {"instances", std::move(inst)}};
  } else {
    json trees = json::array();
    for (const auto& t : m.trees) trees.push_back(tree_json(t));
    j["trees"] = std::move(trees);
  }
  return j;
}

TrainedModel model_from_json(const json& j) {
  TrainedModel m;
  try {
    if (!j.is_object() || j.value("format", "") != kFormat)
      throw Error(ErrorCode::CorruptModel, "not a certfraud model document");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version) +
                                                  ", expected " + std::to_string(kModelFormatVersion));
    auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::CorruptModel, "unknown model kind");
    m.kind = *kind;
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& h = j.at("hyperparameters");
    m.hyper.max_depth = h.at("max_depth").get<int>();
    m.hyper.min_leaf = h.at("min_leaf").get<int>();
    m.hyper.n_trees = h.at("n_trees").get<int>();
    m.hyper.max_features = h.at("max_features").get<int>();
    m.hyper.k = h.at("k").get<int>();

    const auto& features = j.at("schema").at("features");
    if (features.size() != kFeatureCount) throw Error(ErrorCode::CorruptModel, "schema must list 15 features");
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto& fj = features.at(f);
      if (fj.at("name") != feature_name(f) || fj.at("kind") != to_string(feature_kind(f)))
        throw Error(ErrorCode::CorruptModel, "schema entry " + std::to_string(f) + " is not " + feature_name(f));
      m.schema.set_included(f, fj.at("included").get<bool>());
    }
    if (j.at("schema").at("fingerprint") != m.schema.fingerprint())
      throw Error(ErrorCode::CorruptModel, "schema fingerprint does not match the feature listing");

    if (m.kind == ModelKind::Knn) {
      const auto& knn = j.at("knn");
      const auto& scaler = knn.at("scaler");
      if (scaler.size() != kFeatureCount) throw Error(ErrorCode::CorruptModel, "bad knn scaler");
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        m.knn.scaler.lo[f] = scaler.at(f).at(0).get<double>();
        m.knn.scaler.hi[f] = scaler.at(f).at(1).get<double>();
      }
      for (const auto& ij : knn.at("instances")) {
        KnnInstance k;
        const auto& x = ij.at("x");
        if (x.size() != kFeatureCount) throw Error(ErrorCode::CorruptModel, "bad knn instance");
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
          if (feature_kind(f) == FeatureKind::Categorical) k.text[f] = x.at(f).get<std::string>();
          else k.values[f] = x.at(f).get<double>();
        }
        auto label = parse_label(ij.at("y").get<std::string>());
        if (!label) throw Error(ErrorCode::CorruptModel, "bad knn label");
        k.label = *label;
        m.knn.instances.push_back(std::move(k));
      }
      if (m.knn.instances.empty()) throw Error(ErrorCode::CorruptModel, "knn model has no instances");
    } else {
      for (const auto& tj : j.at("trees")) m.trees.push_back(tree_from_json(tj));
      if (m.trees.empty()) throw Error(ErrorCode::CorruptModel, "model has no trees");
      if (m.kind == ModelKind::Tree && m.trees.size() != 1)
        throw Error(ErrorCode::CorruptModel, "tree model must hold exactly one tree");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptModel, e.what());
  }
  return m;
}

void save_model(const TrainedModel& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
    out << model_to_json(model).dump(1) << '\n';
    if (!out.flush()) throw Error(ErrorCode::Io, "write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::Io, "cannot rename " + tmp + " to " + path);
  }
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::CorruptModel, path + " is not a complete JSON document");
  return model_from_json(j);
}

}  // namespace certfraud
