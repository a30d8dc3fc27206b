#include "htsf/model_io.hpp"

#include <string>

#include "htsf/error.hpp"

namespace htsf {
namespace {

void expect_schema(const nlohmann::json& doc, const char* schema) {
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != schema) {
    throw UserError(std::string("model document is not ") + schema);
  }
}

template <typename T>
T field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw UserError(std::string("model document missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UserError(std::string("model document field '") + key + "': " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const SesParams& params) {
  return {{"schema", kSesSchema}, {"alpha", params.alpha}};
}

nlohmann::json to_json(const ArimaModel& model) {
  return {{"schema", kArimaSchema},
          {"order", {model.order.p, model.order.d, model.order.q}},
          {"phi", model.phi},
          {"theta", model.theta},
          {"constant", model.constant},
          {"sigma2", model.sigma2}};
}

nlohmann::json to_json(const GbdtParams& p) {
  return {{"learning_rate", p.learning_rate}, {"feature_fraction", p.feature_fraction},
          {"num_rounds", p.num_rounds},       {"max_leaves", p.max_leaves},
          {"min_leaf_samples", p.min_leaf_samples}, {"max_bins", p.max_bins},
          {"tweedie_power", p.tweedie_power}, {"l2_lambda", p.l2_lambda},
          {"seed", p.seed}};
}

nlohmann::json to_json(const GbdtModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& tree : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : tree.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return {{"schema", kGbdtSchema},
          {"base_score", model.base_score},
          {"feature_count", model.feature_count},
          {"params", to_json(model.params)},
          {"trees", std::move(trees)}};
}

SesParams ses_from_json(const nlohmann::json& doc) {
  expect_schema(doc, kSesSchema);
  return {field<double>(doc, "alpha")};
}

ArimaModel arima_from_json(const nlohmann::json& doc) {
  expect_schema(doc, kArimaSchema);
  ArimaModel m;
  const auto order = field<std::vector<int>>(doc, "order");
  if (order.size() != 3) throw UserError("arima document: order must have 3 entries");
  m.order = {order[0], order[1], order[2]};
  m.phi = field<std::vector<double>>(doc, "phi");
  m.theta = field<std::vector<double>>(doc, "theta");
  m.constant = field<double>(doc, "constant");
  m.sigma2 = field<double>(doc, "sigma2");
  if (m.phi.size() != static_cast<std::size_t>(m.order.p) || m.theta.size() != static_cast<std::size_t>(m.order.q)) {
    throw UserError("arima document: coefficient count does not match order");
  }
  return m;
}

GbdtParams gbdt_params_from_json(const nlohmann::json& doc, GbdtParams p) {
  if (!doc.is_object()) throw UserError("gbdt params must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "learning_rate") p.learning_rate = value.get<double>();
      else if (key == "feature_fraction") p.feature_fraction = value.get<double>();
      else if (key == "num_rounds") p.num_rounds = value.get<int>();
      else if (key == "max_leaves") p.max_leaves = value.get<int>();
      else if (key == "min_leaf_samples") p.min_leaf_samples = value.get<int>();
      else if (key == "max_bins") p.max_bins = value.get<int>();
      else if (key == "tweedie_power") p.tweedie_power = value.get<double>();
      else if (key == "l2_lambda") p.l2_lambda = value.get<double>();
      else if (key == "seed") p.seed = value.get<std::uint64_t>();
      else throw UserError("gbdt params: unknown field '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw UserError("gbdt params field '" + key + "': " + e.what());
    }
  }
  return p;
}

GbdtModel gbdt_from_json(const nlohmann::json& doc) {
  expect_schema(doc, kGbdtSchema);
  GbdtModel m;
  m.base_score = field<double>(doc, "base_score");
  m.feature_count = field<std::size_t>(doc, "feature_count");
  m.params = gbdt_params_from_json(field<nlohmann::json>(doc, "params"));
  for (const auto& tree_doc : field<nlohmann::json>(doc, "trees")) {
    Tree tree;
    for (const auto& n : tree_doc) {
      if (!n.is_array() || n.size() != 5) throw UserError("gbdt document: malformed tree node");
      tree.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(), n[4].get<double>()});
    }
    const auto size = static_cast<int>(tree.nodes.size());
    for (const TreeNode& node : tree.nodes) {
      if (node.feature >= 0 && (node.left <= 0 || node.left >= size || node.right <= 0 || node.right >= size ||
                                static_cast<std::size_t>(node.feature) >= m.feature_count)) {
        throw UserError("gbdt document: tree node out of range");
      }
    }
    if (tree.nodes.empty()) throw UserError("gbdt document: empty tree");
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace htsf
