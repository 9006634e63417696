#include "persim/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "persim/errors.hpp"
#include "persim/parallel.hpp"
#include "persim/random.hpp"

using nlohmann::json;

namespace persim {

void ForestConfig::validate() const {
  if (n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
}

std::int32_t DecisionTree::predict_row(const CodeMatrix& rows, std::size_t row) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    const TreeNode& n = nodes[node];
    node = rows(row, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
  }
  return nodes[node].prediction;
}

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  // nodes are appended parent-first, so a forward scan sees parents early
  std::vector<std::size_t> level(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, level[i]);
    if (nodes[i].feature >= 0) {
      level[nodes[i].left] = level[i] + 1;
      level[nodes[i].right] = level[i] + 1;
    }
  }
  return best;
}

namespace {

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;  // node-local impurity decrease, unweighted
};

class TreeBuilder {
 public:
  TreeBuilder(const CodeMatrix& features, const std::vector<std::size_t>& class_of_row,
              std::size_t n_classes, const std::vector<std::int32_t>& class_codes,
              const ForestConfig& config, std::uint64_t tree_seed)
      : features_(features),
        class_of_row_(class_of_row),
        n_classes_(n_classes),
        class_codes_(class_codes),
        config_(config),
        rng_(tree_seed) {}

  DecisionTree build(std::vector<double>& importances) {
    const std::size_t n = features_.rows;
    rows_.resize(n);
    if (config_.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) {
        rows_[i] = rng_.uniform_index(n);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) rows_[i] = i;
    }
    importances_ = &importances;
    n_total_ = n;
    tree_.nodes.clear();
    grow(0, n, 0);
    return std::move(tree_);
  }

 private:
  // Grows the subtree over rows_[begin, end); returns its node index.
  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n_node = end - begin;
    std::vector<std::size_t> counts(n_classes_, 0);
    for (std::size_t i = begin; i < end; ++i) ++counts[class_of_row_[rows_[i]]];

    const bool pure = *std::max_element(counts.begin(), counts.end()) == n_node;
    SplitChoice split;
    if (!pure && depth < config_.max_depth && n_node >= config_.min_samples_split) {
      split = best_split(begin, end, counts);
    }

    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[index].n_samples = static_cast<std::uint32_t>(n_node);

    if (!split.found) {
      tree_.nodes[index].prediction = majority_code(counts);
      return index;
    }

    const std::size_t mid = partition_rows(begin, end, split);
    (*importances_)[split.feature] +=
        static_cast<double>(n_node) / static_cast<double>(n_total_) * split.decrease;

    tree_.nodes[index].feature = static_cast<int>(split.feature);
    tree_.nodes[index].threshold = split.threshold;
    tree_.nodes[index].left = grow(begin, mid, depth + 1);
    tree_.nodes[index].right = grow(mid, end, depth + 1);
    return index;
  }

  std::int32_t majority_code(const std::vector<std::size_t>& counts) const {
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
      if (counts[c] > counts[best]) best = c;  // ties keep the smaller code
    }
    return class_codes_[best];
  }

  SplitChoice best_split(std::size_t begin, std::size_t end,
                         const std::vector<std::size_t>& node_counts) {
    const std::size_t n_node = end - begin;
    const double node_gini = gini(node_counts, n_node);

    sample_features();

    SplitChoice best;
    std::vector<std::pair<std::int32_t, std::size_t>> column(n_node);
    std::vector<std::size_t> left_counts(n_classes_);
    for (std::size_t f : feature_sample_) {
      for (std::size_t i = 0; i < n_node; ++i) {
        column[i] = {features_(rows_[begin + i], f), class_of_row_[rows_[begin + i]]};
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column.front().first == column.back().first) continue;

      std::fill(left_counts.begin(), left_counts.end(), 0);
      std::size_t n_left = 0;
      for (std::size_t i = 0; i + 1 < n_node; ++i) {
        ++left_counts[column[i].second];
        ++n_left;
        if (column[i].first == column[i + 1].first) continue;
        const std::size_t n_right = n_node - n_left;
        if (n_left < config_.min_samples_leaf || n_right < config_.min_samples_leaf) continue;

        double left_gini = gini(left_counts, n_left);
        double right_sum_sq = 0.0;
        for (std::size_t c = 0; c < n_classes_; ++c) {
          double p = static_cast<double>(node_counts[c] - left_counts[c]) /
                     static_cast<double>(n_right);
          right_sum_sq += p * p;
        }
        double right_gini = 1.0 - right_sum_sq;
        double decrease = node_gini -
                          (static_cast<double>(n_left) / n_node) * left_gini -
                          (static_cast<double>(n_right) / n_node) * right_gini;
        // strict > keeps the first (lowest feature index, lowest threshold) on ties
        if (decrease > best.decrease + 1e-15 || !best.found) {
          if (decrease <= 0.0) continue;
          best.found = true;
          best.feature = f;
          best.threshold = (static_cast<double>(column[i].first) +
                            static_cast<double>(column[i + 1].first)) /
                           2.0;
          best.decrease = decrease;
        }
      }
    }
    return best;
  }

  void sample_features() {
    const std::size_t n_features = features_.cols;
    feature_sample_.resize(n_features);
    for (std::size_t i = 0; i < n_features; ++i) feature_sample_[i] = i;
    if (config_.features_per_split == FeatureRule::All) return;
    std::size_t k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features)));
    if (k < 1) k = 1;
    if (k >= n_features) return;
    rng_.partial_shuffle(feature_sample_, k);
    feature_sample_.resize(k);
    std::sort(feature_sample_.begin(), feature_sample_.end());
  }

  std::size_t partition_rows(std::size_t begin, std::size_t end, const SplitChoice& split) {
    auto it = std::stable_partition(
        rows_.begin() + static_cast<std::ptrdiff_t>(begin),
        rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t row) {
          return features_(row, split.feature) <= split.threshold;
        });
    return static_cast<std::size_t>(it - rows_.begin());
  }

  const CodeMatrix& features_;
  const std::vector<std::size_t>& class_of_row_;
  std::size_t n_classes_;
  const std::vector<std::int32_t>& class_codes_;
  const ForestConfig& config_;
  RandomSource rng_;
  DecisionTree tree_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> feature_sample_;
  std::vector<double>* importances_ = nullptr;
  std::size_t n_total_ = 0;
};

}  // namespace

FittedForest fit(const CodeMatrix& features, const std::vector<std::int32_t>& targets,
                 const ForestConfig& config, unsigned workers) {
  config.validate();
  if (features.rows == 0 || features.cols == 0) {
    throw std::invalid_argument("fit: empty feature matrix");
  }
  if (targets.size() != features.rows) {
    throw std::invalid_argument("fit: targets length does not match row count");
  }

  std::vector<std::int32_t> class_codes(targets);
  std::sort(class_codes.begin(), class_codes.end());
  class_codes.erase(std::unique(class_codes.begin(), class_codes.end()), class_codes.end());

  std::vector<std::size_t> class_of_row(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    class_of_row[i] = static_cast<std::size_t>(
        std::lower_bound(class_codes.begin(), class_codes.end(), targets[i]) -
        class_codes.begin());
  }

  std::vector<DecisionTree> trees(config.n_estimators);
  std::vector<std::vector<double>> tree_importances(
      config.n_estimators, std::vector<double>(features.cols, 0.0));

  parallel_for(config.n_estimators, workers, [&](std::size_t t) {
    TreeBuilder builder(features, class_of_row, class_codes.size(), class_codes, config,
                        mix_seed(config.seed, t));
    trees[t] = builder.build(tree_importances[t]);
  });

  // Mean of per-tree normalized importances over trees that split, then
  // renormalized, so the final scores sum to 1 unless no tree split at all.
  std::vector<double> importances(features.cols, 0.0);
  std::size_t contributing = 0;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (!trees[t].has_split()) continue;
    double total = 0.0;
    for (double v : tree_importances[t]) total += v;
    if (total <= 0.0) continue;
    ++contributing;
    for (std::size_t f = 0; f < features.cols; ++f) {
      importances[f] += tree_importances[t][f] / total;
    }
  }
  if (contributing > 0) {
    double total = 0.0;
    for (double v : importances) total += v;
    for (double& v : importances) v /= total;
  }

  return FittedForest(config, features.cols, std::move(class_codes), std::move(trees),
                      std::move(importances));
}

std::vector<std::int32_t> predict(const FittedForest& forest, const CodeMatrix& rows,
                                  unsigned workers) {
  if (rows.rows == 0) return {};
  if (rows.cols != forest.n_features()) {
    throw std::invalid_argument("predict: expected " + std::to_string(forest.n_features()) +
                                " columns, got " + std::to_string(rows.cols));
  }
  std::vector<std::int32_t> out(rows.rows);
  parallel_for(rows.rows, workers, [&](std::size_t r) {
    std::map<std::int32_t, std::size_t> votes;
    for (const auto& tree : forest.trees()) ++votes[tree.predict_row(rows, r)];
    std::int32_t best_code = 0;
    std::size_t best_votes = 0;
    for (const auto& [code, n] : votes) {
      if (n > best_votes) {  // map iterates ascending, ties keep the smaller code
        best_votes = n;
        best_code = code;
      }
    }
    out[r] = best_code;
  });
  return out;
}

std::vector<std::pair<std::size_t, double>> top_features(const FittedForest& forest,
                                                         std::size_t m) {
  if (m < 1) throw std::invalid_argument("top_features: m must be >= 1");
  std::vector<std::pair<std::size_t, double>> entries;
  const auto& importances = forest.feature_importances();
  for (std::size_t f = 0; f < importances.size(); ++f) {
    if (importances[f] > 0.0) entries.emplace_back(f, importances[f]);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (entries.size() > m) entries.resize(m);
  return entries;
}

namespace {

const char* feature_rule_name(FeatureRule rule) {
  return rule == FeatureRule::Sqrt ? "sqrt" : "all";
}

FeatureRule feature_rule_from(const std::string& name) {
  if (name == "sqrt") return FeatureRule::Sqrt;
  if (name == "all") return FeatureRule::All;
  throw ValidationError("unknown feature rule '" + name + "'");
}

}  // namespace

json forest_config_to_json(const ForestConfig& config) {
  return json{{"n_estimators", config.n_estimators},
              {"max_depth", config.max_depth},
              {"min_samples_split", config.min_samples_split},
              {"min_samples_leaf", config.min_samples_leaf},
              {"seed", config.seed},
              {"features_per_split", feature_rule_name(config.features_per_split)},
              {"bootstrap", config.bootstrap}};
}

ForestConfig forest_config_from_json(const json& doc) {
  ForestConfig config;
  config.n_estimators = doc.value("n_estimators", config.n_estimators);
  config.max_depth = doc.value("max_depth", config.max_depth);
  config.min_samples_split = doc.value("min_samples_split", config.min_samples_split);
  config.min_samples_leaf = doc.value("min_samples_leaf", config.min_samples_leaf);
  config.seed = doc.value("seed", config.seed);
  if (doc.contains("features_per_split")) {
    config.features_per_split = feature_rule_from(doc.at("features_per_split").get<std::string>());
  }
  config.bootstrap = doc.value("bootstrap", config.bootstrap);
  config.validate();
  return config;
}

std::string FittedForest::to_json() const {
  json doc;
  doc["config"] = forest_config_to_json(config_);
  doc["n_features"] = n_features_;
  doc["classes"] = classes_;
  doc["importances"] = importances_;
  doc["node_fields"] = {"feature", "threshold", "left", "right", "prediction", "n_samples"};
  json trees = json::array();
  for (const auto& tree : trees_) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.prediction,
                                   n.n_samples}));
    }
    trees.push_back(std::move(nodes));
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

FittedForest FittedForest::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed forest dump: ") + e.what());
  }
  FittedForest forest;
  forest.config_ = forest_config_from_json(doc.at("config"));
  forest.n_features_ = doc.at("n_features").get<std::size_t>();
  forest.classes_ = doc.at("classes").get<std::vector<std::int32_t>>();
  forest.importances_ = doc.at("importances").get<std::vector<double>>();
  for (const auto& tree_doc : doc.at("trees")) {
    DecisionTree tree;
    for (const auto& n : tree_doc) {
      TreeNode node;
      node.feature = n.at(0).get<int>();
      node.threshold = n.at(1).get<double>();
      node.left = n.at(2).get<int>();
      node.right = n.at(3).get<int>();
      node.prediction = n.at(4).get<std::int32_t>();
      node.n_samples = n.at(5).get<std::uint32_t>();
      tree.nodes.push_back(node);
    }
    forest.trees_.push_back(std::move(tree));
  }
  return forest;
}

}  // namespace persim
