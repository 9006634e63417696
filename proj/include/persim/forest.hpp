#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace persim {

/// Row-major matrix of integer survey codes.
struct CodeMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> data;

  CodeMatrix() = default;
  CodeMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), data(r * c, 0) {}

  std::int32_t operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  std::int32_t& operator()(std::size_t r, std::size_t c) {
    return data[r * cols + c];
  }
};

enum class FeatureRule { Sqrt, All };

/// Hyperparameters for tree ensembles. The defaults are a conservative
/// baseline setting for categorical survey targets; per-tree randomness is
/// derived from (seed, tree index) so results never depend on thread count.
struct ForestConfig {
  std::size_t n_estimators = 100;
  std::size_t max_depth = 10;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 2;
  std::uint64_t seed = 0;
  FeatureRule features_per_split = FeatureRule::Sqrt;
  bool bootstrap = true;

  void validate() const;
};

/// feature == -1 marks a leaf; rows go left when value <= threshold.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::int32_t prediction = 0;
  std::uint32_t n_samples = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::int32_t predict_row(const CodeMatrix& rows, std::size_t row) const;
  std::size_t depth() const;
  bool has_split() const { return nodes.size() > 1; }
};

/// A trained ensemble. Importances are normalized total Gini impurity
/// decrease averaged over trees; they sum to 1 whenever any tree split.
class FittedForest {
 public:
  FittedForest() = default;
  FittedForest(ForestConfig config, std::size_t n_features,
               std::vector<std::int32_t> classes, std::vector<DecisionTree> trees,
               std::vector<double> importances)
      : config_(std::move(config)),
        n_features_(n_features),
        classes_(std::move(classes)),
        trees_(std::move(trees)),
        importances_(std::move(importances)) {}

  const ForestConfig& config() const { return config_; }
  std::size_t n_features() const { return n_features_; }
  const std::vector<std::int32_t>& classes() const { return classes_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  const std::vector<double>& feature_importances() const { return importances_; }

  /// Self-describing JSON dump; from_json(to_json()) is bit-identical.
  std::string to_json() const;
  static FittedForest from_json(const std::string& text);

 private:
  ForestConfig config_;
  std::size_t n_features_ = 0;
  std::vector<std::int32_t> classes_;
  std::vector<DecisionTree> trees_;
  std::vector<double> importances_;
};

/// Fits a random forest classifier on integer-coded features (treated as
/// ordinals with threshold splits). The result is a pure function of
/// (features, targets, config); `workers` only controls parallelism.
FittedForest fit(const CodeMatrix& features, const std::vector<std::int32_t>& targets,
                 const ForestConfig& config, unsigned workers = 0);

/// Majority vote across trees, ties broken toward the smaller class code.
std::vector<std::int32_t> predict(const FittedForest& forest, const CodeMatrix& rows,
                                  unsigned workers = 0);

/// Features sorted by importance descending (ties by ascending index);
/// at most m entries, only strictly positive importances qualify.
std::vector<std::pair<std::size_t, double>> top_features(const FittedForest& forest,
                                                         std::size_t m);

}  // namespace persim
