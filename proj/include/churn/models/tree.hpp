#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace churn {

// For 0/1 labels Gini gain and variance reduction rank splits identically, so
// both criteria share one kernel; the enum documents intent at call sites.
enum class SplitCriterion { Variance, Gini };

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;  // leaf: mean target (positive fraction for classification)
};

struct DecisionTreeFit {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

// Greedy binary CART. Ties between equal-gain splits resolve to the lowest
// feature index, then the lowest threshold.
DecisionTreeFit fit_cart(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_depth,
                         int min_leaf, SplitCriterion criterion);

double tree_predict_one(const DecisionTreeFit& tree, const Eigen::RowVectorXd& row);
Eigen::VectorXd tree_predict(const DecisionTreeFit& tree, const Eigen::MatrixXd& x);

struct RandomForestFit {
  std::vector<DecisionTreeFit> trees;
  std::vector<std::vector<int>> inbag_counts;  // per tree, per row draw counts
};

// Bootstrap rows per tree (skipped when bootstrap=false), feature subset per
// split, averaged predictions. Per-tree RNG streams derive from the seed, so
// results do not depend on fitting order.
RandomForestFit fit_random_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int n_trees,
                                  double feature_subsample, int max_depth, int min_leaf,
                                  bool bootstrap, std::uint64_t seed, SplitCriterion criterion);

Eigen::VectorXd forest_predict(const RandomForestFit& forest, const Eigen::MatrixXd& x);

struct GbmFit {
  double base_score = 0;  // mean target (regression) or prior log-odds (classification)
  double learning_rate = 0;
  bool logistic = false;
  std::vector<DecisionTreeFit> trees;
  std::vector<double> round_losses;  // training loss after each round
};

// Stagewise trees on negative gradients: squared loss for regression, log loss
// with per-leaf Newton steps for classification.
GbmFit fit_gbm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int n_rounds,
               double learning_rate, int max_depth, int min_leaf, bool logistic);

// base + lr * sum of the first `rounds` trees (all when rounds < 0).
Eigen::VectorXd gbm_raw_score(const GbmFit& fit, const Eigen::MatrixXd& x, int rounds = -1);
// Raw score, passed through the sigmoid when the fit is logistic.
Eigen::VectorXd gbm_predict(const GbmFit& fit, const Eigen::MatrixXd& x);

}  // namespace churn
