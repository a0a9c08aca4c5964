#include "churn/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "churn/rng.hpp"

namespace churn {

namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  int max_depth;
  int min_leaf;
  Rng* rng;   // null: use every feature at every split
  int mtry;

  std::vector<TreeNode> nodes;
  std::vector<int> feature_buf;
  std::vector<std::pair<double, int>> sort_buf;  // (value, row)

  int build(std::vector<int>& rows, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    double sum = 0;
    for (int r : rows) sum += y[r];
    const auto n = static_cast<double>(rows.size());
    nodes[id].value = sum / n;

    if (depth >= max_depth || static_cast<int>(rows.size()) < 2 * min_leaf) return id;

    bool pure = true;
    for (int r : rows) {
      if (y[r] != y[rows.front()]) {
        pure = false;
        break;
      }
    }
    if (pure) return id;

    const int d = static_cast<int>(x.cols());
    feature_buf.clear();
    if (rng != nullptr && mtry < d) {
      std::vector<int> pool(static_cast<std::size_t>(d));
      std::iota(pool.begin(), pool.end(), 0);
      for (int k = 0; k < mtry; ++k) {
        const auto pick = static_cast<std::size_t>(rng->below(pool.size() - k)) + k;
        std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
        feature_buf.push_back(pool[static_cast<std::size_t>(k)]);
      }
      std::sort(feature_buf.begin(), feature_buf.end());
    } else {
      feature_buf.resize(static_cast<std::size_t>(d));
      std::iota(feature_buf.begin(), feature_buf.end(), 0);
    }

    // gain = sumL^2/nL + sumR^2/nR; maximizing it maximizes the variance
    // reduction (and the Gini gain for 0/1 labels). First strictly-better
    // candidate wins, giving the documented tie-breaking.
    const double parent_gain = sum * sum / n;
    double best_gain = parent_gain;
    int best_feature = -1;
    double best_threshold = 0;

    for (int f : feature_buf) {
      sort_buf.clear();
      for (int r : rows) sort_buf.emplace_back(x(r, f), r);
      std::sort(sort_buf.begin(), sort_buf.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0;
      for (std::size_t i = 0; i + 1 < sort_buf.size(); ++i) {
        left_sum += y[sort_buf[i].second];
        if (sort_buf[i].first == sort_buf[i + 1].first) continue;
        const auto nl = static_cast<double>(i + 1);
        const auto nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (sort_buf[i].first + sort_buf[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    }
    if (left_rows.empty() || right_rows.empty()) return id;

    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);
    nodes[id].left = left;
    nodes[id].right = right;
    return id;
  }
};

DecisionTreeFit fit_cart_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              std::vector<int> rows, int max_depth, int min_leaf, Rng* rng,
                              int mtry) {
  if (rows.empty()) throw std::invalid_argument("cart: empty data");
  Builder b{x, y, max_depth, std::max(min_leaf, 1), rng, mtry, {}, {}, {}};
  b.build(rows, 0);
  return DecisionTreeFit{std::move(b.nodes)};
}

std::vector<int> all_rows(const Eigen::MatrixXd& x) {
  std::vector<int> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

DecisionTreeFit fit_cart(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_depth,
                         int min_leaf, SplitCriterion) {
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("cart: shape mismatch");
  return fit_cart_rows(x, y, all_rows(x), max_depth, min_leaf, nullptr, static_cast<int>(x.cols()));
}

double tree_predict_one(const DecisionTreeFit& tree, const Eigen::RowVectorXd& row) {
  int id = 0;
  while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    id = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return tree.nodes[static_cast<std::size_t>(id)].value;
}

Eigen::VectorXd tree_predict(const DecisionTreeFit& tree, const Eigen::MatrixXd& x) {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = tree_predict_one(tree, x.row(i));
  return out;
}

RandomForestFit fit_random_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int n_trees,
                                  double feature_subsample, int max_depth, int min_leaf,
                                  bool bootstrap, std::uint64_t seed, SplitCriterion criterion) {
  if (n_trees < 1) throw std::invalid_argument("random forest: n_trees must be >= 1");
  if (x.rows() != y.size() || x.rows() == 0) {
    throw std::invalid_argument("random forest: shape mismatch");
  }
  if (!(feature_subsample > 0.0 && feature_subsample <= 1.0)) {
    throw std::invalid_argument("random forest: feature_subsample must be in (0, 1]");
  }
  (void)criterion;
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const int mtry = std::max(1, static_cast<int>(std::lround(feature_subsample * d)));

  RandomForestFit forest;
  const Rng root(seed);
  for (int t = 0; t < n_trees; ++t) {
    Rng rng = root.substream(static_cast<std::uint64_t>(t));
    std::vector<int> counts(static_cast<std::size_t>(n), 0);
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(n));
    if (bootstrap) {
      for (int i = 0; i < n; ++i) {
        const int pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        rows.push_back(pick);
        ++counts[static_cast<std::size_t>(pick)];
      }
      std::sort(rows.begin(), rows.end());
    } else {
      rows = all_rows(x);
      for (auto& c : counts) c = 1;
    }
    forest.trees.push_back(
        fit_cart_rows(x, y, std::move(rows), max_depth, min_leaf, mtry < d ? &rng : nullptr, mtry));
    forest.inbag_counts.push_back(std::move(counts));
  }
  return forest;
}

Eigen::VectorXd forest_predict(const RandomForestFit& forest, const Eigen::MatrixXd& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (const auto& tree : forest.trees) out += tree_predict(tree, x);
  return out / static_cast<double>(forest.trees.size());
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int leaf_index(const DecisionTreeFit& tree, const Eigen::RowVectorXd& row) {
  int id = 0;
  while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    id = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return id;
}

}  // namespace

GbmFit fit_gbm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int n_rounds,
               double learning_rate, int max_depth, int min_leaf, bool logistic) {
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("gbm: shape mismatch");
  if (n_rounds < 0) throw std::invalid_argument("gbm: n_rounds must be >= 0");

  const auto n = x.rows();
  GbmFit fit;
  fit.learning_rate = learning_rate;
  fit.logistic = logistic;
  if (logistic) {
    const double p = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    fit.base_score = std::log(p / (1.0 - p));
  } else {
    fit.base_score = y.mean();
  }

  Eigen::VectorXd score = Eigen::VectorXd::Constant(n, fit.base_score);
  for (int round = 0; round < n_rounds; ++round) {
    Eigen::VectorXd residual(n);
    Eigen::VectorXd hessian(n);
    if (logistic) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p = sigmoid(score[i]);
        residual[i] = y[i] - p;
        hessian[i] = std::max(p * (1.0 - p), 1e-12);
      }
    } else {
      residual = y - score;
    }

    DecisionTreeFit tree = fit_cart(x, residual, max_depth, min_leaf, SplitCriterion::Variance);
    if (logistic) {
      // Newton leaf values: sum(gradient) / sum(hessian) over the leaf.
      std::vector<double> grad_sum(tree.nodes.size(), 0.0), hess_sum(tree.nodes.size(), 0.0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto leaf = static_cast<std::size_t>(leaf_index(tree, x.row(i)));
        grad_sum[leaf] += residual[i];
        hess_sum[leaf] += hessian[i];
      }
      for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        if (tree.nodes[k].feature < 0 && hess_sum[k] > 0) {
          tree.nodes[k].value = grad_sum[k] / hess_sum[k];
        }
      }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      score[i] += learning_rate * tree_predict_one(tree, x.row(i));
    }
    fit.trees.push_back(std::move(tree));

    double loss = 0;
    if (logistic) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = score[i];
        loss += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
      }
    } else {
      loss = (y - score).squaredNorm();
    }
    fit.round_losses.push_back(loss / static_cast<double>(n));
  }
  return fit;
}

Eigen::VectorXd gbm_raw_score(const GbmFit& fit, const Eigen::MatrixXd& x, int rounds) {
  const std::size_t limit =
      rounds < 0 ? fit.trees.size() : std::min(fit.trees.size(), static_cast<std::size_t>(rounds));
  Eigen::VectorXd score = Eigen::VectorXd::Constant(x.rows(), fit.base_score);
  for (std::size_t t = 0; t < limit; ++t) {
    score += fit.learning_rate * tree_predict(fit.trees[t], x);
  }
  return score;
}

Eigen::VectorXd gbm_predict(const GbmFit& fit, const Eigen::MatrixXd& x) {
  Eigen::VectorXd score = gbm_raw_score(fit, x);
  if (fit.logistic) {
    for (Eigen::Index i = 0; i < score.size(); ++i) score[i] = sigmoid(score[i]);
  }
  return score;
}

}  // namespace churn
