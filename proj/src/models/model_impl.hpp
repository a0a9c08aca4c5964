#pragma once

// Concrete TrainedModel wrappers, shared between fitting and serialization.

#include <memory>

#include "churn/models/estimator.hpp"
#include "churn/models/linear.hpp"
#include "churn/models/nets.hpp"
#include "churn/models/tree.hpp"

namespace churn::detail {

struct LassoModel : TrainedModel {
  Eigen::VectorXd coef;
  double intercept = 0;

  using TrainedModel::TrainedModel;
  Eigen::VectorXd raw_values(const Eigen::MatrixXd& x) const override;
  void save_body(std::ostream& out) const override;
};

struct SvmModel : TrainedModel {
  Eigen::VectorXd weights;
  double bias = 0;

  using TrainedModel::TrainedModel;
  Eigen::VectorXd raw_values(const Eigen::MatrixXd& x) const override;
  void save_body(std::ostream& out) const override;
};

struct TreeModel : TrainedModel {
  DecisionTreeFit tree;

  using TrainedModel::TrainedModel;
  Eigen::VectorXd raw_values(const Eigen::MatrixXd& x) const override;
  void save_body(std::ostream& out) const override;
};

struct ForestModel : TrainedModel {
  RandomForestFit forest;  // inbag counts are training metadata, not serialized

  using TrainedModel::TrainedModel;
  Eigen::VectorXd raw_values(const Eigen::MatrixXd& x) const override;
  void save_body(std::ostream& out) const override;
};

struct GbmModel : TrainedModel {
  GbmFit fit;

  using TrainedModel::TrainedModel;
  Eigen::VectorXd raw_values(const Eigen::MatrixXd& x) const override;
  void save_body(std::ostream& out) const override;
};

struct MlpModel : TrainedModel {
  std::unique_ptr<Mlp> net;
  int input_dim = 0;

  using TrainedModel::TrainedModel;
  Eigen::VectorXd raw_values(const Eigen::MatrixXd& x) const override;
  void save_body(std::ostream& out) const override;
};

struct SequenceModel : TrainedModel {
  std::unique_ptr<SequenceNet> net;
  int input_dim = 0;

  using TrainedModel::TrainedModel;
  Eigen::VectorXd raw_values(const std::vector<SequenceWindow>& windows) const override;
  void save_body(std::ostream& out) const override;
};

// Builds an untrained network matching the spec (used when loading).
std::unique_ptr<Mlp> make_mlp(const EstimatorSpec& spec, int input_dim, Rng& rng);
std::unique_ptr<SequenceNet> make_sequence_net(const EstimatorSpec& spec, int input_dim, Rng& rng);

}  // namespace churn::detail
