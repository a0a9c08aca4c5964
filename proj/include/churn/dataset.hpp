#pragma once

#include <vector>

#include <Eigen/Dense>

#include "churn/labels.hpp"
#include "churn/models/estimator.hpp"

namespace churn {

// Target extraction per encoding/task: regression predicts remain_days (day)
// or churn_vector (vector); classification predicts churned_within_horizon
// (day) or vector_below_threshold (vector).
double target_value(const ChurnLabel& label, TargetEncoding encoding, Task task);

Eigen::VectorXd targets_for(const std::vector<LabeledExample>& examples,
                            const std::vector<int>& idx, TargetEncoding encoding, Task task);

// Indices into `examples` grouped by assigned split.
struct SplitIndices {
  std::vector<int> train, validation, test;
};
SplitIndices split_indices(const std::vector<LabeledExample>& examples);

Eigen::MatrixXd feature_matrix(const std::vector<LabeledExample>& examples,
                               const std::vector<int>& idx);

// Builds the sequence window ending at each selected example's observation day
// from the full per-user row history (rows must be grouped per user and
// day-consecutive, as compute_daily_records emits them).
std::vector<SequenceWindow> windows_for_examples(const std::vector<FeatureRow>& all_rows,
                                                 const std::vector<LabeledExample>& examples,
                                                 const std::vector<int>& idx, int window);

}  // namespace churn
