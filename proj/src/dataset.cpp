#include "churn/dataset.hpp"

#include <map>
#include <stdexcept>

namespace churn {

double target_value(const ChurnLabel& label, TargetEncoding encoding, Task task) {
  if (task == Task::Regression) {
    return encoding == TargetEncoding::ChurnDay ? static_cast<double>(label.remain_days)
                                                : label.churn_vector;
  }
  return encoding == TargetEncoding::ChurnDay ? (label.churned_within_horizon ? 1.0 : 0.0)
                                              : (label.vector_below_threshold ? 1.0 : 0.0);
}

Eigen::VectorXd targets_for(const std::vector<LabeledExample>& examples,
                            const std::vector<int>& idx, TargetEncoding encoding, Task task) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] =
        target_value(examples[static_cast<std::size_t>(idx[i])].label, encoding, task);
  }
  return y;
}

SplitIndices split_indices(const std::vector<LabeledExample>& examples) {
  SplitIndices out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    switch (examples[i].split) {
      case Split::Train: out.train.push_back(static_cast<int>(i)); break;
      case Split::Validation: out.validation.push_back(static_cast<int>(i)); break;
      case Split::Test: out.test.push_back(static_cast<int>(i)); break;
    }
  }
  return out;
}

Eigen::MatrixXd feature_matrix(const std::vector<LabeledExample>& examples,
                               const std::vector<int>& idx) {
  if (idx.empty()) return Eigen::MatrixXd(0, kFeatureCount);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()),
                    examples.front().features.values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        examples[static_cast<std::size_t>(idx[i])].features.values.transpose();
  }
  return x;
}

std::vector<SequenceWindow> windows_for_examples(const std::vector<FeatureRow>& all_rows,
                                                 const std::vector<LabeledExample>& examples,
                                                 const std::vector<int>& idx, int window) {
  if (window < 1) throw std::invalid_argument("window length must be >= 1");

  struct UserRows {
    std::size_t offset = 0;
    int first_day = 0;
    int count = 0;
  };
  std::map<std::string, UserRows> by_user;
  for (std::size_t i = 0; i < all_rows.size(); ++i) {
    auto [it, fresh] = by_user.try_emplace(all_rows[i].user_id);
    if (fresh) {
      it->second.offset = i;
      it->second.first_day = all_rows[i].day;
    }
    ++it->second.count;
  }

  std::vector<SequenceWindow> windows;
  windows.reserve(idx.size());
  for (int id : idx) {
    const LabeledExample& ex = examples[static_cast<std::size_t>(id)];
    const auto it = by_user.find(ex.label.user_id);
    if (it == by_user.end()) {
      throw std::runtime_error("no rows for user " + ex.label.user_id);
    }
    const UserRows& ur = it->second;
    const int pos = ex.label.observation_day - ur.first_day;
    if (pos < 0 || pos >= ur.count) {
      throw std::runtime_error("observation day outside row history for user " +
                               ex.label.user_id);
    }
    SequenceWindow w;
    w.user_id = ex.label.user_id;
    w.end_day = ex.label.observation_day;
    w.values = Eigen::MatrixXd::Zero(window, kFeatureCount);
    w.mask = Eigen::VectorXd::Zero(window);
    for (int k = 0; k < window; ++k) {
      const int src = pos - (window - 1 - k);
      if (src >= 0) {
        w.values.row(k) = all_rows[ur.offset + static_cast<std::size_t>(src)].values.transpose();
        w.mask[k] = 1.0;
      }
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace churn
