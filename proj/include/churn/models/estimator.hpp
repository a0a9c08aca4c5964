#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "churn/features.hpp"

namespace churn {

enum class Family {
  Lasso,
  LinearSvm,
  DecisionTree,
  RandomForest,
  Gbm,
  Mlp,
  Cnn1d,
  Rnn,
  Lstm,
  AttentionNet
};

enum class Task { Regression, Classification };
enum class TargetEncoding { ChurnDay, ChurnVector };

const char* family_name(Family f);
Family family_from_name(const std::string& name);
const char* task_name(Task t);
Task task_from_name(const std::string& name);
const char* target_encoding_name(TargetEncoding t);
TargetEncoding target_encoding_from_name(const std::string& name);

// Reporting order used everywhere.
const std::vector<Family>& canonical_families();
bool is_sequence_family(Family f);

struct EstimatorSpec {
  Family family = Family::Lasso;
  Task task = Task::Regression;
  std::map<std::string, double> params;  // family-specific, documented defaults apply
  std::uint64_t rng_seed = 1;
};

double get_param(const EstimatorSpec& spec, const std::string& key, double fallback);

struct Prediction {
  Eigen::VectorXd values;      // regression estimate, or probability in [0,1]
  std::vector<int> classes;    // classification only, thresholded at 0.5
};

class TrainedModel {
 public:
  explicit TrainedModel(EstimatorSpec spec) : spec_(std::move(spec)) {}
  virtual ~TrainedModel() = default;

  const EstimatorSpec& spec() const { return spec_; }
  double final_loss() const { return final_loss_; }
  int epochs_run() const { return epochs_run_; }

  virtual Eigen::VectorXd raw_values(const Eigen::MatrixXd& x) const;
  virtual Eigen::VectorXd raw_values(const std::vector<SequenceWindow>& windows) const;
  virtual void save_body(std::ostream& out) const = 0;

  void set_training_metadata(double final_loss, int epochs_run) {
    final_loss_ = final_loss;
    epochs_run_ = epochs_run;
  }

 private:
  EstimatorSpec spec_;
  double final_loss_ = 0;
  int epochs_run_ = 0;
};

// Tabular families. Classification targets must be 0/1 with both classes
// present.
std::unique_ptr<TrainedModel> fit(const EstimatorSpec& spec, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y);
// Sequence families (Cnn1d, Rnn, Lstm, AttentionNet).
std::unique_ptr<TrainedModel> fit(const EstimatorSpec& spec,
                                  const std::vector<SequenceWindow>& windows,
                                  const Eigen::VectorXd& y);

Prediction predict(const TrainedModel& model, const Eigen::MatrixXd& x);
Prediction predict(const TrainedModel& model, const std::vector<SequenceWindow>& windows);

// Versioned text artifact: family tag, shapes, row-major values with 17
// significant digits; reloads bit-identically.
void save_model(const TrainedModel& model, std::ostream& out);
std::unique_ptr<TrainedModel> load_model(std::istream& in);

}  // namespace churn
