#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "churn/dataset.hpp"
#include "churn/hpo.hpp"
#include "churn/labels.hpp"

namespace churn {

class ZeroVariance : public std::runtime_error {
 public:
  ZeroVariance() : std::runtime_error("r2 undefined: zero-variance targets") {}
};

// 1 - SSres/SStot. Throws ZeroVariance when the targets are constant.
double r2_score(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);
double mean_squared_error(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);
double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);
// Mann-Whitney AUC with average ranks on ties; NaN when one class is absent.
double auc_score(const Eigen::VectorXd& y_true01, const Eigen::VectorXd& scores);
double f1_score(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct MetricSet {
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  double y_variance = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  double f1 = std::numeric_limits<double>::quiet_NaN();
  int n_examples = 0;
};

struct CellResult {
  bool skipped = false;
  std::string skip_reason;
  MetricSet metrics;  // metrics of the median seed, so identities hold exactly
  std::map<std::string, double> best_params;
  std::vector<double> per_seed_metric;  // primary metric per seed, NaN = failed
};

struct ComparisonReport {
  std::vector<Family> families;
  std::vector<std::uint64_t> seeds;
  std::string dataset_fingerprint;
  long long tuning_test_accesses = 0;
  std::vector<CellResult> cells;  // index: family*4 + target*2 + task

  CellResult& cell(std::size_t family_index, TargetEncoding target, Task task);
  const CellResult& cell(std::size_t family_index, TargetEncoding target, Task task) const;
};

struct EvalProtocol {
  std::vector<Family> families;  // empty = canonical ten
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
  int hpo_budget = 15;
  int hpo_init = 8;
  int window = 20;
  int max_tabular_train_rows = 6000;   // desk-scale fitting caps; stats and
  int max_sequence_train_rows = 1500;  // evaluation always use full splits
  int threads = 2;
  std::uint64_t master_seed = 2024;
};

SearchSpace default_search_space(Family family, Task task);

// The Model A/B/C/D grid: per (family, target, task) cell and per seed, split
// users, tune on train/validation, refit the best configuration on train,
// score on test; the reported cell is the median seed. Censored examples are
// dropped before splitting.
ComparisonReport run_comparison(const std::vector<LabeledExample>& examples,
                                const std::vector<FeatureRow>& all_rows,
                                const EvalProtocol& protocol,
                                const std::string& dataset_fingerprint);

// family,target,task,metric,value,n,seed_count,best_params_json
void write_report_csv(const ComparisonReport& report, std::ostream& out);
// Grouped bars, one day/vector pair per family, for one task.
void write_report_svg(const ComparisonReport& report, Task task, std::ostream& out);

std::string report_to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const std::string& text);

}  // namespace churn
