#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>

#include "churn/eval.hpp"
#include "churn/labels.hpp"
#include "churn/synthgen.hpp"

namespace churn {

// One experiment = one reviewable config document (JSON). Unknown keys are
// hard errors.
struct ExperimentConfig {
  std::string out_dir = "out";
  std::string events_file;        // default: <out_dir>/events.jsonl
  std::string ground_truth_file;  // default: <out_dir>/ground_truth.csv
  std::string features_file;      // default: <out_dir>/features.csv
  std::string labeled_file;       // default: <out_dir>/labeled.csv
  std::string report_prefix;      // default: <out_dir>/report

  CohortConfig cohort;
  int feature_window = 20;
  double feature_epsilon = 1.0;
  LabelParams label_params;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
  std::uint64_t split_seed = 1;
  EvalProtocol eval;
  std::map<Family, std::map<std::string, double>> train_params;
};

struct ResolvedPaths {
  std::filesystem::path events, ground_truth, features, labeled, report_prefix;
};
ResolvedPaths resolve_paths(const ExperimentConfig& config);

ExperimentConfig default_experiment_config();
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

// Documented hyperparameter names per family; anything else in train_params
// is rejected.
const std::map<std::string, std::vector<std::string>>& allowed_hyperparameters();

}  // namespace churn
