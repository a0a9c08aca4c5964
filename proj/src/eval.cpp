#include "churn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "churn/io.hpp"
#include "churn/rng.hpp"

namespace churn {

using nlohmann::json;

double r2_score(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("r2: length mismatch");
  if (y_true.size() < 2) throw std::invalid_argument("r2: need at least 2 points");
  const double mean = y_true.mean();
  const double ss_tot = (y_true.array() - mean).square().sum();
  if (ss_tot <= 0.0) throw ZeroVariance();
  const double ss_res = (y_true - y_pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

double mean_squared_error(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0) {
    throw std::invalid_argument("mse: length mismatch");
  }
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw std::invalid_argument("accuracy: length mismatch");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

double auc_score(const Eigen::VectorXd& y_true01, const Eigen::VectorXd& scores) {
  if (y_true01.size() != scores.size()) throw std::invalid_argument("auc: length mismatch");
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[static_cast<Eigen::Index>(a)] <
                                                       scores[static_cast<Eigen::Index>(b)]; });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[static_cast<Eigen::Index>(order[j + 1])] ==
                            scores[static_cast<Eigen::Index>(order[i])]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos_rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (y_true01[static_cast<Eigen::Index>(k)] == 1.0) {
      pos_rank_sum += rank[k];
      ++n_pos;
    }
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  return (pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double f1_score(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw std::invalid_argument("f1: length mismatch");
  }
  long long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i] == 1 && y_true[i] == 1) ++tp;
    else if (y_pred[i] == 1) ++fp;
    else if (y_true[i] == 1) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

CellResult& ComparisonReport::cell(std::size_t family_index, TargetEncoding target, Task task) {
  const std::size_t t = target == TargetEncoding::ChurnDay ? 0 : 1;
  const std::size_t k = task == Task::Regression ? 0 : 1;
  return cells.at(family_index * 4 + t * 2 + k);
}

const CellResult& ComparisonReport::cell(std::size_t family_index, TargetEncoding target,
                                         Task task) const {
  const std::size_t t = target == TargetEncoding::ChurnDay ? 0 : 1;
  const std::size_t k = task == Task::Regression ? 0 : 1;
  return cells.at(family_index * 4 + t * 2 + k);
}

SearchSpace default_search_space(Family family, Task task) {
  (void)task;  // both tasks share parameterizations; only head and loss differ
  switch (family) {
    case Family::Lasso:
      return {{"lambda", ParamDomain::continuous(1e-4, 1.0, true)}};
    case Family::LinearSvm:
      return {{"c", ParamDomain::continuous(0.01, 100.0, true)},
              {"epochs", ParamDomain::integer(10, 60)}};
    case Family::DecisionTree:
      return {{"max_depth", ParamDomain::integer(2, 12)},
              {"min_leaf", ParamDomain::integer(1, 20)}};
    case Family::RandomForest:
      return {{"n_trees", ParamDomain::integer(10, 60)},
              {"feature_subsample", ParamDomain::continuous(0.2, 1.0)},
              {"max_depth", ParamDomain::integer(4, 12)}};
    case Family::Gbm:
      return {{"n_rounds", ParamDomain::integer(20, 80)},
              {"learning_rate", ParamDomain::continuous(0.02, 0.3, true)},
              {"max_depth", ParamDomain::integer(2, 5)}};
    case Family::Mlp:
      return {{"hidden_units", ParamDomain::categorical({16, 32, 64})},
              {"learning_rate", ParamDomain::continuous(0.003, 0.1, true)},
              {"epochs", ParamDomain::integer(10, 30)},
              {"batch_size", ParamDomain::categorical({32, 64})}};
    case Family::Cnn1d:
      return {{"channels", ParamDomain::categorical({8, 16, 24})},
              {"learning_rate", ParamDomain::continuous(0.003, 0.1, true)},
              {"epochs", ParamDomain::integer(4, 10)},
              {"batch_size", ParamDomain::categorical({32, 64})}};
    case Family::Rnn:
    case Family::Lstm:
    case Family::AttentionNet:
      return {{"hidden_units", ParamDomain::categorical({8, 16})},
              {"learning_rate", ParamDomain::continuous(0.003, 0.1, true)},
              {"epochs", ParamDomain::integer(4, 10)},
              {"batch_size", ParamDomain::categorical({32, 64})}};
  }
  throw std::invalid_argument("unknown family");
}

namespace {

Eigen::MatrixXd standardize_matrix(Eigen::MatrixXd x, const FeatureStats& stats) {
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(stats.stddev.size());
  for (int j = 0; j < stats.stddev.size(); ++j) {
    inv[j] = stats.stddev[j] < 1e-12 ? 0.0 : 1.0 / stats.stddev[j];
  }
  x.rowwise() -= stats.mean.transpose();
  return x * inv.asDiagonal();
}

struct PerSeed {
  std::vector<LabeledExample> examples;
  SplitIndices idx;
  std::vector<int> tab_train_idx, seq_train_idx;
  FeatureStats stats;
  Eigen::MatrixXd x_train, x_val, x_test;
  std::vector<SequenceWindow> w_train, w_val, w_test;
};

std::vector<int> cap_indices(const std::vector<int>& idx, int cap, Rng rng) {
  if (cap <= 0 || static_cast<int>(idx.size()) <= cap) return idx;
  std::vector<int> shuffled = idx;
  rng.shuffle(shuffled);
  shuffled.resize(static_cast<std::size_t>(cap));
  std::sort(shuffled.begin(), shuffled.end());
  return shuffled;
}

PerSeed build_seed_data(const std::vector<LabeledExample>& examples,
                        const std::vector<FeatureRow>& all_rows, const EvalProtocol& protocol,
                        std::uint64_t seed) {
  PerSeed sd;
  sd.examples = examples;
  split_by_user(sd.examples, protocol.split_ratios, seed);
  sd.idx = split_indices(sd.examples);
  if (sd.idx.train.empty() || sd.idx.validation.empty() || sd.idx.test.empty()) {
    throw std::runtime_error("a split is empty; adjust ratios or cohort size");
  }

  std::vector<FeatureRow> train_rows;
  train_rows.reserve(sd.idx.train.size());
  for (int i : sd.idx.train) train_rows.push_back(sd.examples[static_cast<std::size_t>(i)].features);
  sd.stats = compute_feature_stats(train_rows);

  const Rng root(seed ^ 0x5eedu);
  sd.tab_train_idx = cap_indices(sd.idx.train, protocol.max_tabular_train_rows, root.substream(1));
  sd.seq_train_idx = cap_indices(sd.idx.train, protocol.max_sequence_train_rows, root.substream(2));

  sd.x_train = standardize_matrix(feature_matrix(sd.examples, sd.tab_train_idx), sd.stats);
  sd.x_val = standardize_matrix(feature_matrix(sd.examples, sd.idx.validation), sd.stats);
  sd.x_test = standardize_matrix(feature_matrix(sd.examples, sd.idx.test), sd.stats);

  std::vector<FeatureRow> std_rows = all_rows;
  standardize_rows(std_rows, sd.stats);
  sd.w_train = windows_for_examples(std_rows, sd.examples, sd.seq_train_idx, protocol.window);
  sd.w_val = windows_for_examples(std_rows, sd.examples, sd.idx.validation, protocol.window);
  sd.w_test = windows_for_examples(std_rows, sd.examples, sd.idx.test, protocol.window);
  return sd;
}

struct SeedOutcome {
  bool ok = false;
  std::string error;
  double primary = std::numeric_limits<double>::quiet_NaN();
  MetricSet metrics;
  std::map<std::string, double> best_params;
};

struct CellTask {
  std::size_t family_index;
  TargetEncoding target;
  Task task;
  std::size_t seed_index;
};

double classification_threshold_metric(const Eigen::VectorXd& y, const Prediction& pred,
                                       double* out_auc, double* out_f1) {
  std::vector<int> truth(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    truth[static_cast<std::size_t>(i)] = y[i] == 1.0 ? 1 : 0;
  }
  if (out_auc) *out_auc = auc_score(y, pred.values);
  if (out_f1) *out_f1 = f1_score(truth, pred.classes);
  return accuracy(truth, pred.classes);
}

SeedOutcome run_cell_seed(const CellTask& task, Family family, const PerSeed& sd,
                          const EvalProtocol& protocol, std::atomic<long long>& violations) {
  SeedOutcome outcome;
  try {
    const bool seq = is_sequence_family(family);
    const auto& train_idx = seq ? sd.seq_train_idx : sd.tab_train_idx;
    const Eigen::VectorXd y_train = targets_for(sd.examples, train_idx, task.target, task.task);
    const Eigen::VectorXd y_val =
        targets_for(sd.examples, sd.idx.validation, task.target, task.task);

    Rng derive(protocol.master_seed);
    const std::uint64_t cell_tag = task.family_index * 64 + (task.target == TargetEncoding::ChurnDay ? 0 : 16) +
                                   (task.task == Task::Regression ? 0 : 4);
    Rng stream = derive.substream(cell_tag).substream(task.seed_index);
    const std::uint64_t fit_seed = stream.next_u64();
    const std::uint64_t hpo_seed = stream.next_u64();

    bool tuning = true;
    const auto test_x = [&]() -> const Eigen::MatrixXd& {
      if (tuning) violations.fetch_add(1);
      return sd.x_test;
    };
    const auto test_w = [&]() -> const std::vector<SequenceWindow>& {
      if (tuning) violations.fetch_add(1);
      return sd.w_test;
    };
    const auto test_y = [&]() -> Eigen::VectorXd {
      if (tuning) violations.fetch_add(1);
      return targets_for(sd.examples, sd.idx.test, task.target, task.task);
    };

    const auto fit_with = [&](const std::map<std::string, double>& config) {
      EstimatorSpec spec;
      spec.family = family;
      spec.task = task.task;
      spec.params = config;
      spec.rng_seed = fit_seed;
      return seq ? fit(spec, sd.w_train, y_train) : fit(spec, sd.x_train, y_train);
    };

    const HpoObjective objective = [&](const std::map<std::string, double>& config) {
      const auto model = fit_with(config);
      const Prediction pred = seq ? predict(*model, sd.w_val) : predict(*model, sd.x_val);
      if (task.task == Task::Regression) return r2_score(y_val, pred.values);
      return classification_threshold_metric(y_val, pred, nullptr, nullptr);
    };

    const HpoResult hpo = bayes_optimize(default_search_space(family, task.task), objective,
                                         protocol.hpo_budget, hpo_seed, protocol.hpo_init);
    if (!std::isfinite(hpo.best_objective)) {
      outcome.error = "all tuning trials failed";
      return outcome;
    }
    tuning = false;

    const auto model = fit_with(hpo.best_config);
    const Eigen::VectorXd y_test = test_y();
    const Prediction pred = seq ? predict(*model, test_w()) : predict(*model, test_x());

    outcome.metrics.n_examples = static_cast<int>(y_test.size());
    if (task.task == Task::Regression) {
      outcome.metrics.r2 = r2_score(y_test, pred.values);
      outcome.metrics.mse = mean_squared_error(y_test, pred.values);
      outcome.metrics.y_variance =
          (y_test.array() - y_test.mean()).square().sum() / static_cast<double>(y_test.size());
      outcome.primary = outcome.metrics.r2;
    } else {
      outcome.metrics.accuracy =
          classification_threshold_metric(y_test, pred, &outcome.metrics.auc, &outcome.metrics.f1);
      outcome.primary = outcome.metrics.accuracy;
    }
    outcome.best_params = hpo.best_config;
    outcome.ok = true;
  } catch (const std::exception& ex) {
    outcome.ok = false;
    outcome.error = ex.what();
  }
  return outcome;
}

CellResult aggregate_cell(const std::vector<SeedOutcome>& outcomes) {
  CellResult cell;
  std::vector<double> succeeded;
  for (const auto& o : outcomes) {
    cell.per_seed_metric.push_back(o.ok ? o.primary : std::numeric_limits<double>::quiet_NaN());
    if (o.ok) succeeded.push_back(o.primary);
  }
  if (succeeded.empty()) {
    cell.skipped = true;
    for (const auto& o : outcomes) {
      if (!o.error.empty()) {
        cell.skip_reason = o.error;
        break;
      }
    }
    if (cell.skip_reason.empty()) cell.skip_reason = "no successful seeds";
    return cell;
  }
  std::sort(succeeded.begin(), succeeded.end());
  const double median = succeeded[(succeeded.size() - 1) / 2];
  for (const auto& o : outcomes) {
    if (o.ok && o.primary == median) {
      cell.metrics = o.metrics;
      cell.best_params = o.best_params;
      break;
    }
  }
  return cell;
}

}  // namespace

ComparisonReport run_comparison(const std::vector<LabeledExample>& examples,
                                const std::vector<FeatureRow>& all_rows,
                                const EvalProtocol& protocol,
                                const std::string& dataset_fingerprint) {
  ComparisonReport report;
  report.families = protocol.families.empty() ? canonical_families() : protocol.families;
  report.seeds = protocol.seeds;
  report.dataset_fingerprint = dataset_fingerprint;
  if (protocol.seeds.empty()) throw std::invalid_argument("need at least one seed");

  std::vector<LabeledExample> usable;
  usable.reserve(examples.size());
  for (const auto& ex : examples) {
    if (!ex.label.censored) usable.push_back(ex);
  }
  if (usable.empty()) throw std::runtime_error("no uncensored examples");

  std::vector<PerSeed> per_seed;
  per_seed.reserve(protocol.seeds.size());
  for (std::uint64_t s : protocol.seeds) {
    per_seed.push_back(build_seed_data(usable, all_rows, protocol, s));
  }

  std::vector<CellTask> tasks;
  for (std::size_t fi = 0; fi < report.families.size(); ++fi) {
    for (TargetEncoding target : {TargetEncoding::ChurnDay, TargetEncoding::ChurnVector}) {
      for (Task t : {Task::Regression, Task::Classification}) {
        for (std::size_t si = 0; si < protocol.seeds.size(); ++si) {
          tasks.push_back({fi, target, t, si});
        }
      }
    }
  }

  std::vector<SeedOutcome> outcomes(tasks.size());
  std::atomic<long long> violations{0};
  std::atomic<std::size_t> cursor{0};
  const int n_threads = std::max(1, std::min<int>(protocol.threads,
                                                  static_cast<int>(tasks.size())));
  const auto worker = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= tasks.size()) break;
      const CellTask& t = tasks[i];
      outcomes[i] = run_cell_seed(t, report.families[t.family_index],
                                  per_seed[t.seed_index], protocol, violations);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < n_threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  report.tuning_test_accesses = violations.load();
  report.cells.resize(report.families.size() * 4);
  const std::size_t n_seeds = protocol.seeds.size();
  std::size_t at = 0;
  for (std::size_t fi = 0; fi < report.families.size(); ++fi) {
    for (TargetEncoding target : {TargetEncoding::ChurnDay, TargetEncoding::ChurnVector}) {
      for (Task t : {Task::Regression, Task::Classification}) {
        std::vector<SeedOutcome> cell_outcomes(outcomes.begin() + static_cast<std::ptrdiff_t>(at),
                                               outcomes.begin() +
                                                   static_cast<std::ptrdiff_t>(at + n_seeds));
        report.cell(fi, target, t) = aggregate_cell(cell_outcomes);
        at += n_seeds;
      }
    }
  }
  return report;
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

std::string params_json(const std::map<std::string, double>& params) {
  std::string out = "{";
  bool first = true;
  for (const auto& [key, value] : params) {
    if (!first) out += ",";
    first = false;
    out += "\"" + key + "\":" + format_double(value);
  }
  out += "}";
  return out;
}

}  // namespace

void write_report_csv(const ComparisonReport& report, std::ostream& out) {
  out << "family,target,task,metric,value,n,seed_count,best_params_json\n";
  for (std::size_t fi = 0; fi < report.families.size(); ++fi) {
    for (TargetEncoding target : {TargetEncoding::ChurnDay, TargetEncoding::ChurnVector}) {
      for (Task t : {Task::Regression, Task::Classification}) {
        const CellResult& cell = report.cell(fi, target, t);
        const std::string prefix = std::string(family_name(report.families[fi])) + ',' +
                                   target_encoding_name(target) + ',' + task_name(t) + ',';
        if (cell.skipped) {
          out << prefix << "skipped,,0," << report.seeds.size() << ','
              << csv_quote(cell.skip_reason) << '\n';
          continue;
        }
        const auto row = [&](const char* metric, double value) {
          if (!std::isfinite(value)) return;
          out << prefix << metric << ',' << format_double(value) << ','
              << cell.metrics.n_examples << ',' << report.seeds.size() << ','
              << csv_quote(params_json(cell.best_params)) << '\n';
        };
        if (t == Task::Regression) {
          row("r2", cell.metrics.r2);
          row("mse", cell.metrics.mse);
        } else {
          row("accuracy", cell.metrics.accuracy);
          row("auc", cell.metrics.auc);
          row("f1", cell.metrics.f1);
        }
      }
    }
  }
}

void write_report_svg(const ComparisonReport& report, Task task, std::ostream& out) {
  const int width = 980, height = 460;
  const double left = 64, right = 24, top = 48, bottom = 72;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const auto n = static_cast<double>(report.families.size());
  const double group_w = plot_w / n;
  const double bar_w = group_w * 0.32;

  char buf[256];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << num(left) << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">"
      << (task == Task::Regression ? "Churn prediction using regression (R2, median over seeds)"
                                   : "Churn prediction using classification (accuracy, median over seeds)")
      << "</text>\n";

  for (int tick = 0; tick <= 4; ++tick) {
    const double frac = tick / 4.0;
    const double y = top + plot_h * (1.0 - frac);
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left + plot_w)
        << "\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << num(left - 10) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(frac)
        << "</text>\n";
  }

  for (std::size_t fi = 0; fi < report.families.size(); ++fi) {
    const double gx = left + group_w * static_cast<double>(fi);
    int slot = 0;
    for (TargetEncoding target : {TargetEncoding::ChurnDay, TargetEncoding::ChurnVector}) {
      const CellResult& cell = report.cell(fi, target, task);
      const double raw = task == Task::Regression ? cell.metrics.r2 : cell.metrics.accuracy;
      const bool have = !cell.skipped && std::isfinite(raw);
      const double value = have ? std::clamp(raw, 0.0, 1.0) : 0.0;
      const double bh = plot_h * value;
      const double bx = gx + group_w * 0.15 + static_cast<double>(slot) * (bar_w + group_w * 0.06);
      const char* color = target == TargetEncoding::ChurnDay ? "#4878a8" : "#e8862d";
      out << "<rect x=\"" << num(bx) << "\" y=\"" << num(top + plot_h - bh) << "\" width=\""
          << num(bar_w) << "\" height=\"" << num(bh) << "\" fill=\"" << color << "\"/>\n";
      std::snprintf(buf, sizeof(buf), "%.3f", raw);
      out << "<text x=\"" << num(bx + bar_w / 2) << "\" y=\"" << num(top + plot_h - bh - 4)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">"
          << (have ? buf : "n/a") << "</text>\n";
      ++slot;
    }
    out << "<text x=\"" << num(gx + group_w / 2) << "\" y=\"" << num(top + plot_h + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << family_name(report.families[fi]) << "</text>\n";
  }

  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + plot_h) << "\" x2=\""
      << num(left + plot_w) << "\" y2=\"" << num(top + plot_h) << "\" stroke=\"#333333\"/>\n";
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(height - 26)
      << "\" width=\"12\" height=\"12\" fill=\"#4878a8\"/>\n";
  out << "<text x=\"" << num(left + 18) << "\" y=\"" << num(height - 16)
      << "\" font-family=\"sans-serif\" font-size=\"11\">churn day target</text>\n";
  out << "<rect x=\"" << num(left + 140) << "\" y=\"" << num(height - 26)
      << "\" width=\"12\" height=\"12\" fill=\"#e8862d\"/>\n";
  out << "<text x=\"" << num(left + 158) << "\" y=\"" << num(height - 16)
      << "\" font-family=\"sans-serif\" font-size=\"11\">churn vector target</text>\n";
  out << "</svg>\n";
}

namespace {

json metric_to_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double metric_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace

std::string report_to_json(const ComparisonReport& report) {
  json j;
  j["families"] = json::array();
  for (Family f : report.families) j["families"].push_back(family_name(f));
  j["seeds"] = report.seeds;
  j["dataset_fingerprint"] = report.dataset_fingerprint;
  j["tuning_test_accesses"] = report.tuning_test_accesses;
  j["cells"] = json::array();
  for (std::size_t fi = 0; fi < report.families.size(); ++fi) {
    for (TargetEncoding target : {TargetEncoding::ChurnDay, TargetEncoding::ChurnVector}) {
      for (Task t : {Task::Regression, Task::Classification}) {
        const CellResult& cell = report.cell(fi, target, t);
        json c;
        c["family"] = family_name(report.families[fi]);
        c["target"] = target_encoding_name(target);
        c["task"] = task_name(t);
        c["skipped"] = cell.skipped;
        c["skip_reason"] = cell.skip_reason;
        c["metrics"] = {{"r2", metric_to_json(cell.metrics.r2)},
                        {"mse", metric_to_json(cell.metrics.mse)},
                        {"y_variance", metric_to_json(cell.metrics.y_variance)},
                        {"accuracy", metric_to_json(cell.metrics.accuracy)},
                        {"auc", metric_to_json(cell.metrics.auc)},
                        {"f1", metric_to_json(cell.metrics.f1)},
                        {"n_examples", cell.metrics.n_examples}};
        c["best_params"] = cell.best_params;
        json per_seed = json::array();
        for (double v : cell.per_seed_metric) per_seed.push_back(metric_to_json(v));
        c["per_seed_metric"] = per_seed;
        j["cells"].push_back(std::move(c));
      }
    }
  }
  return j.dump(2) + "\n";
}

ComparisonReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  ComparisonReport report;
  for (const auto& name : j.at("families")) {
    report.families.push_back(family_from_name(name.get<std::string>()));
  }
  report.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  report.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  report.tuning_test_accesses = j.at("tuning_test_accesses").get<long long>();
  report.cells.resize(report.families.size() * 4);
  std::size_t at = 0;
  for (std::size_t fi = 0; fi < report.families.size(); ++fi) {
    for (TargetEncoding target : {TargetEncoding::ChurnDay, TargetEncoding::ChurnVector}) {
      for (Task t : {Task::Regression, Task::Classification}) {
        const json& c = j.at("cells").at(at++);
        CellResult cell;
        cell.skipped = c.at("skipped").get<bool>();
        cell.skip_reason = c.at("skip_reason").get<std::string>();
        const json& m = c.at("metrics");
        cell.metrics.r2 = metric_from_json(m.at("r2"));
        cell.metrics.mse = metric_from_json(m.at("mse"));
        cell.metrics.y_variance = metric_from_json(m.at("y_variance"));
        cell.metrics.accuracy = metric_from_json(m.at("accuracy"));
        cell.metrics.auc = metric_from_json(m.at("auc"));
        cell.metrics.f1 = metric_from_json(m.at("f1"));
        cell.metrics.n_examples = m.at("n_examples").get<int>();
        cell.best_params = c.at("best_params").get<std::map<std::string, double>>();
        for (const auto& v : c.at("per_seed_metric")) {
          cell.per_seed_metric.push_back(metric_from_json(v));
        }
        report.cell(fi, target, t) = std::move(cell);
      }
    }
  }
  return report;
}

}  // namespace churn
