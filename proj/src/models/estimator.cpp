#include "churn/models/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "model_impl.hpp"

namespace churn {

const char* family_name(Family f) {
  switch (f) {
    case Family::Lasso: return "lasso";
    case Family::LinearSvm: return "linear_svm";
    case Family::DecisionTree: return "decision_tree";
    case Family::RandomForest: return "random_forest";
    case Family::Gbm: return "gbm";
    case Family::Mlp: return "mlp";
    case Family::Cnn1d: return "cnn1d";
    case Family::Rnn: return "rnn";
    case Family::Lstm: return "lstm";
    case Family::AttentionNet: return "attention_net";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  for (Family f : canonical_families()) {
    if (name == family_name(f)) return f;
  }
  throw std::invalid_argument(
      "unknown family: " + name +
      " (valid: lasso, linear_svm, decision_tree, random_forest, gbm, mlp, cnn1d, rnn, lstm, "
      "attention_net)");
}

const char* task_name(Task t) {
  return t == Task::Regression ? "regression" : "classification";
}

Task task_from_name(const std::string& name) {
  if (name == "regression" || name == "reg") return Task::Regression;
  if (name == "classification" || name == "cls") return Task::Classification;
  throw std::invalid_argument("unknown task: " + name + " (valid: reg, cls)");
}

const char* target_encoding_name(TargetEncoding t) {
  return t == TargetEncoding::ChurnDay ? "day" : "vector";
}

TargetEncoding target_encoding_from_name(const std::string& name) {
  if (name == "day") return TargetEncoding::ChurnDay;
  if (name == "vector") return TargetEncoding::ChurnVector;
  throw std::invalid_argument("unknown target encoding: " + name + " (valid: day, vector)");
}

const std::vector<Family>& canonical_families() {
  static const std::vector<Family> order = {
      Family::Lasso, Family::LinearSvm, Family::DecisionTree, Family::RandomForest,
      Family::Gbm,   Family::Mlp,       Family::Cnn1d,        Family::Rnn,
      Family::Lstm,  Family::AttentionNet};
  return order;
}

bool is_sequence_family(Family f) {
  return f == Family::Cnn1d || f == Family::Rnn || f == Family::Lstm ||
         f == Family::AttentionNet;
}

double get_param(const EstimatorSpec& spec, const std::string& key, double fallback) {
  const auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

Eigen::VectorXd TrainedModel::raw_values(const Eigen::MatrixXd&) const {
  throw std::invalid_argument(std::string("family ") + family_name(spec_.family) +
                              " does not accept tabular inputs");
}

Eigen::VectorXd TrainedModel::raw_values(const std::vector<SequenceWindow>&) const {
  throw std::invalid_argument(std::string("family ") + family_name(spec_.family) +
                              " does not accept sequence inputs");
}

namespace {

void check_classification_targets(const Eigen::VectorXd& y) {
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) pos = true;
    else if (y[i] == 0.0) neg = true;
    else throw std::invalid_argument("classification targets must be 0 or 1");
  }
  if (!pos || !neg) throw std::invalid_argument("empty class in classification targets");
}

int iparam(const EstimatorSpec& spec, const std::string& key, int fallback) {
  return static_cast<int>(std::llround(get_param(spec, key, fallback)));
}

}  // namespace

namespace detail {

Eigen::VectorXd LassoModel::raw_values(const Eigen::MatrixXd& x) const {
  if (x.cols() != coef.size()) throw std::invalid_argument("lasso: input dimension mismatch");
  Eigen::VectorXd v = (x * coef).array() + intercept;
  if (spec().task == Task::Classification) v = v.cwiseMax(0.0).cwiseMin(1.0);
  return v;
}

Eigen::VectorXd SvmModel::raw_values(const Eigen::MatrixXd& x) const {
  if (x.cols() != weights.size()) throw std::invalid_argument("svm: input dimension mismatch");
  Eigen::VectorXd v = (x * weights).array() + bias;
  if (spec().task == Task::Classification) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
  }
  return v;
}

Eigen::VectorXd TreeModel::raw_values(const Eigen::MatrixXd& x) const {
  return tree_predict(tree, x);
}

Eigen::VectorXd ForestModel::raw_values(const Eigen::MatrixXd& x) const {
  return forest_predict(forest, x);
}

Eigen::VectorXd GbmModel::raw_values(const Eigen::MatrixXd& x) const {
  return gbm_predict(fit, x);
}

Eigen::VectorXd MlpModel::raw_values(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim) throw std::invalid_argument("mlp: input dimension mismatch");
  return net->output(x);
}

Eigen::VectorXd SequenceModel::raw_values(const std::vector<SequenceWindow>& windows) const {
  for (const auto& w : windows) {
    if (w.values.cols() != input_dim) {
      throw std::invalid_argument("sequence model: input dimension mismatch");
    }
  }
  return net->output(windows);
}

std::unique_ptr<Mlp> make_mlp(const EstimatorSpec& spec, int input_dim, Rng& rng) {
  const int layers = iparam(spec, "hidden_layers", 2);
  const int units = iparam(spec, "hidden_units", 64);
  if (layers < 0 || units < 1) throw std::invalid_argument("mlp: invalid architecture");
  std::vector<int> hidden(static_cast<std::size_t>(layers), units);
  return std::make_unique<Mlp>(input_dim, hidden, spec.task == Task::Classification, rng);
}

std::unique_ptr<SequenceNet> make_sequence_net(const EstimatorSpec& spec, int input_dim,
                                               Rng& rng) {
  const bool cls = spec.task == Task::Classification;
  switch (spec.family) {
    case Family::Cnn1d:
      return std::make_unique<Cnn1d>(input_dim, iparam(spec, "channels", 16),
                                     iparam(spec, "kernel", 3), cls, rng);
    case Family::Rnn:
      return std::make_unique<Rnn>(input_dim, iparam(spec, "hidden_units", 16), cls, rng);
    case Family::Lstm:
      return std::make_unique<Lstm>(input_dim, iparam(spec, "hidden_units", 16), cls, rng);
    case Family::AttentionNet:
      return std::make_unique<AttentionNet>(input_dim, iparam(spec, "hidden_units", 16), cls,
                                            rng);
    default:
      throw std::invalid_argument("not a sequence family");
  }
}

}  // namespace detail

std::unique_ptr<TrainedModel> fit(const EstimatorSpec& spec, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y) {
  if (is_sequence_family(spec.family)) {
    throw std::invalid_argument(std::string("family ") + family_name(spec.family) +
                                " requires sequence windows");
  }
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("fit: shape mismatch");
  if (spec.task == Task::Classification) check_classification_targets(y);

  switch (spec.family) {
    case Family::Lasso: {
      auto model = std::make_unique<detail::LassoModel>(spec);
      const auto res =
          fit_lasso_coordinate_descent(x, y, get_param(spec, "lambda", 0.01),
                                       get_param(spec, "tol", 1e-9), iparam(spec, "max_iter", 2000));
      model->coef = res.coef;
      model->intercept = res.intercept;
      model->set_training_metadata(res.objective_per_sweep.empty() ? 0.0
                                                                   : res.objective_per_sweep.back(),
                                   res.sweeps);
      return model;
    }
    case Family::LinearSvm: {
      auto model = std::make_unique<detail::SvmModel>(spec);
      const double c = get_param(spec, "c", 1.0);
      const int epochs = iparam(spec, "epochs", 40);
      LinearSvmFit res;
      if (spec.task == Task::Classification) {
        Eigen::VectorXd ypm = y.array() * 2.0 - 1.0;
        res = fit_linear_svm_classifier(x, ypm, c, epochs, spec.rng_seed);
      } else {
        res = fit_linear_svm_regressor(x, y, c, get_param(spec, "tube", 0.1), epochs,
                                       spec.rng_seed);
      }
      model->weights = res.weights;
      model->bias = res.bias;
      model->set_training_metadata(0.0, epochs);
      return model;
    }
    case Family::DecisionTree: {
      auto model = std::make_unique<detail::TreeModel>(spec);
      model->tree = fit_cart(x, y, iparam(spec, "max_depth", 6), iparam(spec, "min_leaf", 5),
                             spec.task == Task::Classification ? SplitCriterion::Gini
                                                               : SplitCriterion::Variance);
      return model;
    }
    case Family::RandomForest: {
      auto model = std::make_unique<detail::ForestModel>(spec);
      model->forest = fit_random_forest(
          x, y, iparam(spec, "n_trees", 50), get_param(spec, "feature_subsample", 0.5),
          iparam(spec, "max_depth", 10), iparam(spec, "min_leaf", 2),
          iparam(spec, "bootstrap", 1) != 0, spec.rng_seed,
          spec.task == Task::Classification ? SplitCriterion::Gini : SplitCriterion::Variance);
      return model;
    }
    case Family::Gbm: {
      auto model = std::make_unique<detail::GbmModel>(spec);
      model->fit = fit_gbm(x, y, iparam(spec, "n_rounds", 100), get_param(spec, "learning_rate", 0.1),
                           iparam(spec, "max_depth", 3), iparam(spec, "min_leaf", 5),
                           spec.task == Task::Classification);
      model->set_training_metadata(
          model->fit.round_losses.empty() ? 0.0 : model->fit.round_losses.back(),
          static_cast<int>(model->fit.round_losses.size()));
      return model;
    }
    case Family::Mlp: {
      auto model = std::make_unique<detail::MlpModel>(spec);
      model->input_dim = static_cast<int>(x.cols());
      Rng rng(spec.rng_seed);
      model->net = detail::make_mlp(spec, model->input_dim, rng);
      SgdOptions opt;
      opt.epochs = iparam(spec, "epochs", 30);
      opt.batch_size = iparam(spec, "batch_size", 32);
      opt.learning_rate = get_param(spec, "learning_rate", 0.05);
      opt.seed = spec.rng_seed + 1;
      const TrainInfo info = train_tabular(*model->net, x, y, opt);
      model->set_training_metadata(info.final_loss, info.epochs_run);
      return model;
    }
    default:
      throw std::invalid_argument("unhandled family");
  }
}

std::unique_ptr<TrainedModel> fit(const EstimatorSpec& spec,
                                  const std::vector<SequenceWindow>& windows,
                                  const Eigen::VectorXd& y) {
  if (!is_sequence_family(spec.family)) {
    throw std::invalid_argument(std::string("family ") + family_name(spec.family) +
                                " requires tabular feature rows");
  }
  if (windows.empty() || static_cast<Eigen::Index>(windows.size()) != y.size()) {
    throw std::invalid_argument("fit: shape mismatch");
  }
  if (spec.task == Task::Classification) check_classification_targets(y);

  auto model = std::make_unique<detail::SequenceModel>(spec);
  model->input_dim = static_cast<int>(windows.front().values.cols());
  Rng rng(spec.rng_seed);
  model->net = detail::make_sequence_net(spec, model->input_dim, rng);
  SgdOptions opt;
  opt.epochs = iparam(spec, "epochs", 10);
  opt.batch_size = iparam(spec, "batch_size", 32);
  opt.learning_rate = get_param(spec, "learning_rate", 0.05);
  opt.seed = spec.rng_seed + 1;
  const TrainInfo info = train_sequence(*model->net, windows, y, opt);
  model->set_training_metadata(info.final_loss, info.epochs_run);
  return model;
}

namespace {

Prediction finish_prediction(const TrainedModel& model, Eigen::VectorXd values) {
  if (!values.allFinite()) throw std::runtime_error("non-finite prediction");
  Prediction p;
  p.values = std::move(values);
  if (model.spec().task == Task::Classification) {
    p.classes.resize(static_cast<std::size_t>(p.values.size()));
    for (Eigen::Index i = 0; i < p.values.size(); ++i) {
      p.classes[static_cast<std::size_t>(i)] = p.values[i] >= 0.5 ? 1 : 0;
    }
  }
  return p;
}

}  // namespace

Prediction predict(const TrainedModel& model, const Eigen::MatrixXd& x) {
  return finish_prediction(model, model.raw_values(x));
}

Prediction predict(const TrainedModel& model, const std::vector<SequenceWindow>& windows) {
  return finish_prediction(model, model.raw_values(windows));
}

}  // namespace churn
