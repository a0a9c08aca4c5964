#include <istream>
#include <ostream>
#include <sstream>

#include "churn/io.hpp"
#include "model_impl.hpp"

namespace churn {

namespace {

constexpr const char* kMagic = "churn-model";
constexpr const char* kVersion = "v1";

void write_tensor(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (j == 0 ? "" : " ") << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_tensor(std::istream& in, const std::string& expect_name = "") {
  std::string tag, name;
  Eigen::Index rows = 0, cols = 0;
  in >> tag >> name >> rows >> cols;
  if (tag != "tensor") throw std::runtime_error("model artifact: expected tensor, got " + tag);
  if (!expect_name.empty() && name != expect_name) {
    throw std::runtime_error("model artifact: expected tensor " + expect_name + ", got " + name);
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) in >> m(i, j);
  }
  if (!in) throw std::runtime_error("model artifact: truncated tensor " + name);
  return m;
}

void write_trees(std::ostream& out, const std::vector<DecisionTreeFit>& trees) {
  out << "trees " << trees.size() << '\n';
  for (const auto& tree : trees) {
    out << "tree " << tree.nodes.size() << '\n';
    for (const auto& n : tree.nodes) {
      out << "node " << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' '
          << n.right << ' ' << format_double(n.value) << '\n';
    }
  }
}

std::vector<DecisionTreeFit> read_trees(std::istream& in) {
  std::string tag;
  std::size_t count = 0;
  in >> tag >> count;
  if (tag != "trees") throw std::runtime_error("model artifact: expected trees, got " + tag);
  std::vector<DecisionTreeFit> trees(count);
  for (auto& tree : trees) {
    std::size_t n = 0;
    in >> tag >> n;
    if (tag != "tree") throw std::runtime_error("model artifact: expected tree, got " + tag);
    tree.nodes.resize(n);
    for (auto& node : tree.nodes) {
      in >> tag >> node.feature >> node.threshold >> node.left >> node.right >> node.value;
      if (tag != "node") throw std::runtime_error("model artifact: expected node, got " + tag);
    }
  }
  if (!in) throw std::runtime_error("model artifact: truncated trees");
  return trees;
}

void write_network(std::ostream& out, int input_dim, Network& net) {
  out << "input_dim " << input_dim << '\n';
  const auto refs = net.params();
  out << "net " << refs.size() << '\n';
  for (const auto& p : refs) write_tensor(out, p.name, *p.value);
}

int read_network_into(std::istream& in, Network& net) {
  std::string tag;
  std::size_t count = 0;
  in >> tag >> count;
  if (tag != "net") throw std::runtime_error("model artifact: expected net, got " + tag);
  const auto refs = net.params();
  if (count != refs.size()) throw std::runtime_error("model artifact: tensor count mismatch");
  for (const auto& p : refs) {
    const Eigen::MatrixXd m = read_tensor(in);
    if (m.rows() != p.value->rows() || m.cols() != p.value->cols()) {
      throw std::runtime_error(std::string("model artifact: shape mismatch for ") + p.name);
    }
    *p.value = m;
  }
  return 0;
}

}  // namespace

namespace detail {

void LassoModel::save_body(std::ostream& out) const {
  write_tensor(out, "coef", coef);
  out << "scalar intercept " << format_double(intercept) << '\n';
}

void SvmModel::save_body(std::ostream& out) const {
  write_tensor(out, "weights", weights);
  out << "scalar bias " << format_double(bias) << '\n';
}

void TreeModel::save_body(std::ostream& out) const { write_trees(out, {tree}); }

void ForestModel::save_body(std::ostream& out) const { write_trees(out, forest.trees); }

void GbmModel::save_body(std::ostream& out) const {
  out << "scalar base_score " << format_double(fit.base_score) << '\n';
  out << "scalar learning_rate " << format_double(fit.learning_rate) << '\n';
  out << "scalar logistic " << (fit.logistic ? 1 : 0) << '\n';
  write_trees(out, fit.trees);
}

void MlpModel::save_body(std::ostream& out) const { write_network(out, input_dim, *net); }

void SequenceModel::save_body(std::ostream& out) const { write_network(out, input_dim, *net); }

}  // namespace detail

void save_model(const TrainedModel& model, std::ostream& out) {
  const EstimatorSpec& spec = model.spec();
  out << kMagic << ' ' << kVersion << '\n';
  out << "family " << family_name(spec.family) << '\n';
  out << "task " << task_name(spec.task) << '\n';
  out << "seed " << spec.rng_seed << '\n';
  out << "final_loss " << format_double(model.final_loss()) << '\n';
  out << "epochs_run " << model.epochs_run() << '\n';
  out << "params " << spec.params.size() << '\n';
  for (const auto& [key, value] : spec.params) {
    out << key << ' ' << format_double(value) << '\n';
  }
  model.save_body(out);
  out << "end\n";
}

std::unique_ptr<TrainedModel> load_model(std::istream& in) {
  std::string magic, version, tag;
  in >> magic >> version;
  if (magic != kMagic) throw std::runtime_error("not a model artifact");
  if (version != kVersion) throw std::runtime_error("unsupported model artifact version " + version);

  EstimatorSpec spec;
  std::string word;
  double final_loss = 0;
  int epochs_run = 0;
  std::size_t n_params = 0;
  in >> tag >> word;
  if (tag != "family") throw std::runtime_error("model artifact: expected family");
  spec.family = family_from_name(word);
  in >> tag >> word;
  if (tag != "task") throw std::runtime_error("model artifact: expected task");
  spec.task = task_from_name(word);
  in >> tag >> spec.rng_seed;
  if (tag != "seed") throw std::runtime_error("model artifact: expected seed");
  in >> tag >> final_loss;
  if (tag != "final_loss") throw std::runtime_error("model artifact: expected final_loss");
  in >> tag >> epochs_run;
  if (tag != "epochs_run") throw std::runtime_error("model artifact: expected epochs_run");
  in >> tag >> n_params;
  if (tag != "params") throw std::runtime_error("model artifact: expected params");
  for (std::size_t i = 0; i < n_params; ++i) {
    std::string key;
    double value = 0;
    in >> key >> value;
    spec.params[key] = value;
  }

  std::unique_ptr<TrainedModel> model;
  switch (spec.family) {
    case Family::Lasso: {
      auto m = std::make_unique<detail::LassoModel>(spec);
      m->coef = read_tensor(in, "coef");
      in >> tag >> word >> m->intercept;
      model = std::move(m);
      break;
    }
    case Family::LinearSvm: {
      auto m = std::make_unique<detail::SvmModel>(spec);
      m->weights = read_tensor(in, "weights");
      in >> tag >> word >> m->bias;
      model = std::move(m);
      break;
    }
    case Family::DecisionTree: {
      auto m = std::make_unique<detail::TreeModel>(spec);
      auto trees = read_trees(in);
      if (trees.size() != 1) throw std::runtime_error("model artifact: expected one tree");
      m->tree = std::move(trees.front());
      model = std::move(m);
      break;
    }
    case Family::RandomForest: {
      auto m = std::make_unique<detail::ForestModel>(spec);
      m->forest.trees = read_trees(in);
      model = std::move(m);
      break;
    }
    case Family::Gbm: {
      auto m = std::make_unique<detail::GbmModel>(spec);
      int logistic = 0;
      in >> tag >> word >> m->fit.base_score;
      in >> tag >> word >> m->fit.learning_rate;
      in >> tag >> word >> logistic;
      m->fit.logistic = logistic != 0;
      m->fit.trees = read_trees(in);
      model = std::move(m);
      break;
    }
    case Family::Mlp: {
      auto m = std::make_unique<detail::MlpModel>(spec);
      in >> tag >> m->input_dim;
      if (tag != "input_dim") throw std::runtime_error("model artifact: expected input_dim");
      Rng rng(0);
      m->net = detail::make_mlp(spec, m->input_dim, rng);
      read_network_into(in, *m->net);
      model = std::move(m);
      break;
    }
    default: {  // sequence families
      auto m = std::make_unique<detail::SequenceModel>(spec);
      in >> tag >> m->input_dim;
      if (tag != "input_dim") throw std::runtime_error("model artifact: expected input_dim");
      Rng rng(0);
      m->net = detail::make_sequence_net(spec, m->input_dim, rng);
      read_network_into(in, *m->net);
      model = std::move(m);
      break;
    }
  }
  in >> tag;
  if (tag != "end") throw std::runtime_error("model artifact: missing end marker");
  model->set_training_metadata(final_loss, epochs_run);
  return model;
}

}  // namespace churn
