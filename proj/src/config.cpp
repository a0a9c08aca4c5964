#include "churn/config.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "churn/io.hpp"

namespace churn {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::runtime_error("unknown config key: " + where + "." + it.key());
  }
}

const char* lifetime_kind_name(LifetimeDist::Kind k) {
  switch (k) {
    case LifetimeDist::Kind::Fixed: return "fixed";
    case LifetimeDist::Kind::UniformInt: return "uniform_int";
    case LifetimeDist::Kind::LogNormalInt: return "lognormal_int";
    case LifetimeDist::Kind::FullSpan: return "full_span";
  }
  return "?";
}

LifetimeDist::Kind lifetime_kind_from_name(const std::string& name) {
  if (name == "fixed") return LifetimeDist::Kind::Fixed;
  if (name == "uniform_int") return LifetimeDist::Kind::UniformInt;
  if (name == "lognormal_int") return LifetimeDist::Kind::LogNormalInt;
  if (name == "full_span") return LifetimeDist::Kind::FullSpan;
  throw std::runtime_error("unknown lifetime kind: " + name);
}

const char* curve_kind_name(PlayCurve::Kind k) {
  return k == PlayCurve::Kind::Constant ? "constant" : "plateau_decay";
}

PlayCurve::Kind curve_kind_from_name(const std::string& name) {
  if (name == "constant") return PlayCurve::Kind::Constant;
  if (name == "plateau_decay") return PlayCurve::Kind::PlateauDecay;
  throw std::runtime_error("unknown curve kind: " + name);
}

json archetype_to_json(const ArchetypeSpec& spec, double weight) {
  json j;
  j["name"] = archetype_name(spec.name);
  j["weight"] = weight;
  j["lifetime"] = {{"kind", lifetime_kind_name(spec.lifetime.kind)},
                   {"a", spec.lifetime.a},
                   {"b", spec.lifetime.b}};
  j["curve"] = {{"kind", curve_kind_name(spec.curve.kind)},
                {"peak_seconds", spec.curve.peak_seconds},
                {"plateau_frac", spec.curve.plateau_frac},
                {"floor_frac", spec.curve.floor_frac}};
  j["stage_rate"] = spec.stage_rate;
  j["resource_rate"] = spec.resource_rate;
  j["character_rate"] = spec.character_rate;
  j["noise_sigma"] = spec.noise_sigma;
  j["active_prob"] = spec.active_prob;
  return j;
}

std::pair<ArchetypeSpec, double> archetype_from_json(const json& j, const std::string& where) {
  check_keys(j, where,
             {"name", "weight", "lifetime", "curve", "stage_rate", "resource_rate",
              "character_rate", "noise_sigma", "active_prob"});
  ArchetypeSpec spec;
  spec.name = archetype_from_name(j.at("name").get<std::string>());
  if (j.contains("lifetime")) {
    const json& l = j.at("lifetime");
    check_keys(l, where + ".lifetime", {"kind", "a", "b"});
    spec.lifetime.kind = lifetime_kind_from_name(l.at("kind").get<std::string>());
    spec.lifetime.a = l.value("a", 0.0);
    spec.lifetime.b = l.value("b", 0.0);
  }
  if (j.contains("curve")) {
    const json& c = j.at("curve");
    check_keys(c, where + ".curve", {"kind", "peak_seconds", "plateau_frac", "floor_frac"});
    spec.curve.kind = curve_kind_from_name(c.at("kind").get<std::string>());
    spec.curve.peak_seconds = c.value("peak_seconds", spec.curve.peak_seconds);
    spec.curve.plateau_frac = c.value("plateau_frac", spec.curve.plateau_frac);
    spec.curve.floor_frac = c.value("floor_frac", spec.curve.floor_frac);
  }
  spec.stage_rate = j.value("stage_rate", spec.stage_rate);
  spec.resource_rate = j.value("resource_rate", spec.resource_rate);
  spec.character_rate = j.value("character_rate", spec.character_rate);
  spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
  spec.active_prob = j.value("active_prob", spec.active_prob);
  return {spec, j.at("weight").get<double>()};
}

}  // namespace

ResolvedPaths resolve_paths(const ExperimentConfig& c) {
  const std::filesystem::path out(c.out_dir);
  ResolvedPaths p;
  p.events = c.events_file.empty() ? out / "events.jsonl" : std::filesystem::path(c.events_file);
  p.ground_truth = c.ground_truth_file.empty() ? out / "ground_truth.csv"
                                               : std::filesystem::path(c.ground_truth_file);
  p.features =
      c.features_file.empty() ? out / "features.csv" : std::filesystem::path(c.features_file);
  p.labeled = c.labeled_file.empty() ? out / "labeled.csv" : std::filesystem::path(c.labeled_file);
  p.report_prefix =
      c.report_prefix.empty() ? out / "report" : std::filesystem::path(c.report_prefix);
  return p;
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.cohort = default_cohort_config();
  return c;
}

const std::map<std::string, std::vector<std::string>>& allowed_hyperparameters() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"lasso", {"lambda", "tol", "max_iter"}},
      {"linear_svm", {"c", "epochs", "tube"}},
      {"decision_tree", {"max_depth", "min_leaf"}},
      {"random_forest", {"n_trees", "feature_subsample", "max_depth", "min_leaf", "bootstrap"}},
      {"gbm", {"n_rounds", "learning_rate", "max_depth", "min_leaf"}},
      {"mlp", {"hidden_layers", "hidden_units", "epochs", "batch_size", "learning_rate"}},
      {"cnn1d", {"channels", "kernel", "epochs", "batch_size", "learning_rate"}},
      {"rnn", {"hidden_units", "epochs", "batch_size", "learning_rate"}},
      {"lstm", {"hidden_units", "epochs", "batch_size", "learning_rate"}},
      {"attention_net", {"hidden_units", "epochs", "batch_size", "learning_rate"}}};
  return table;
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  check_keys(j, "config",
             {"out_dir", "events_file", "ground_truth_file", "features_file", "labeled_file",
              "report_prefix", "cohort", "features", "labels", "split", "eval", "train_params"});
  ExperimentConfig c = default_experiment_config();
  c.out_dir = j.value("out_dir", c.out_dir);
  c.events_file = j.value("events_file", c.events_file);
  c.ground_truth_file = j.value("ground_truth_file", c.ground_truth_file);
  c.features_file = j.value("features_file", c.features_file);
  c.labeled_file = j.value("labeled_file", c.labeled_file);
  c.report_prefix = j.value("report_prefix", c.report_prefix);

  if (j.contains("cohort")) {
    const json& co = j.at("cohort");
    check_keys(co, "cohort",
               {"n_users", "dataset_length_days", "join_window_days", "rng_seed", "archetypes"});
    c.cohort.n_users = co.value("n_users", c.cohort.n_users);
    c.cohort.dataset_length_days = co.value("dataset_length_days", c.cohort.dataset_length_days);
    c.cohort.join_window_days = co.value("join_window_days", c.cohort.join_window_days);
    c.cohort.rng_seed = co.value("rng_seed", c.cohort.rng_seed);
    if (co.contains("archetypes")) {
      c.cohort.archetype_mix.clear();
      int i = 0;
      for (const auto& a : co.at("archetypes")) {
        c.cohort.archetype_mix.push_back(
            archetype_from_json(a, "cohort.archetypes[" + std::to_string(i++) + "]"));
      }
    }
  }
  if (j.contains("features")) {
    const json& f = j.at("features");
    check_keys(f, "features", {"window", "epsilon"});
    c.feature_window = f.value("window", c.feature_window);
    c.feature_epsilon = f.value("epsilon", c.feature_epsilon);
  }
  if (j.contains("labels")) {
    const json& l = j.at("labels");
    check_keys(l, "labels", {"warmup_end", "horizon", "tau", "quiet_gap"});
    c.label_params.warmup_end = l.value("warmup_end", c.label_params.warmup_end);
    c.label_params.horizon = l.value("horizon", c.label_params.horizon);
    c.label_params.tau = l.value("tau", c.label_params.tau);
    c.label_params.quiet_gap = l.value("quiet_gap", c.label_params.quiet_gap);
  }
  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, "split", {"ratios", "seed"});
    if (s.contains("ratios")) {
      const auto r = s.at("ratios").get<std::vector<double>>();
      if (r.size() != 3) throw std::runtime_error("split.ratios must have 3 entries");
      c.split_ratios = {r[0], r[1], r[2]};
    }
    c.split_seed = s.value("seed", c.split_seed);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval",
               {"families", "seeds", "hpo_budget", "hpo_init", "max_tabular_train_rows",
                "max_sequence_train_rows", "threads", "master_seed"});
    if (e.contains("families")) {
      c.eval.families.clear();
      for (const auto& name : e.at("families")) {
        c.eval.families.push_back(family_from_name(name.get<std::string>()));
      }
    }
    if (e.contains("seeds")) c.eval.seeds = e.at("seeds").get<std::vector<std::uint64_t>>();
    c.eval.hpo_budget = e.value("hpo_budget", c.eval.hpo_budget);
    c.eval.hpo_init = e.value("hpo_init", c.eval.hpo_init);
    c.eval.max_tabular_train_rows =
        e.value("max_tabular_train_rows", c.eval.max_tabular_train_rows);
    c.eval.max_sequence_train_rows =
        e.value("max_sequence_train_rows", c.eval.max_sequence_train_rows);
    c.eval.threads = e.value("threads", c.eval.threads);
    c.eval.master_seed = e.value("master_seed", c.eval.master_seed);
  }
  c.eval.window = c.feature_window;
  c.eval.split_ratios = c.split_ratios;
  if (j.contains("train_params")) {
    for (auto it = j.at("train_params").begin(); it != j.at("train_params").end(); ++it) {
      const Family family = family_from_name(it.key());
      const auto& allowed = allowed_hyperparameters().at(it.key());
      std::map<std::string, double> params;
      for (auto pit = it.value().begin(); pit != it.value().end(); ++pit) {
        if (std::find(allowed.begin(), allowed.end(), pit.key()) == allowed.end()) {
          throw std::runtime_error("unknown hyperparameter train_params." + it.key() + "." +
                                   pit.key());
        }
        params[pit.key()] = pit.value().get<double>();
      }
      c.train_params[family] = std::move(params);
    }
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["out_dir"] = c.out_dir;
  if (!c.events_file.empty()) j["events_file"] = c.events_file;
  if (!c.ground_truth_file.empty()) j["ground_truth_file"] = c.ground_truth_file;
  if (!c.features_file.empty()) j["features_file"] = c.features_file;
  if (!c.labeled_file.empty()) j["labeled_file"] = c.labeled_file;
  if (!c.report_prefix.empty()) j["report_prefix"] = c.report_prefix;
  j["cohort"]["n_users"] = c.cohort.n_users;
  j["cohort"]["dataset_length_days"] = c.cohort.dataset_length_days;
  j["cohort"]["join_window_days"] = c.cohort.join_window_days;
  j["cohort"]["rng_seed"] = c.cohort.rng_seed;
  j["cohort"]["archetypes"] = json::array();
  for (const auto& [spec, weight] : c.cohort.archetype_mix) {
    j["cohort"]["archetypes"].push_back(archetype_to_json(spec, weight));
  }
  j["features"] = {{"window", c.feature_window}, {"epsilon", c.feature_epsilon}};
  j["labels"] = {{"warmup_end", c.label_params.warmup_end},
                 {"horizon", c.label_params.horizon},
                 {"tau", c.label_params.tau},
                 {"quiet_gap", c.label_params.quiet_gap}};
  j["split"] = {{"ratios", {c.split_ratios[0], c.split_ratios[1], c.split_ratios[2]}},
                {"seed", c.split_seed}};
  json families = json::array();
  for (Family f : c.eval.families) families.push_back(family_name(f));
  j["eval"] = {{"families", families},
               {"seeds", c.eval.seeds},
               {"hpo_budget", c.eval.hpo_budget},
               {"hpo_init", c.eval.hpo_init},
               {"max_tabular_train_rows", c.eval.max_tabular_train_rows},
               {"max_sequence_train_rows", c.eval.max_sequence_train_rows},
               {"threads", c.eval.threads},
               {"master_seed", c.eval.master_seed}};
  if (!c.train_params.empty()) {
    for (const auto& [family, params] : c.train_params) {
      j["train_params"][family_name(family)] = params;
    }
  }
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_file(path));
}

}  // namespace churn
