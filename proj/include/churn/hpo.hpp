#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace churn {

struct ParamDomain {
  enum class Kind { Continuous, Integer, Categorical };
  Kind kind = Kind::Continuous;
  double lo = 0, hi = 1;
  bool log_scale = false;
  std::vector<double> values;  // categorical choices

  static ParamDomain continuous(double lo, double hi, bool log_scale = false);
  static ParamDomain integer(int lo, int hi, bool log_scale = false);
  static ParamDomain categorical(std::vector<double> values);
};

using SearchSpace = std::vector<std::pair<std::string, ParamDomain>>;
using HpoObjective = std::function<double(const std::map<std::string, double>&)>;

struct TrialRecord {
  int index = 0;
  std::map<std::string, double> config;
  double objective = 0;  // NaN when failed
  bool failed = false;
  double seconds = 0;  // wall time; measurement metadata, not deterministic
};

struct HpoResult {
  std::map<std::string, double> best_config;
  double best_objective = 0;
  std::vector<TrialRecord> history;
};

// I.i.d. samples from the space (log-scaled dimensions uniform in the log
// domain). Objectives are maximized; a throwing or non-finite objective marks
// the trial failed and the search continues.
HpoResult random_search(const SearchSpace& space, const HpoObjective& objective, int budget,
                        std::uint64_t seed);

// n_init random trials, then expected improvement under a Gaussian-process
// surrogate: RBF kernel over parameters normalized to [0,1] (categoricals
// one-hot), median-distance lengthscale, jitter 1e-6, objectives standardized.
// Failed trials are imputed at the worst observed value. The first n_init
// draws match random_search with the same seed exactly.
HpoResult bayes_optimize(const SearchSpace& space, const HpoObjective& objective, int budget,
                         std::uint64_t seed, int n_init = 8);

// trial,params_json,objective,seconds,status
void write_trials_csv(const std::vector<TrialRecord>& history, std::ostream& out);

}  // namespace churn
