#include "churn/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>

#include "churn/io.hpp"
#include "churn/rng.hpp"

namespace churn {

ParamDomain ParamDomain::continuous(double lo, double hi, bool log_scale) {
  if (!(lo < hi)) throw std::invalid_argument("search space: lo must be < hi");
  if (log_scale && lo <= 0) throw std::invalid_argument("search space: log scale needs lo > 0");
  ParamDomain d;
  d.kind = Kind::Continuous;
  d.lo = lo;
  d.hi = hi;
  d.log_scale = log_scale;
  return d;
}

ParamDomain ParamDomain::integer(int lo, int hi, bool log_scale) {
  if (!(lo < hi)) throw std::invalid_argument("search space: lo must be < hi");
  if (log_scale && lo <= 0) throw std::invalid_argument("search space: log scale needs lo > 0");
  ParamDomain d;
  d.kind = Kind::Integer;
  d.lo = lo;
  d.hi = hi;
  d.log_scale = log_scale;
  return d;
}

ParamDomain ParamDomain::categorical(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("search space: empty categorical set");
  ParamDomain d;
  d.kind = Kind::Categorical;
  d.values = std::move(values);
  return d;
}

namespace {

double domain_from_unit(const ParamDomain& d, double u) {
  const double lo = d.log_scale ? std::log(d.lo) : d.lo;
  const double hi = d.log_scale ? std::log(d.hi) : d.hi;
  double x = lo + u * (hi - lo);
  if (d.log_scale) x = std::exp(x);
  if (d.kind == ParamDomain::Kind::Integer) {
    x = std::clamp(static_cast<double>(std::llround(x)), d.lo, d.hi);
  }
  return x;
}

double unit_from_domain(const ParamDomain& d, double x) {
  const double lo = d.log_scale ? std::log(d.lo) : d.lo;
  const double hi = d.log_scale ? std::log(d.hi) : d.hi;
  const double v = d.log_scale ? std::log(x) : x;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

std::map<std::string, double> sample_config(const SearchSpace& space, Rng& rng) {
  std::map<std::string, double> config;
  for (const auto& [name, d] : space) {
    if (d.kind == ParamDomain::Kind::Categorical) {
      config[name] = d.values[rng.below(d.values.size())];
    } else {
      config[name] = domain_from_unit(d, rng.uniform());
    }
  }
  return config;
}

int normalized_dim(const SearchSpace& space) {
  int dim = 0;
  for (const auto& [name, d] : space) {
    dim += d.kind == ParamDomain::Kind::Categorical ? static_cast<int>(d.values.size()) : 1;
  }
  return dim;
}

Eigen::VectorXd normalize_config(const SearchSpace& space,
                                 const std::map<std::string, double>& config) {
  Eigen::VectorXd z(normalized_dim(space));
  int at = 0;
  for (const auto& [name, d] : space) {
    const double x = config.at(name);
    if (d.kind == ParamDomain::Kind::Categorical) {
      for (double v : d.values) z[at++] = v == x ? 1.0 : 0.0;
    } else {
      z[at++] = unit_from_domain(d, x);
    }
  }
  return z;
}

// Local perturbation of an incumbent in normalized coordinates.
std::map<std::string, double> perturb_config(const SearchSpace& space,
                                             const std::map<std::string, double>& base, Rng& rng) {
  std::map<std::string, double> config;
  for (const auto& [name, d] : space) {
    if (d.kind == ParamDomain::Kind::Categorical) {
      config[name] =
          rng.uniform() < 0.2 ? d.values[rng.below(d.values.size())] : base.at(name);
    } else {
      const double u = std::clamp(unit_from_domain(d, base.at(name)) + 0.05 * rng.normal(), 0.0, 1.0);
      config[name] = domain_from_unit(d, u);
    }
  }
  return config;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct EvalOutcome {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool failed = true;
};

EvalOutcome run_objective(const HpoObjective& objective,
                          const std::map<std::string, double>& config) {
  EvalOutcome out;
  try {
    const double v = objective(config);
    if (std::isfinite(v)) {
      out.value = v;
      out.failed = false;
    }
  } catch (const std::exception&) {
  }
  return out;
}

void finish_result(HpoResult& result) {
  double best = -std::numeric_limits<double>::infinity();
  const TrialRecord* best_trial = nullptr;
  for (const auto& t : result.history) {
    if (!t.failed && t.objective > best) {
      best = t.objective;
      best_trial = &t;
    }
  }
  if (best_trial != nullptr) {
    result.best_config = best_trial->config;
    result.best_objective = best_trial->objective;
  } else if (!result.history.empty()) {
    result.best_config = result.history.front().config;
    result.best_objective = std::numeric_limits<double>::quiet_NaN();
  }
}

TrialRecord run_trial(const HpoObjective& objective, std::map<std::string, double> config,
                      int index) {
  const auto start = std::chrono::steady_clock::now();
  const EvalOutcome outcome = run_objective(objective, config);
  const auto stop = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.index = index;
  rec.config = std::move(config);
  rec.objective = outcome.value;
  rec.failed = outcome.failed;
  rec.seconds = std::chrono::duration<double>(stop - start).count();
  return rec;
}

}  // namespace

HpoResult random_search(const SearchSpace& space, const HpoObjective& objective, int budget,
                        std::uint64_t seed) {
  if (space.empty()) throw std::invalid_argument("empty search space");
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  Rng rng(seed);
  HpoResult result;
  for (int t = 0; t < budget; ++t) {
    result.history.push_back(run_trial(objective, sample_config(space, rng), t));
  }
  finish_result(result);
  return result;
}

HpoResult bayes_optimize(const SearchSpace& space, const HpoObjective& objective, int budget,
                         std::uint64_t seed, int n_init) {
  if (space.empty()) throw std::invalid_argument("empty search space");
  if (n_init < 1) throw std::invalid_argument("n_init must be >= 1");
  if (budget < n_init) throw std::invalid_argument("budget must be >= n_init");

  Rng rng(seed);
  HpoResult result;

  for (int t = 0; t < budget; ++t) {
    std::map<std::string, double> next;
    if (t < n_init) {
      next = sample_config(space, rng);
    } else {
      // Impute failed trials at the worst observed objective.
      double worst = std::numeric_limits<double>::infinity();
      double best = -std::numeric_limits<double>::infinity();
      int successes = 0;
      for (const auto& tr : result.history) {
        if (!tr.failed) {
          worst = std::min(worst, tr.objective);
          best = std::max(best, tr.objective);
          ++successes;
        }
      }
      const std::map<std::string, double>* incumbent = nullptr;
      for (const auto& tr : result.history) {
        if (!tr.failed && tr.objective == best) {
          incumbent = &tr.config;
          break;
        }
      }

      const int n = static_cast<int>(result.history.size());
      Eigen::VectorXd y(n);
      Eigen::MatrixXd xs(n, normalized_dim(space));
      for (int i = 0; i < n; ++i) {
        const auto& tr = result.history[static_cast<std::size_t>(i)];
        y[i] = tr.failed ? worst : tr.objective;
        xs.row(i) = normalize_config(space, tr.config).transpose();
      }

      const double y_mean = y.mean();
      const double y_sd = std::sqrt((y.array() - y_mean).square().mean());
      if (successes == 0 || y_sd < 1e-12) {
        // Flat or all-failed surrogate carries no information.
        next = sample_config(space, rng);
      } else {
        const Eigen::VectorXd ys = (y.array() - y_mean) / y_sd;

        std::vector<double> dists;
        for (int i = 0; i < n; ++i) {
          for (int j = i + 1; j < n; ++j) {
            const double dist = (xs.row(i) - xs.row(j)).norm();
            if (dist > 0) dists.push_back(dist);
          }
        }
        double lengthscale = 0.5 * std::sqrt(static_cast<double>(xs.cols()));
        if (!dists.empty()) {
          std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
          lengthscale = dists[dists.size() / 2];
        }
        const double inv2l2 = 1.0 / (2.0 * lengthscale * lengthscale);

        Eigen::MatrixXd k(n, n);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j <= i; ++j) {
            const double v = std::exp(-(xs.row(i) - xs.row(j)).squaredNorm() * inv2l2);
            k(i, j) = v;
            k(j, i) = v;
          }
          k(i, i) += 1e-6;
        }
        const Eigen::LLT<Eigen::MatrixXd> llt(k);
        const Eigen::VectorXd alpha = llt.solve(ys);
        const double y_best = (best - y_mean) / y_sd;

        double best_ei = -1.0;
        for (int cand = 0; cand < 576; ++cand) {
          std::map<std::string, double> candidate =
              cand < 512 || incumbent == nullptr ? sample_config(space, rng)
                                                 : perturb_config(space, *incumbent, rng);
          const Eigen::VectorXd z = normalize_config(space, candidate);
          Eigen::VectorXd ks(n);
          for (int i = 0; i < n; ++i) {
            ks[i] = std::exp(-(xs.row(i).transpose() - z).squaredNorm() * inv2l2);
          }
          const double mu = ks.dot(alpha);
          const double var =
              std::max(1.0 + 1e-6 - ks.dot(llt.solve(ks)), 1e-12);
          const double sigma = std::sqrt(var);
          const double zscore = (mu - y_best) / sigma;
          const double ei = (mu - y_best) * normal_cdf(zscore) + sigma * normal_pdf(zscore);
          if (ei > best_ei) {
            best_ei = ei;
            next = std::move(candidate);
          }
        }
      }
    }
    result.history.push_back(run_trial(objective, std::move(next), t));
  }
  finish_result(result);
  return result;
}

void write_trials_csv(const std::vector<TrialRecord>& history, std::ostream& out) {
  out << "trial,params_json,objective,seconds,status\n";
  for (const auto& t : history) {
    std::string params = "{";
    bool first = true;
    for (const auto& [key, value] : t.config) {
      if (!first) params += ",";
      first = false;
      params += "\"" + key + "\":" + format_double(value);
    }
    params += "}";
    out << t.index << ",\"";
    for (char ch : params) {
      out << ch;
      if (ch == '"') out << '"';  // RFC 4180 doubling
    }
    out << "\"," << (t.failed ? "" : format_double(t.objective)) << ','
        << format_double(t.seconds) << ',' << (t.failed ? "failed" : "ok") << '\n';
  }
}

}  // namespace churn
