#include "churn/models/linear.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "churn/rng.hpp"

namespace churn {

namespace {

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

}  // namespace

LassoFit fit_lasso_coordinate_descent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      double lambda, double tol, int max_iter) {
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("lasso: shape mismatch");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("lasso: non-finite input");
  if (lambda < 0) throw std::invalid_argument("lasso: lambda must be >= 0");

  const auto n = static_cast<double>(x.rows());
  const int d = static_cast<int>(x.cols());
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::VectorXd col_sq(d);
  for (int j = 0; j < d; ++j) col_sq[j] = xc.col(j).squaredNorm() / n;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd residual = yc;  // yc - xc*w
  LassoFit fit;

  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_change = 0.0;
    for (int j = 0; j < d; ++j) {
      if (col_sq[j] < 1e-30) {
        w[j] = 0.0;
        continue;
      }
      const double old = w[j];
      const double rho = xc.col(j).dot(residual) / n + col_sq[j] * old;
      const double next = soft_threshold(rho, lambda) / col_sq[j];
      if (next != old) {
        residual -= (next - old) * xc.col(j);
        w[j] = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
    fit.sweeps = sweep + 1;
    fit.objective_per_sweep.push_back(residual.squaredNorm() / (2.0 * n) +
                                      lambda * w.lpNorm<1>());
    if (max_change < tol) break;
  }

  fit.coef = w;
  fit.intercept = y_mean - x_mean.dot(w);
  return fit;
}

namespace {

// Shared SGD schedule: eta_t = eta0 / (1 + eta0 * reg * t), iterate averaging
// over the second half of all updates.
template <typename StepFn>
LinearSvmFit run_svm_sgd(const Eigen::MatrixXd& x, int epochs, double reg, std::uint64_t seed,
                         StepFn&& step) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(d);
  double b_sum = 0.0;
  long long averaged = 0;
  const long long total_steps = static_cast<long long>(epochs) * n;
  const double eta0 = 0.5;

  Rng rng(seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  long long t = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (int idx : order) {
      ++t;
      const double eta = eta0 / (1.0 + eta0 * reg * static_cast<double>(t));
      step(x.row(idx), idx, eta, w, b);
      w *= (1.0 - eta * reg > 0.0) ? 1.0 - eta * reg : 0.0;
      if (2 * t > total_steps) {
        w_sum += w;
        b_sum += b;
        ++averaged;
      }
    }
  }
  LinearSvmFit fit;
  fit.weights = averaged > 0 ? Eigen::VectorXd(w_sum / static_cast<double>(averaged)) : w;
  fit.bias = averaged > 0 ? b_sum / static_cast<double>(averaged) : b;
  return fit;
}

}  // namespace

LinearSvmFit fit_linear_svm_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       double c, int epochs, std::uint64_t seed) {
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("svm: shape mismatch");
  if (c <= 0) throw std::invalid_argument("svm: c must be positive");
  bool has_pos = false, has_neg = false;
  for (int i = 0; i < y.size(); ++i) {
    if (y[i] > 0) has_pos = true;
    else has_neg = true;
  }
  if (!has_pos || !has_neg) throw std::invalid_argument("svm: single-class input");

  const double reg = 1.0 / (c * static_cast<double>(x.rows()));
  return run_svm_sgd(x, epochs, reg, seed,
                     [&y](const auto& xi, int idx, double eta, Eigen::VectorXd& w, double& b) {
                       const double margin = y[idx] * (xi.dot(w) + b);
                       if (margin < 1.0) {
                         w += eta * y[idx] * xi.transpose();
                         b += eta * y[idx];
                       }
                     });
}

LinearSvmFit fit_linear_svm_regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      double c, double tube, int epochs, std::uint64_t seed) {
  if (x.rows() != y.size() || x.rows() == 0) throw std::invalid_argument("svm: shape mismatch");
  if (c <= 0) throw std::invalid_argument("svm: c must be positive");
  if (tube < 0) throw std::invalid_argument("svm: tube must be >= 0");

  const double reg = 1.0 / (c * static_cast<double>(x.rows()));
  return run_svm_sgd(
      x, epochs, reg, seed,
      [&y, tube](const auto& xi, int idx, double eta, Eigen::VectorXd& w, double& b) {
        const double err = y[idx] - (xi.dot(w) + b);
        const double excess = std::abs(err) - tube;
        if (excess > 0.0) {
          const double g = 2.0 * excess * (err > 0 ? 1.0 : -1.0);
          w += eta * g * xi.transpose();
          b += eta * g;
        }
      });
}

}  // namespace churn
