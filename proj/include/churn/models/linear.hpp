#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace churn {

struct LassoFit {
  Eigen::VectorXd coef;
  double intercept = 0;
  int sweeps = 0;
  std::vector<double> objective_per_sweep;  // (1/2n)||y - Xw - b||^2 + lambda*||w||_1
};

// Cyclic coordinate descent with soft thresholding on centered data. Stops
// when the largest coefficient change in a sweep drops below tol.
LassoFit fit_lasso_coordinate_descent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      double lambda, double tol = 1e-9, int max_iter = 2000);

struct LinearSvmFit {
  Eigen::VectorXd weights;
  double bias = 0;
};

// Primal subgradient descent on hinge loss + L2; returns the average of the
// second half of the iterates. Labels must be in {-1, +1}.
LinearSvmFit fit_linear_svm_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       double c, int epochs, std::uint64_t seed);

// Squared epsilon-insensitive regression variant with the same schedule.
LinearSvmFit fit_linear_svm_regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      double c, double tube, int epochs, std::uint64_t seed);

}  // namespace churn
