#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tvvar/common.hpp"

namespace tvvar {

struct RegressionProblem {
  Eigen::MatrixXd X;  // m x q
  Eigen::VectorXd y;  // m
  Eigen::VectorXd w;  // m, in [0,1], not all zero
  bool penalize_intercept = false;  // always false; the intercept is free

  long m() const { return X.rows(); }
  long q() const { return X.cols(); }
  void validate() const;
};

struct RegressionSolution {
  double intercept = 0.0;
  Eigen::VectorXd slopes;
  double lambda = 0.0;
  double objective = 0.0;  // (1/m) sum_j w_j r_j^2 + lambda * ||slopes||_1
};

struct CrossValidationResult {
  double lambda_hat = 0.0;
  std::vector<double> path;
  std::vector<double> cv_errors;  // mean weighted squared prediction error per path entry
};

RegressionSolution weighted_least_squares(const RegressionProblem& p);

// Coordinate descent with covariance updates; tolerance 1e-7 on the max
// coefficient change, at most `max_sweeps` sweeps. `objective_trace`, when
// given, receives the objective after every sweep.
RegressionSolution weighted_lasso(const RegressionProblem& p, double lambda,
                                  std::vector<double>* objective_trace = nullptr,
                                  int max_sweeps = 10000);

std::vector<double> lambda_path(const RegressionProblem& p, int n_lambda = 50);

CrossValidationResult cross_validate_lambda(const RegressionProblem& p, int folds = 10,
                                            std::uint64_t seed = 0, int n_lambda = 50);

double lasso_objective(const RegressionProblem& p, const RegressionSolution& s);

// Max KKT violation at (s, lambda): for nonzero slopes the smooth-part
// gradient must equal -lambda*sign(slope); for zero slopes its magnitude
// must not exceed lambda. The free intercept contributes its own gradient.
double kkt_violation(const RegressionProblem& p, const RegressionSolution& s, double lambda);

}  // namespace tvvar
