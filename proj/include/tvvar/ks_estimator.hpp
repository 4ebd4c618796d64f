#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tvvar/common.hpp"
#include "tvvar/dataset.hpp"
#include "tvvar/model.hpp"

namespace tvvar {

struct FitOptions {
  int cv_folds = 10;
  int n_lambda = 50;
  ExecutionPolicy exec = ExecutionPolicy::Parallel;
};

VarCoefficients fit_stationary_var(const LaggedDesign& design, bool regularized,
                                   std::uint64_t seed, const FitOptions& opt = {});

TimeVaryingVarModel fit_tv_var_ks(const LaggedDesign& design, const Eigen::VectorXd& est_points,
                                  double bandwidth, bool regularized, std::uint64_t seed,
                                  const FitOptions& opt = {});

// Wrap a stationary fit as E identical slices so downstream consumers see one
// model shape regardless of method.
TimeVaryingVarModel stationary_as_model(const VarCoefficients& fit, const LaggedDesign& design,
                                        const Eigen::VectorXd& est_points, Method method);

struct BandwidthSelection {
  double b_hat = 0.0;
  std::vector<double> candidates;
  std::vector<double> mean_abs_error;  // +inf where no usable fit existed
  int folds = 0;
  int foldsize = 0;
  bool b_hat_on_grid_edge = false;
};

// Time-stratified cross-validation over bandwidth candidates. foldsize <= 0
// selects the default rule ceil((0.2 n)^(2/3)) with n the occasion count.
BandwidthSelection select_bandwidth(const LaggedDesign& design,
                                    const std::vector<double>& candidates, int folds,
                                    int foldsize, bool regularized, std::uint64_t seed,
                                    const FitOptions& opt = {});

std::vector<double> default_bandwidth_grid();

}  // namespace tvvar
