#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tvvar/common.hpp"
#include "tvvar/dataset.hpp"
#include "tvvar/ks_estimator.hpp"
#include "tvvar/model.hpp"

namespace tvvar {

// Full estimation configuration: everything needed to refit a model from a
// raw dataset, including on resampled data.
struct ModelSpec {
  Method method = Method::KS;
  Eigen::VectorXd est_points;   // required, in [0,1]
  double bandwidth = 0.0;       // kernel methods
  int k = 0;                    // spline methods; 0 = automatic
  std::uint64_t seed = 0;       // drives lambda cross-validation
  FitOptions options;
};

Eigen::VectorXd equispaced_est_points(long E);

// The one fitting pipeline: lagged design, standardization, method dispatch.
TimeVaryingVarModel fit_model(const TimeSeriesDataset& data, const ModelSpec& spec);

struct BootstrapDistribution {
  long nB = 0;
  int blocks = 0;
  std::vector<std::uint64_t> seeds;
  Eigen::VectorXd est_points;
  std::vector<std::string> labels;
  std::string method_tag_name;

  // samples[r][e] is the p x p coefficient matrix of replicate r at
  // estimation point e; replicate_ok flags refits that succeeded.
  std::vector<std::vector<Eigen::MatrixXd>> samples;
  std::vector<Eigen::MatrixXd> intercept_samples;  // nB matrices, p x E
  std::vector<bool> replicate_ok;
  long failed = 0;

  // quantiles[prob][e] is p x p; intercept_quantiles[prob] is p x E.
  std::map<double, std::vector<Eigen::MatrixXd>> quantiles;
  std::map<double, Eigen::MatrixXd> intercept_quantiles;
};

// Draw `blocks` block indices with replacement for one replicate seed.
std::vector<int> bootstrap_block_draw(std::uint64_t seed, int blocks);

// Split n occasions into `blocks` contiguous segments of near-equal length,
// remainder spread one occasion at a time from the front. Returns segment
// start offsets plus the end sentinel.
std::vector<long> bootstrap_block_bounds(long n, int blocks);

// Resample a dataset by concatenating drawn blocks in draw order. Day
// indices are shifted so originally-adjacent drawn blocks keep their day
// continuity while any other seam forces a day break.
TimeSeriesDataset bootstrap_resample(const TimeSeriesDataset& data, const std::vector<int>& draw,
                                     int blocks);

BootstrapDistribution block_bootstrap(const TimeSeriesDataset& data, const ModelSpec& spec,
                                      long nB, int blocks,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::vector<double>& quantile_probs,
                                      ExecutionPolicy exec = ExecutionPolicy::Parallel);

enum class PredictionCombine { Weighted, Closest };

struct PredictionErrorReport {
  std::vector<std::string> labels;
  Eigen::VectorXd r2;     // per variable, combined across time
  Eigen::VectorXd rmse;   // per variable, standardized scale
  Eigen::MatrixXd est_point_rmse;  // E x p, kernel-weighted around each est point
  Eigen::MatrixXd est_point_r2;    // E x p
  PredictionCombine combine = PredictionCombine::Weighted;
  long rows_used = 0;
};

PredictionErrorReport compute_prediction_errors(const TimeVaryingVarModel& model,
                                                const TimeSeriesDataset& data,
                                                PredictionCombine combine);

}  // namespace tvvar
