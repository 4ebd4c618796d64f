#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "tvvar/common.hpp"
#include "tvvar/model.hpp"
#include "tvvar/simulation.hpp"

namespace tvvar {

// |estimate - truth| per coefficient per estimation point, on the generative
// (unstandardized) scale. Index [e](i, j).
std::vector<Eigen::MatrixXd> absolute_error(const TimeVaryingVarModel& model,
                                            const CoefficientArray& truth);

struct ErrorSample {
  std::vector<Eigen::MatrixXd> abs_err;  // E slices of p x p
  SpecsMatrix specs;
};

struct KindErrorStats {
  std::string kind;             // merged category: constant, linear, sigmoid, step, zero
  double mean = 0.0;
  std::map<double, double> quantiles;  // prob -> time-averaged quantile
  long n_parameters = 0;        // parameter instances pooled across iterations
};

// Pool errors of parameters sharing a merged kind across iterations;
// quantiles are computed per estimation point over the pooled values, then
// averaged over estimation points (as is the mean).
std::vector<KindErrorStats> aggregate_errors(const std::vector<ErrorSample>& iterations,
                                             const std::vector<double>& probs);

struct StructureRecovery {
  double sensitivity = 0.0;
  double precision = 0.0;
  bool precision_defined = true;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  bool dense_method = false;  // GLM/KS/GAM return nonzero estimates with probability 1
};

StructureRecovery structure_recovery(const TimeVaryingVarModel& model,
                                     const CoefficientArray& truth, double zero_tol = 0.0);

// Long-format report rows: one (method, n, kind, stat, prob, value) record
// per statistic, serialized as CSV and JSON by the CLI.
struct EvaluationRow {
  std::string method;
  long n = 0;
  std::string kind;  // empty for structure stats
  std::string stat;  // mean | quantile | sensitivity | precision | precision_defined | dense
  double prob = 0.0; // only meaningful for stat == quantile
  double value = 0.0;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  long iterations = 0;
};

}  // namespace tvvar
