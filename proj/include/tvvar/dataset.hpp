#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "tvvar/common.hpp"

namespace tvvar {

// Measurement occasions in file order. Missing cells are NaN.
struct TimeSeriesDataset {
  Eigen::MatrixXd values;  // n x p
  std::vector<std::string> labels;
  std::optional<Eigen::VectorXd> time_norm;       // non-decreasing, in [0,1]
  std::optional<std::vector<long>> beep;          // positive
  std::optional<std::vector<long>> day;           // positive

  long n() const { return values.rows(); }
  long p() const { return values.cols(); }

  // Timestamps for every occasion: `time_norm` verbatim when present,
  // otherwise equally spaced on [0,1] over the n occasions.
  Eigen::VectorXd occasion_times() const;

  void validate() const;
};

struct ColumnRoles {
  std::vector<std::string> value_columns;  // empty = every unassigned column
  std::optional<std::string> time_column;
  std::optional<std::string> beep_column;
  std::optional<std::string> day_column;
};

struct ColumnScaling {
  bool identity = true;
  Eigen::VectorXd predictor_mean, predictor_sd;
  Eigen::VectorXd response_mean, response_sd;
};

// Rows are (t-1, t) occasion pairs that passed the consecutiveness rule.
struct LaggedDesign {
  Eigen::MatrixXd predictors;       // m x p, values at t-1
  Eigen::MatrixXd responses;        // m x p, values at t
  Eigen::VectorXd response_times;   // m, normalized timestamps of the response occasions
  std::vector<long> response_occasions;  // m, original row index of each response
  long included_rows = 0;           // m
  long total_rows = 0;              // n - 1 candidate pairs
  std::vector<std::string> labels;
  ColumnScaling scaling;

  long m() const { return predictors.rows(); }
  long p() const { return predictors.cols(); }
};

TimeSeriesDataset load_csv(const std::string& path, const ColumnRoles& roles);

void write_csv(const TimeSeriesDataset& data, const std::string& path,
               const std::vector<std::string>& meta_lines);

LaggedDesign build_lagged_design(const TimeSeriesDataset& data, const std::vector<int>& lags);

LaggedDesign standardize(const LaggedDesign& design);

// Standardize with a previously estimated scaling (e.g. the one stored in a
// fitted model) instead of re-estimating it from this design.
LaggedDesign apply_scaling(const LaggedDesign& design, const ColumnScaling& scaling);

}  // namespace tvvar
