#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tvvar/common.hpp"
#include "tvvar/dataset.hpp"
#include "tvvar/model.hpp"

namespace tvvar {

// Low-rank thin-plate basis in time. Columns 0 and 1 are exactly {1, t}
// (the penalty nullspace); columns 2..k-1 are penalized directions with
// S = diag(0, 0, eigenvalues ascending), so later columns are wigglier.
struct SplineBasis {
  int k = 0;
  Eigen::MatrixXd B;   // m x k, evaluated at the input times
  Eigen::MatrixXd S;   // k x k penalty, diagonal PSD
  int nullspace_dim = 2;

  Eigen::VectorXd knots;    // distinct input times
  Eigen::MatrixXd W_eval;   // |knots| x (k-2), maps radial kernel values to penalized columns

  Eigen::VectorXd row_at(double t) const;            // 1 x k basis row
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& times) const;  // rows stacked
};

int select_k(long n, long p, int k_max = 10);

SplineBasis tprs_basis(const Eigen::VectorXd& times, int k);

// Penalized least-squares state for a set of smooths sharing one response:
// minimize ||y - Z theta||^2 + sum_s lambda_s theta_s' S theta_s.
struct GamWorkspace {
  Eigen::MatrixXd Z;       // m x (k * n_smooths)
  Eigen::VectorXd y;       // m
  SplineBasis basis;       // shared by all smooths
  long n_smooths = 0;

  long m() const { return Z.rows(); }
  long K() const { return Z.cols(); }
};

// Varying-coefficient workspace for one equation: smooth 0 multiplies the
// constant 1 (time-varying intercept), smooth s>0 multiplies predictor s-1.
GamWorkspace make_gam_workspace(const LaggedDesign& design, long eq_index,
                                const SplineBasis& basis);

struct GamFitState {
  Eigen::VectorXd lambdas;      // per smooth
  Eigen::VectorXd theta;        // stacked spline coefficients
  Eigen::VectorXd edf;          // per smooth
  double edf_total = 0.0;
  double rss = 0.0;
  double gcv = 0.0;
};

// Solve the penalized system at fixed lambdas and report edf/RSS/GCV.
GamFitState solve_gam_at(const GamWorkspace& ws, const Eigen::VectorXd& lambdas);

double gcv_score(const GamWorkspace& ws, const Eigen::VectorXd& lambdas);

struct GcvOptimum {
  Eigen::VectorXd lambdas;
  double gcv = 0.0;
  bool converged = true;
  int cycles = 0;
};

// Cyclic per-smooth search on log10(lambda) over [-8, 12]: a 100-point grid
// scan followed by golden-section refinement, repeated until the GCV change
// falls below 1e-7 (at most 30 cycles).
GcvOptimum optimize_gcv(const GamWorkspace& ws);

struct GamEquationFit {
  int k = 0;
  long m = 0;
  long n_smooths = 0;
  Eigen::MatrixXd theta;          // k x n_smooths, one column per smooth
  Eigen::VectorXd lambdas;        // per smooth
  Eigen::VectorXd edf;            // per smooth
  double edf_total = 0.0;
  double gcv = 0.0;
  double sigma2 = 0.0;            // RSS / (m - edf_total)
  Eigen::MatrixXd posterior_cov;  // K x K
  SplineBasis basis;
  bool gcv_converged = true;
  std::vector<std::string> warnings;
};

GamEquationFit fit_gam_equation_at(const LaggedDesign& design, long eq_index,
                                   const SplineBasis& basis, const Eigen::VectorXd& lambdas);

GamEquationFit fit_gam_equation(const LaggedDesign& design, long eq_index,
                                const SplineBasis& basis);

struct SmoothBands {
  Eigen::MatrixXd point;  // E x n_smooths
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
};

SmoothBands credible_bands(const GamEquationFit& fit, const Eigen::VectorXd& eval_times,
                           double level = 0.95);

// k <= 0 selects k automatically via select_k on the included rows.
TimeVaryingVarModel fit_tv_var_gam(const LaggedDesign& design, const Eigen::VectorXd& est_points,
                                   int k, bool threshold,
                                   ExecutionPolicy exec = ExecutionPolicy::Parallel);

}  // namespace tvvar
