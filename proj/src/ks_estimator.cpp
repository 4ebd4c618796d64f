#include "tvvar/ks_estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "tvvar/kernel.hpp"
#include "tvvar/penalized_regression.hpp"

namespace tvvar {

namespace {

// Fit one equation with the given observation weights. Regularized fits pick
// lambda by seeded cross-validation, then solve at the selected value.
RegressionSolution fit_equation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, bool regularized, std::uint64_t seed,
                                const FitOptions& opt) {
  RegressionProblem prob{X, y, w, false};
  if (!regularized) return weighted_least_squares(prob);
  const CrossValidationResult cv = cross_validate_lambda(prob, opt.cv_folds, seed, opt.n_lambda);
  return weighted_lasso(prob, cv.lambda_hat);
}

// Run `count` independent tasks, serially or with OpenMP. Each task writes to
// its own output slot, so the schedule cannot affect results. Exceptions are
// captured and rethrown once on the calling thread.
template <typename Fn>
void run_tasks(long count, ExecutionPolicy exec, Fn&& task) {
  if (exec == ExecutionPolicy::Serial) {
    for (long i = 0; i < count; ++i) task(i);
    return;
  }
  std::exception_ptr error = nullptr;
  std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      task(i);
    } catch (...) {
#pragma omp critical
      {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

VarCoefficients fit_stationary_var(const LaggedDesign& design, bool regularized,
                                   std::uint64_t seed, const FitOptions& opt) {
  const long m = design.m();
  const long p = design.p();
  if (!regularized && m <= p + 1)
    throw DataError("stationary fit needs more than p+1 = " + std::to_string(p + 1) +
                    " included rows; have " + std::to_string(m));
  if (regularized && m < opt.cv_folds)
    throw DataError("regularized stationary fit needs at least " + std::to_string(opt.cv_folds) +
                    " included rows for cross-validation; have " + std::to_string(m));

  VarCoefficients out;
  out.intercepts.resize(p);
  out.coeffs.resize(p, p);
  if (regularized) out.lambda.assign(p, 0.0);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(m);

  run_tasks(p, opt.exec, [&](long i) {
    const RegressionSolution s =
        fit_equation(design.predictors, design.responses.col(i), w, regularized,
                     mix_seed(seed, static_cast<std::uint64_t>(i)), opt);
    out.intercepts(i) = s.intercept;
    out.coeffs.row(i) = s.slopes.transpose();
    if (regularized) out.lambda[static_cast<std::size_t>(i)] = s.lambda;
  });
  return out;
}

TimeVaryingVarModel fit_tv_var_ks(const LaggedDesign& design, const Eigen::VectorXd& est_points,
                                  double bandwidth, bool regularized, std::uint64_t seed,
                                  const FitOptions& opt) {
  if (est_points.size() == 0) throw ConfigError("at least one estimation point is required");
  if (!(bandwidth > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  const long E = est_points.size();
  const long p = design.p();

  std::vector<KernelWeights> weights(static_cast<std::size_t>(E));
  for (long e = 0; e < E; ++e) {
    weights[static_cast<std::size_t>(e)] =
        kernel_weights(est_points(e), design.response_times, bandwidth);
    if (!regularized && !(weights[static_cast<std::size_t>(e)].n_util > static_cast<double>(p + 1)))
      throw DataError("effective sample size " +
                      std::to_string(weights[static_cast<std::size_t>(e)].n_util) +
                      " at estimation point " + std::to_string(est_points(e)) +
                      " does not exceed p+1 = " + std::to_string(p + 1) +
                      "; increase the bandwidth or regularize");
  }

  TimeVaryingVarModel model;
  model.method = regularized ? Method::KS_L1 : Method::KS;
  model.est_points = est_points;
  model.bandwidth = bandwidth;
  model.labels = design.labels;
  model.scaling = design.scaling;
  model.intercepts.resize(p, E);
  model.coeffs.assign(static_cast<std::size_t>(E), Eigen::MatrixXd::Zero(p, p));
  if (regularized) model.lambda.resize(p, E);

  run_tasks(E * p, opt.exec, [&](long task) {
    const long e = task / p;
    const long i = task % p;
    // Seed depends on the estimation point's value, not its slot, so
    // permuting est_points permutes slices without changing them.
    const std::uint64_t task_seed =
        mix_seed(mix_seed(seed, est_points(e)), static_cast<std::uint64_t>(i));
    const RegressionSolution s =
        fit_equation(design.predictors, design.responses.col(i),
                     weights[static_cast<std::size_t>(e)].weights, regularized, task_seed, opt);
    model.intercepts(i, e) = s.intercept;
    model.coeffs[static_cast<std::size_t>(e)].row(i) = s.slopes.transpose();
    if (regularized) model.lambda(i, e) = s.lambda;
  });
  return model;
}

TimeVaryingVarModel stationary_as_model(const VarCoefficients& fit, const LaggedDesign& design,
                                        const Eigen::VectorXd& est_points, Method method) {
  if (method_is_time_varying(method)) throw ConfigError("expected a stationary method tag");
  const long E = est_points.size();
  const long p = fit.intercepts.size();
  TimeVaryingVarModel model;
  model.method = method;
  model.est_points = est_points;
  model.labels = design.labels;
  model.scaling = design.scaling;
  model.intercepts.resize(p, E);
  model.coeffs.assign(static_cast<std::size_t>(E), fit.coeffs);
  if (!fit.lambda.empty()) model.lambda.resize(p, E);
  for (long e = 0; e < E; ++e) {
    model.intercepts.col(e) = fit.intercepts;
    if (!fit.lambda.empty())
      for (long i = 0; i < p; ++i) model.lambda(i, e) = fit.lambda[static_cast<std::size_t>(i)];
  }
  return model;
}

std::vector<double> default_bandwidth_grid() {
  return {0.01, 0.045, 0.08, 0.115, 0.185, 0.22, 0.225, 0.29, 0.325, 0.430, 0.465, 0.5};
}

BandwidthSelection select_bandwidth(const LaggedDesign& design,
                                    const std::vector<double>& candidates, int folds,
                                    int foldsize, bool regularized, std::uint64_t seed,
                                    const FitOptions& opt) {
  if (candidates.empty()) throw ConfigError("bandwidth candidate list is empty");
  for (double b : candidates)
    if (!(b > 0.0)) throw ConfigError("bandwidth candidates must be positive");
  if (folds < 1) throw ConfigError("bandwidth selection needs at least 1 fold");

  const long m = design.m();
  const long p = design.p();
  const long n_occasions = design.total_rows + 1;
  if (foldsize <= 0)
    foldsize = static_cast<int>(
        std::ceil(std::pow(0.2 * static_cast<double>(n_occasions), 2.0 / 3.0)));
  if (foldsize < 2) throw ConfigError("bandwidth selection foldsize must be at least 2");
  if (foldsize > m)
    throw DataError("bandwidth selection foldsize " + std::to_string(foldsize) +
                    " exceeds included rows " + std::to_string(m));

  // Stratified test occasions per fold: one draw from each of `foldsize`
  // equal spans of the included rows.
  std::vector<std::vector<long>> fold_tests(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(f)));
    auto& rows = fold_tests[static_cast<std::size_t>(f)];
    for (int s = 0; s < foldsize; ++s) {
      const long lo = (static_cast<long>(s) * m) / foldsize;
      const long hi = (static_cast<long>(s + 1) * m) / foldsize;
      std::uniform_int_distribution<long> pick(lo, hi - 1);
      rows.push_back(pick(rng));
    }
  }

  const std::size_t C = candidates.size();
  std::vector<double> total_abs_err(C, 0.0);
  std::vector<char> usable(C, 1);

  run_tasks(static_cast<long>(C), opt.exec, [&](long ci) {
    const double b = candidates[static_cast<std::size_t>(ci)];
    double total = 0.0;
    try {
      for (int f = 0; f < folds; ++f) {
        const auto& tests = fold_tests[static_cast<std::size_t>(f)];
        std::vector<char> is_test(static_cast<std::size_t>(m), 0);
        for (long r : tests) is_test[static_cast<std::size_t>(r)] = 1;
        std::vector<long> train;
        train.reserve(static_cast<std::size_t>(m));
        for (long r = 0; r < m; ++r)
          if (!is_test[static_cast<std::size_t>(r)]) train.push_back(r);

        Eigen::MatrixXd Xtr(static_cast<long>(train.size()), p);
        Eigen::MatrixXd Ytr(static_cast<long>(train.size()), p);
        Eigen::VectorXd ttr(static_cast<long>(train.size()));
        for (std::size_t r = 0; r < train.size(); ++r) {
          Xtr.row(static_cast<long>(r)) = design.predictors.row(train[r]);
          Ytr.row(static_cast<long>(r)) = design.responses.row(train[r]);
          ttr(static_cast<long>(r)) = design.response_times(train[r]);
        }

        for (long r : tests) {
          const double te = design.response_times(r);
          const KernelWeights kw = kernel_weights(te, ttr, b);
          if (!regularized && !(kw.n_util > static_cast<double>(p + 1)))
            throw DataError("insufficient effective sample size");
          for (long i = 0; i < p; ++i) {
            const std::uint64_t task_seed = mix_seed(
                mix_seed(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(f)), te),
                         static_cast<std::uint64_t>(i)),
                std::uint64_t{0xb4d5eed});
            const RegressionSolution s =
                fit_equation(Xtr, Ytr.col(i), kw.weights, regularized, task_seed, opt);
            const double pred = s.intercept + design.predictors.row(r).dot(s.slopes);
            total += std::abs(design.responses(r, i) - pred);
          }
        }
      }
      total_abs_err[static_cast<std::size_t>(ci)] = total;
    } catch (const DataError&) {
      usable[static_cast<std::size_t>(ci)] = 0;
    } catch (const NumericalError&) {
      usable[static_cast<std::size_t>(ci)] = 0;
    }
  });

  BandwidthSelection out;
  out.candidates = candidates;
  out.folds = folds;
  out.foldsize = foldsize;
  out.mean_abs_error.assign(C, std::numeric_limits<double>::infinity());
  const double denom = static_cast<double>(folds) * foldsize * static_cast<double>(p);
  std::size_t best = C;
  for (std::size_t ci = 0; ci < C; ++ci) {
    if (!usable[ci]) continue;
    out.mean_abs_error[ci] = total_abs_err[ci] / denom;
    if (best == C || out.mean_abs_error[ci] < out.mean_abs_error[best]) best = ci;
  }
  if (best == C)
    throw NumericalError("no bandwidth candidate produced a usable fit; "
                         "widen the grid or regularize");
  out.b_hat = candidates[best];
  out.b_hat_on_grid_edge = (best == 0 || best + 1 == C);
  return out;
}

}  // namespace tvvar
