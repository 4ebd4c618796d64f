#include "tvvar/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "tvvar/kernel.hpp"
#include "tvvar/spline_estimator.hpp"

namespace tvvar {

Eigen::VectorXd equispaced_est_points(long E) {
  if (E < 1) throw ConfigError("need at least one estimation point");
  Eigen::VectorXd pts(E);
  if (E == 1) {
    pts(0) = 0.0;
    return pts;
  }
  for (long e = 0; e < E; ++e) pts(e) = static_cast<double>(e) / static_cast<double>(E - 1);
  return pts;
}

TimeVaryingVarModel fit_model(const TimeSeriesDataset& data, const ModelSpec& spec) {
  if (spec.est_points.size() == 0) throw ConfigError("model spec has no estimation points");
  for (long e = 0; e < spec.est_points.size(); ++e)
    if (!(spec.est_points(e) >= 0.0 && spec.est_points(e) <= 1.0))
      throw ConfigError("estimation points must lie in [0,1]");
  if (method_is_kernel(spec.method) && !(spec.bandwidth > 0.0))
    throw ConfigError("method " + method_tag(spec.method) + " requires a positive bandwidth");

  const LaggedDesign design = standardize(build_lagged_design(data, {1}));
  switch (spec.method) {
    case Method::GLM:
    case Method::GLM_L1: {
      const VarCoefficients fit = fit_stationary_var(
          design, method_is_regularized(spec.method), spec.seed, spec.options);
      return stationary_as_model(fit, design, spec.est_points, spec.method);
    }
    case Method::KS:
    case Method::KS_L1:
      return fit_tv_var_ks(design, spec.est_points, spec.bandwidth,
                           method_is_regularized(spec.method), spec.seed, spec.options);
    case Method::GAM:
    case Method::GAM_ST:
      return fit_tv_var_gam(design, spec.est_points, spec.k, spec.method == Method::GAM_ST,
                            spec.options.exec);
  }
  throw ConfigError("unknown method");
}

std::vector<int> bootstrap_block_draw(std::uint64_t seed, int blocks) {
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, blocks - 1);
  std::vector<int> draw(static_cast<std::size_t>(blocks));
  for (auto& d : draw) d = pick(rng);
  return draw;
}

std::vector<long> bootstrap_block_bounds(long n, int blocks) {
  if (blocks < 2) throw ConfigError("block bootstrap needs at least 2 blocks");
  if (n < blocks)
    throw DataError("cannot split " + std::to_string(n) + " occasions into " +
                    std::to_string(blocks) + " blocks");
  const long base = n / blocks;
  const long rem = n % blocks;
  std::vector<long> bounds(static_cast<std::size_t>(blocks) + 1, 0);
  for (int b = 0; b < blocks; ++b)
    bounds[static_cast<std::size_t>(b) + 1] =
        bounds[static_cast<std::size_t>(b)] + base + (b < rem ? 1 : 0);
  return bounds;
}

TimeSeriesDataset bootstrap_resample(const TimeSeriesDataset& data, const std::vector<int>& draw,
                                     int blocks) {
  const long n = data.n();
  const long p = data.p();
  const std::vector<long> bounds = bootstrap_block_bounds(n, blocks);
  for (int d : draw)
    if (d < 0 || d >= blocks) throw ConfigError("block draw index out of range");

  long total = 0;
  for (int d : draw) total += bounds[static_cast<std::size_t>(d) + 1] - bounds[static_cast<std::size_t>(d)];

  // Effective day/beep markers of the source data: synthesized file-order
  // markers when absent, so the seam rule below is uniform.
  std::vector<long> src_day(static_cast<std::size_t>(n), 1), src_beep(static_cast<std::size_t>(n));
  if (data.beep) {
    src_beep = *data.beep;
    src_day = *data.day;
  } else {
    for (long i = 0; i < n; ++i) src_beep[static_cast<std::size_t>(i)] = i + 1;
  }

  TimeSeriesDataset out;
  out.values.resize(total, p);
  out.labels = data.labels;
  std::vector<long> new_beep(static_cast<std::size_t>(total)), new_day(static_cast<std::size_t>(total));

  long row = 0;
  long max_day_so_far = 0;
  long shift = 0;
  for (std::size_t q = 0; q < draw.size(); ++q) {
    const int b = draw[q];
    const long lo = bounds[static_cast<std::size_t>(b)];
    const long hi = bounds[static_cast<std::size_t>(b) + 1];
    if (q == 0) {
      shift = 0;
    } else if (draw[q] == draw[q - 1] + 1) {
      // Originally adjacent blocks drawn adjacently: keep the day axis
      // continuous so originally consecutive pairs survive the seam.
    } else {
      long min_day = src_day[static_cast<std::size_t>(lo)];
      for (long i = lo; i < hi; ++i) min_day = std::min(min_day, src_day[static_cast<std::size_t>(i)]);
      shift = max_day_so_far + 1 - min_day;
    }
    for (long i = lo; i < hi; ++i, ++row) {
      out.values.row(row) = data.values.row(i);
      new_beep[static_cast<std::size_t>(row)] = src_beep[static_cast<std::size_t>(i)];
      const long d = src_day[static_cast<std::size_t>(i)] + shift;
      new_day[static_cast<std::size_t>(row)] = d;
      max_day_so_far = std::max(max_day_so_far, d);
    }
  }
  out.beep = std::move(new_beep);
  out.day = std::move(new_day);
  return out;
}

BootstrapDistribution block_bootstrap(const TimeSeriesDataset& data, const ModelSpec& spec,
                                      long nB, int blocks,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::vector<double>& quantile_probs,
                                      ExecutionPolicy exec) {
  if (nB < 1) throw ConfigError("bootstrap needs nB >= 1");
  if (static_cast<long>(seeds.size()) != nB)
    throw ConfigError("bootstrap needs exactly one seed per replicate");
  std::vector<double> probs = quantile_probs;
  std::sort(probs.begin(), probs.end());
  for (double pr : probs)
    if (!(pr >= 0.0 && pr <= 1.0)) throw ConfigError("quantile probabilities must lie in [0,1]");
  bootstrap_block_bounds(data.n(), blocks);  // validates blocks vs n

  BootstrapDistribution dist;
  dist.nB = nB;
  dist.blocks = blocks;
  dist.seeds = seeds;
  dist.est_points = spec.est_points;
  dist.labels = data.labels;
  dist.method_tag_name = method_tag(spec.method);
  dist.samples.assign(static_cast<std::size_t>(nB), {});
  dist.intercept_samples.assign(static_cast<std::size_t>(nB), Eigen::MatrixXd());
  dist.replicate_ok.assign(static_cast<std::size_t>(nB), false);

  auto run_replicate = [&](long r) {
    const std::vector<int> draw = bootstrap_block_draw(seeds[static_cast<std::size_t>(r)], blocks);
    const TimeSeriesDataset resampled = bootstrap_resample(data, draw, blocks);
    try {
      const TimeVaryingVarModel fit = fit_model(resampled, spec);
      dist.samples[static_cast<std::size_t>(r)] = fit.coeffs;
      dist.intercept_samples[static_cast<std::size_t>(r)] = fit.intercepts;
      dist.replicate_ok[static_cast<std::size_t>(r)] = true;
    } catch (const DataError&) {
      dist.replicate_ok[static_cast<std::size_t>(r)] = false;
    } catch (const NumericalError&) {
      dist.replicate_ok[static_cast<std::size_t>(r)] = false;
    }
  };

  if (exec == ExecutionPolicy::Serial) {
    for (long r = 0; r < nB; ++r) run_replicate(r);
  } else {
    std::exception_ptr error = nullptr;
    std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic)
    for (long r = 0; r < nB; ++r) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        run_replicate(r);
      } catch (...) {
#pragma omp critical
        {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
  }

  for (long r = 0; r < nB; ++r)
    if (!dist.replicate_ok[static_cast<std::size_t>(r)]) ++dist.failed;
  if (dist.failed * 5 > nB)
    throw DataError(std::to_string(dist.failed) + " of " + std::to_string(nB) +
                    " bootstrap replicates failed to refit (more than 20%)");

  // Quantile summaries over successful replicates.
  const long p = data.p();
  const long E = spec.est_points.size();
  for (double pr : probs) {
    std::vector<Eigen::MatrixXd> q(static_cast<std::size_t>(E), Eigen::MatrixXd::Zero(p, p));
    Eigen::MatrixXd qi = Eigen::MatrixXd::Zero(p, E);
    std::vector<double> pool;
    for (long e = 0; e < E; ++e)
      for (long i = 0; i < p; ++i) {
        for (long j = 0; j < p; ++j) {
          pool.clear();
          for (long r = 0; r < nB; ++r)
            if (dist.replicate_ok[static_cast<std::size_t>(r)])
              pool.push_back(dist.samples[static_cast<std::size_t>(r)][static_cast<std::size_t>(e)](i, j));
          q[static_cast<std::size_t>(e)](i, j) = quantile_type7(pool, pr);
        }
        pool.clear();
        for (long r = 0; r < nB; ++r)
          if (dist.replicate_ok[static_cast<std::size_t>(r)])
            pool.push_back(dist.intercept_samples[static_cast<std::size_t>(r)](i, e));
        qi(i, e) = quantile_type7(pool, pr);
      }
    dist.quantiles[pr] = std::move(q);
    dist.intercept_quantiles[pr] = std::move(qi);
  }
  return dist;
}

PredictionErrorReport compute_prediction_errors(const TimeVaryingVarModel& model,
                                                const TimeSeriesDataset& data,
                                                PredictionCombine combine) {
  if (data.p() != model.p())
    throw DataError("model has p=" + std::to_string(model.p()) + " but data has p=" +
                    std::to_string(data.p()));
  const LaggedDesign design = apply_scaling(build_lagged_design(data, {1}), model.scaling);
  const long m = design.m();
  const long p = design.p();
  const long E = model.E();
  const bool has_kernel = model.bandwidth > 0.0;

  // Predicted responses row by row.
  Eigen::MatrixXd pred(m, p);
  std::vector<long> closest(static_cast<std::size_t>(m), 0);
  for (long r = 0; r < m; ++r) {
    const double t = design.response_times(r);
    long best = 0;
    for (long e = 1; e < E; ++e)
      if (std::abs(model.est_points(e) - t) < std::abs(model.est_points(best) - t)) best = e;
    closest[static_cast<std::size_t>(r)] = best;

    if (combine == PredictionCombine::Weighted && has_kernel && E > 1) {
      Eigen::VectorXd w(E);
      for (long e = 0; e < E; ++e) {
        const double d = t - model.est_points(e);
        w(e) = std::exp(-d * d / (2.0 * model.bandwidth * model.bandwidth));
      }
      w /= w.sum();
      for (long i = 0; i < p; ++i) {
        double acc = 0.0;
        for (long e = 0; e < E; ++e)
          acc += w(e) * (model.intercepts(i, e) +
                         model.coeffs[static_cast<std::size_t>(e)].row(i).dot(design.predictors.row(r)));
        pred(r, i) = acc;
      }
    } else {
      const long e = best;
      for (long i = 0; i < p; ++i)
        pred(r, i) = model.intercepts(i, e) +
                     model.coeffs[static_cast<std::size_t>(e)].row(i).dot(design.predictors.row(r));
    }
  }

  PredictionErrorReport report;
  report.labels = design.labels;
  report.combine = combine;
  report.rows_used = m;
  report.r2.resize(p);
  report.rmse.resize(p);
  for (long i = 0; i < p; ++i) {
    const Eigen::VectorXd err = design.responses.col(i) - pred.col(i);
    const double ybar = design.responses.col(i).mean();
    const double ss_tot = (design.responses.col(i).array() - ybar).square().sum();
    if (!(ss_tot > 0.0))
      throw DataError("response column '" + design.labels[static_cast<std::size_t>(i)] +
                      "' is constant; R2 undefined");
    report.rmse(i) = std::sqrt(err.squaredNorm() / static_cast<double>(m));
    report.r2(i) = 1.0 - err.squaredNorm() / ss_tot;
  }

  // Local errors around each estimation point: kernel-weighted when the
  // model has a bandwidth, otherwise uniform over rows assigned by
  // nearest estimation point.
  report.est_point_rmse.resize(E, p);
  report.est_point_r2.resize(E, p);
  for (long e = 0; e < E; ++e) {
    Eigen::VectorXd w(m);
    if (has_kernel) {
      for (long r = 0; r < m; ++r) {
        const double d = design.response_times(r) - model.est_points(e);
        w(r) = std::exp(-d * d / (2.0 * model.bandwidth * model.bandwidth));
      }
    } else {
      for (long r = 0; r < m; ++r) w(r) = closest[static_cast<std::size_t>(r)] == e ? 1.0 : 0.0;
    }
    const double wsum = w.sum();
    for (long i = 0; i < p; ++i) {
      if (!(wsum > 0.0)) {
        report.est_point_rmse(e, i) = std::numeric_limits<double>::quiet_NaN();
        report.est_point_r2(e, i) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const Eigen::VectorXd err = design.responses.col(i) - pred.col(i);
      const double mse = w.dot(err.cwiseAbs2()) / wsum;
      report.est_point_rmse(e, i) = std::sqrt(mse);
      const double ybar_w = w.dot(design.responses.col(i)) / wsum;
      const double ss_tot_w =
          w.dot((design.responses.col(i).array() - ybar_w).square().matrix());
      report.est_point_r2(e, i) =
          ss_tot_w > 0.0 ? 1.0 - w.dot(err.cwiseAbs2()) / ss_tot_w
                         : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return report;
}

}  // namespace tvvar
