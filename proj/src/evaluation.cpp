#include "tvvar/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace tvvar {

namespace {

// Undo the column standardization: a slope on standardized data maps to the
// generative scale via sd(response) / sd(predictor).
double generative_scale_coeff(const TimeVaryingVarModel& model, long i, long j, double value) {
  if (model.scaling.identity) return value;
  return value * model.scaling.response_sd(i) / model.scaling.predictor_sd(j);
}

}  // namespace

std::vector<Eigen::MatrixXd> absolute_error(const TimeVaryingVarModel& model,
                                            const CoefficientArray& truth) {
  const long p = model.p();
  if (p != truth.p())
    throw DataError("model has p=" + std::to_string(p) + " but truth has p=" +
                    std::to_string(truth.p()));
  const long E = model.E();

  std::vector<Eigen::MatrixXd> err(static_cast<std::size_t>(E));
  for (long e = 0; e < E; ++e) {
    const Eigen::MatrixXd truth_e = truth.at_time(model.est_points(e));
    Eigen::MatrixXd slice(p, p);
    for (long i = 0; i < p; ++i)
      for (long j = 0; j < p; ++j) {
        const double est =
            generative_scale_coeff(model, i, j, model.coeffs[static_cast<std::size_t>(e)](i, j));
        slice(i, j) = std::abs(est - truth_e(i, j));
      }
    err[static_cast<std::size_t>(e)] = slice;
  }
  return err;
}

std::vector<KindErrorStats> aggregate_errors(const std::vector<ErrorSample>& iterations,
                                             const std::vector<double>& probs) {
  if (iterations.empty()) throw DataError("no iterations to aggregate");
  const long E = static_cast<long>(iterations.front().abs_err.size());
  for (const auto& it : iterations)
    if (static_cast<long>(it.abs_err.size()) != E)
      throw DataError("iterations disagree on the number of estimation points");

  static const std::array<const char*, 5> categories = {"constant", "linear", "sigmoid", "step",
                                                        "zero"};
  std::vector<KindErrorStats> out;
  for (const char* cat : categories) {
    // values[e] pools |error| at estimation point e over iterations and
    // parameters of this category.
    std::vector<std::vector<double>> values(static_cast<std::size_t>(E));
    long count = 0;
    for (const auto& iter : iterations) {
      const long p = static_cast<long>(iter.specs.size());
      for (long i = 0; i < p; ++i)
        for (long j = 0; j < p; ++j) {
          const auto& spec = iter.specs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          if (fn_kind_category(spec.kind) != cat) continue;
          ++count;
          for (long e = 0; e < E; ++e)
            values[static_cast<std::size_t>(e)].push_back(
                iter.abs_err[static_cast<std::size_t>(e)](i, j));
        }
    }
    if (count == 0) continue;

    KindErrorStats stats;
    stats.kind = cat;
    stats.n_parameters = count;
    double mean_sum = 0.0;
    std::map<double, double> qsum;
    for (double pr : probs) qsum[pr] = 0.0;
    for (long e = 0; e < E; ++e) {
      const auto& pool = values[static_cast<std::size_t>(e)];
      double s = 0.0;
      for (double v : pool) s += v;
      mean_sum += s / static_cast<double>(pool.size());
      for (double pr : probs) qsum[pr] += quantile_type7(pool, pr);
    }
    stats.mean = mean_sum / static_cast<double>(E);
    for (double pr : probs) stats.quantiles[pr] = qsum[pr] / static_cast<double>(E);
    out.push_back(std::move(stats));
  }
  if (out.empty()) throw DataError("no parameters in any error category");
  return out;
}

StructureRecovery structure_recovery(const TimeVaryingVarModel& model,
                                     const CoefficientArray& truth, double zero_tol) {
  const long p = model.p();
  if (p != truth.p()) throw DataError("model/truth dimension mismatch");
  if (zero_tol < 0.0) throw ConfigError("zero tolerance must be nonnegative");

  StructureRecovery out;
  out.dense_method = !(model.method == Method::GLM_L1 || model.method == Method::KS_L1 ||
                       model.method == Method::GAM_ST);
  for (long i = 0; i < p; ++i)
    for (long j = 0; j < p; ++j) {
      bool est_nonzero = false;
      for (long e = 0; e < model.E() && !est_nonzero; ++e) {
        const double v =
            generative_scale_coeff(model, i, j, model.coeffs[static_cast<std::size_t>(e)](i, j));
        if (std::abs(v) > zero_tol) est_nonzero = true;
      }
      const bool true_nonzero =
          truth.specs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].kind != FnKind::Zero;
      if (true_nonzero && est_nonzero) ++out.tp;
      else if (true_nonzero && !est_nonzero) ++out.fn;
      else if (!true_nonzero && est_nonzero) ++out.fp;
      else ++out.tn;
    }

  out.sensitivity = out.tp + out.fn > 0
                        ? static_cast<double>(out.tp) / static_cast<double>(out.tp + out.fn)
                        : 1.0;
  if (out.tp + out.fp > 0) {
    out.precision = static_cast<double>(out.tp) / static_cast<double>(out.tp + out.fp);
    out.precision_defined = true;
  } else {
    out.precision = 0.0;
    out.precision_defined = false;
  }
  return out;
}

}  // namespace tvvar
