#include "tvvar/penalized_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tvvar {

namespace {

constexpr double kCdTol = 1e-7;

struct CenteredProblem {
  Eigen::MatrixXd Xc;      // weighted-mean-centered predictors
  Eigen::VectorXd yc;      // weighted-mean-centered response
  Eigen::VectorXd xmean;   // weighted predictor means
  double ymean = 0.0;      // weighted response mean
  Eigen::MatrixXd G;       // (2/m) Xc' W Xc
  Eigen::VectorXd c;       // (2/m) Xc' W yc
};

CenteredProblem center(const RegressionProblem& p) {
  CenteredProblem cp;
  const double wsum = p.w.sum();
  cp.xmean = (p.X.transpose() * p.w) / wsum;
  cp.ymean = p.y.dot(p.w) / wsum;
  cp.Xc = p.X.rowwise() - cp.xmean.transpose();
  cp.yc = p.y.array() - cp.ymean;
  const double scale = 2.0 / static_cast<double>(p.m());
  const Eigen::MatrixXd WX = p.w.asDiagonal() * cp.Xc;
  cp.G = scale * (cp.Xc.transpose() * WX);
  cp.c = scale * (WX.transpose() * cp.yc);
  return cp;
}

double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

// One full coordinate-descent pass; returns the max absolute coefficient change.
double cd_sweep(const CenteredProblem& cp, double lambda, Eigen::VectorXd& beta,
                Eigen::VectorXd& u /* = G beta */) {
  double max_delta = 0.0;
  const long q = beta.size();
  for (long k = 0; k < q; ++k) {
    const double gkk = cp.G(k, k);
    const double old = beta(k);
    double next;
    if (gkk <= 0.0) {
      next = 0.0;  // zero weighted variance: no information in this coordinate
    } else {
      next = soft_threshold(cp.c(k) - u(k) + gkk * old, lambda) / gkk;
    }
    const double delta = next - old;
    if (delta != 0.0) {
      beta(k) = next;
      u += cp.G.col(k) * delta;
      max_delta = std::max(max_delta, std::abs(delta));
    }
  }
  return max_delta;
}

RegressionSolution assemble(const RegressionProblem& p, const CenteredProblem& cp,
                            const Eigen::VectorXd& beta, double lambda) {
  RegressionSolution s;
  s.slopes = beta;
  s.intercept = cp.ymean - cp.xmean.dot(beta);
  s.lambda = lambda;
  s.objective = lasso_objective(p, s);
  return s;
}

}  // namespace

void RegressionProblem::validate() const {
  if (m() < 1) throw DataError("regression problem has no rows");
  if (q() < 1) throw DataError("regression problem has no predictors");
  if (y.size() != m() || w.size() != m()) throw DataError("regression problem dimensions inconsistent");
  if (!X.allFinite() || !y.allFinite() || !w.allFinite())
    throw DataError("regression problem contains non-finite values");
  if (w.minCoeff() < 0.0) throw DataError("observation weights must be nonnegative");
  if (!(w.sum() > 0.0)) throw DataError("observation weights sum to zero");
  if (penalize_intercept) throw ConfigError("intercept penalization is not supported");
}

RegressionSolution weighted_least_squares(const RegressionProblem& p) {
  p.validate();
  const long m = p.m();
  const long q = p.q();
  Eigen::MatrixXd Z(m, q + 1);
  Z.col(0).setOnes();
  Z.rightCols(q) = p.X;
  const Eigen::VectorXd sw = p.w.array().sqrt();
  const Eigen::MatrixXd A = sw.asDiagonal() * Z;
  const Eigen::VectorXd b = sw.asDiagonal() * p.y;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12))
    throw NumericalError("weighted least squares system is singular or ill-conditioned "
                         "(condition estimate " + std::to_string(cond) + ")");
  const Eigen::VectorXd coef = svd.solve(b);

  RegressionSolution s;
  s.intercept = coef(0);
  s.slopes = coef.tail(q);
  s.lambda = 0.0;
  s.objective = lasso_objective(p, s);
  return s;
}

RegressionSolution weighted_lasso(const RegressionProblem& p, double lambda,
                                  std::vector<double>* objective_trace, int max_sweeps) {
  p.validate();
  if (lambda < 0.0) throw ConfigError("lasso penalty must be nonnegative");

  const CenteredProblem cp = center(p);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p.q());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p.q());
  if (objective_trace) objective_trace->clear();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double max_delta = cd_sweep(cp, lambda, beta, u);
    if (objective_trace)
      objective_trace->push_back(lasso_objective(p, assemble(p, cp, beta, lambda)));
    if (max_delta < kCdTol) return assemble(p, cp, beta, lambda);
  }
  throw NumericalError("coordinate descent did not converge within " +
                       std::to_string(max_sweeps) + " sweeps");
}

std::vector<double> lambda_path(const RegressionProblem& p, int n_lambda) {
  p.validate();
  if (n_lambda < 2) throw ConfigError("lambda path needs at least 2 points");
  const CenteredProblem cp = center(p);
  const double lambda_max = cp.c.cwiseAbs().maxCoeff();
  if (!(lambda_max > 0.0))
    throw DataError("degenerate response: all-zero weighted covariance with predictors");
  const double ratio = std::pow(1e-4, 1.0 / static_cast<double>(n_lambda - 1));
  std::vector<double> path(n_lambda);
  double v = lambda_max;
  for (int i = 0; i < n_lambda; ++i) {
    path[i] = v;
    v *= ratio;
  }
  return path;
}

CrossValidationResult cross_validate_lambda(const RegressionProblem& p, int folds,
                                            std::uint64_t seed, int n_lambda) {
  p.validate();
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  const long m = p.m();
  if (m < folds)
    throw DataError("cross-validation needs at least as many rows (" + std::to_string(m) +
                    ") as folds (" + std::to_string(folds) + ")");

  const std::vector<double> path = lambda_path(p, n_lambda);
  const int L = static_cast<int>(path.size());

  std::vector<long> order(m);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(m);
  for (long i = 0; i < m; ++i) fold_of[order[i]] = static_cast<int>(i % folds);

  std::vector<double> err_sum(L, 0.0), weight_sum(L, 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<long> train, test;
    for (long i = 0; i < m; ++i) (fold_of[i] == f ? test : train).push_back(i);
    double wtest = 0.0, wtrain = 0.0;
    for (long i : test) wtest += p.w(i);
    for (long i : train) wtrain += p.w(i);
    if (!(wtest > 0.0) || !(wtrain > 0.0))
      throw DataError("cross-validation fold " + std::to_string(f + 1) + " has zero total weight");

    RegressionProblem sub;
    sub.X.resize(static_cast<long>(train.size()), p.q());
    sub.y.resize(static_cast<long>(train.size()));
    sub.w.resize(static_cast<long>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      sub.X.row(static_cast<long>(r)) = p.X.row(train[r]);
      sub.y(static_cast<long>(r)) = p.y(train[r]);
      sub.w(static_cast<long>(r)) = p.w(train[r]);
    }

    const CenteredProblem cp = center(sub);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(sub.q());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(sub.q());
    for (int li = 0; li < L; ++li) {
      // Warm start from the previous (larger) lambda.
      bool converged = false;
      for (int sweep = 0; sweep < 10000; ++sweep) {
        if (cd_sweep(cp, path[li], beta, u) < kCdTol) {
          converged = true;
          break;
        }
      }
      if (!converged)
        throw NumericalError("coordinate descent did not converge during cross-validation");
      const double intercept = cp.ymean - cp.xmean.dot(beta);
      for (long i : test) {
        const double pred = intercept + p.X.row(i).dot(beta);
        const double r = p.y(i) - pred;
        err_sum[li] += p.w(i) * r * r;
      }
      weight_sum[li] += wtest;
    }
  }

  CrossValidationResult out;
  out.path = path;
  out.cv_errors.resize(L);
  for (int li = 0; li < L; ++li) out.cv_errors[li] = err_sum[li] / weight_sum[li];
  const auto it = std::min_element(out.cv_errors.begin(), out.cv_errors.end());
  out.lambda_hat = path[static_cast<std::size_t>(it - out.cv_errors.begin())];
  return out;
}

double lasso_objective(const RegressionProblem& p, const RegressionSolution& s) {
  const Eigen::VectorXd r = p.y.array() - s.intercept - (p.X * s.slopes).array();
  const double loss = r.array().square().matrix().dot(p.w) / static_cast<double>(p.m());
  return loss + s.lambda * s.slopes.cwiseAbs().sum();
}

double kkt_violation(const RegressionProblem& p, const RegressionSolution& s, double lambda) {
  const Eigen::VectorXd r = p.y.array() - s.intercept - (p.X * s.slopes).array();
  const Eigen::VectorXd wr = p.w.cwiseProduct(r);
  const double scale = 2.0 / static_cast<double>(p.m());
  double viol = std::abs(scale * wr.sum());  // intercept gradient
  for (long k = 0; k < p.q(); ++k) {
    const double grad = -scale * p.X.col(k).dot(wr);
    if (s.slopes(k) != 0.0) {
      viol = std::max(viol, std::abs(grad + lambda * (s.slopes(k) > 0.0 ? 1.0 : -1.0)));
    } else {
      viol = std::max(viol, std::max(0.0, std::abs(grad) - lambda));
    }
  }
  return viol;
}

}  // namespace tvvar
