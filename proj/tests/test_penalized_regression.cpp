#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "tvvar/penalized_regression.hpp"

using namespace tvvar;

namespace {

RegressionProblem random_problem(std::mt19937_64& rng, long m, long q, bool weighted = true) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  RegressionProblem p;
  p.X.resize(m, q);
  p.y.resize(m);
  p.w.resize(m);
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < q; ++j) p.X(i, j) = gauss(rng);
    p.y(i) = gauss(rng);
    p.w(i) = weighted ? unif(rng) : 1.0;
  }
  return p;
}

// Exact lasso solver for tiny q: enumerate every sign pattern, solve the
// stationarity system for (intercept, active slopes), and keep the feasible
// candidate with the smallest objective. Convexity makes the KKT point the
// global minimum, so this is an independent ground truth.
RegressionSolution sign_enumeration_oracle(const RegressionProblem& p, double lambda) {
  const long m = p.m(), q = p.q();
  const double wsum = p.w.sum();
  RegressionSolution best;
  best.lambda = lambda;
  best.objective = std::numeric_limits<double>::infinity();

  std::vector<int> signs(static_cast<std::size_t>(q), -1);
  const long patterns = static_cast<long>(std::pow(3.0, static_cast<double>(q)));
  for (long code = 0; code < patterns; ++code) {
    long rest = code;
    std::vector<long> active;
    for (long k = 0; k < q; ++k) {
      signs[static_cast<std::size_t>(k)] = static_cast<int>(rest % 3) - 1;
      rest /= 3;
      if (signs[static_cast<std::size_t>(k)] != 0) active.push_back(k);
    }
    const long a = static_cast<long>(active.size());

    Eigen::MatrixXd A(a + 1, a + 1);
    Eigen::VectorXd rhs(a + 1);
    A(0, 0) = wsum;
    rhs(0) = p.w.dot(p.y);
    for (long u = 0; u < a; ++u) {
      const auto xu = p.X.col(active[static_cast<std::size_t>(u)]);
      A(0, u + 1) = p.w.dot(xu);
      A(u + 1, 0) = A(0, u + 1);
      rhs(u + 1) = (p.w.array() * xu.array() * p.y.array()).sum() -
                   0.5 * static_cast<double>(m) * lambda *
                       signs[static_cast<std::size_t>(active[static_cast<std::size_t>(u)])];
      for (long v = 0; v < a; ++v)
        A(u + 1, v + 1) = (p.w.array() * xu.array() *
                           p.X.col(active[static_cast<std::size_t>(v)]).array())
                              .sum();
    }
    const Eigen::VectorXd sol = A.fullPivLu().solve(rhs);

    Eigen::VectorXd slopes = Eigen::VectorXd::Zero(q);
    bool feasible = true;
    for (long u = 0; u < a; ++u) {
      const long k = active[static_cast<std::size_t>(u)];
      slopes(k) = sol(u + 1);
      if (slopes(k) * signs[static_cast<std::size_t>(k)] <= 0.0) feasible = false;
    }
    if (!feasible) continue;
    const double intercept = sol(0);
    const Eigen::VectorXd resid = p.y.array() - intercept - (p.X * slopes).array();
    for (long k = 0; k < q && feasible; ++k) {
      if (slopes(k) != 0.0) continue;
      const double grad = -2.0 / static_cast<double>(m) *
                          (p.w.array() * p.X.col(k).array() * resid.array()).sum();
      if (std::abs(grad) > lambda * (1.0 + 1e-9) + 1e-12) feasible = false;
    }
    if (!feasible) continue;

    const double obj = (p.w.array() * resid.array().square()).sum() / static_cast<double>(m) +
                       lambda * slopes.lpNorm<1>();
    if (obj < best.objective) {
      best.objective = obj;
      best.intercept = intercept;
      best.slopes = slopes;
    }
  }
  return best;
}

double wls_gradient_norm(const RegressionProblem& p, const RegressionSolution& s) {
  const Eigen::VectorXd resid = p.y.array() - s.intercept - (p.X * s.slopes).array();
  double worst = std::abs(p.w.dot(resid));
  for (long k = 0; k < p.q(); ++k)
    worst = std::max(worst, std::abs((p.w.array() * p.X.col(k).array() * resid.array()).sum()));
  return worst;
}

}  // namespace

TEST_CASE("weighted least squares recovers an exact line") {
  RegressionProblem p;
  p.X.resize(3, 1);
  p.X << 1, 2, 3;
  p.y.resize(3);
  p.y << 2, 4, 6;
  p.w = Eigen::VectorXd::Ones(3);
  const auto s = weighted_least_squares(p);
  CHECK(s.intercept == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.slopes(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("uniform weights reproduce unweighted least squares") {
  std::mt19937_64 rng(1);
  auto p = random_problem(rng, 25, 3, false);
  const auto unit = weighted_least_squares(p);
  p.w = Eigen::VectorXd::Constant(25, 0.37);
  const auto scaled = weighted_least_squares(p);
  CHECK(std::abs(unit.intercept - scaled.intercept) <= 1e-10);
  CHECK((unit.slopes - scaled.slopes).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("weighted least squares matches a full-pivot normal-equations oracle") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = random_problem(rng, 30, 3);
    const auto s = weighted_least_squares(p);

    Eigen::MatrixXd Z(30, 4);
    Z.col(0).setOnes();
    Z.rightCols(3) = p.X;
    const Eigen::MatrixXd G = Z.transpose() * p.w.asDiagonal() * Z;
    const Eigen::VectorXd b = Z.transpose() * p.w.asDiagonal() * p.y;
    const Eigen::VectorXd oracle = G.fullPivLu().solve(b);

    CHECK(std::abs(s.intercept - oracle(0)) <= 1e-8);
    CHECK((s.slopes - oracle.tail(3)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(wls_gradient_norm(p, s) <= 1e-8);
  }
}

TEST_CASE("singular designs raise a numerical error") {
  RegressionProblem p;
  p.X.resize(4, 2);
  p.X << 1, 2, 2, 4, 3, 6, 4, 8;  // second column is 2x the first
  p.y.resize(4);
  p.y << 1, 2, 3, 4;
  p.w = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(weighted_least_squares(p), NumericalError);
}

TEST_CASE("lasso at lambda 0 equals weighted least squares") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = random_problem(rng, 20, 3);
    const auto wls = weighted_least_squares(p);
    const auto lasso = weighted_lasso(p, 0.0);
    CHECK(std::abs(wls.intercept - lasso.intercept) <= 1e-6);
    CHECK((wls.slopes - lasso.slopes).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("orthonormal design reduces to closed-form soft thresholding") {
  // Columns of X orthogonal with mean zero; unit weights. The lasso update
  // then solves independently per coordinate: beta_k = S(ols_k * g_k, lambda) / g_k
  // with g_k = (2/m) sum x_k^2.
  const long m = 8;
  Eigen::MatrixXd X(m, 2);
  X.col(0) << 1, -1, 1, -1, 1, -1, 1, -1;
  X.col(1) << 1, 1, -1, -1, 1, 1, -1, -1;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  RegressionProblem p;
  p.X = X;
  p.y.resize(m);
  for (long i = 0; i < m; ++i) p.y(i) = gauss(rng);
  p.w = Eigen::VectorXd::Ones(m);

  for (double lambda : {0.01, 0.1, 0.5, 2.0}) {
    const auto s = weighted_lasso(p, lambda);
    const double ybar = p.y.mean();
    for (long k = 0; k < 2; ++k) {
      const double gk = 2.0 / m * X.col(k).squaredNorm();
      const double ck = 2.0 / m * X.col(k).dot(p.y - Eigen::VectorXd::Constant(m, ybar));
      const double soft = std::abs(ck) <= lambda ? 0.0
                                                 : (ck > 0 ? (ck - lambda) : (ck + lambda)) / gk;
      CHECK(std::abs(s.slopes(k) - soft) <= 1e-6);
    }
    CHECK(std::abs(s.intercept - ybar) <= 1e-9);
  }
}

TEST_CASE("lambda at or above lambda_max zeroes every slope") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = random_problem(rng, 15, 3);
    const double lmax = lambda_path(p, 10).front();
    for (double factor : {1.0, 1.5, 10.0}) {
      const auto s = weighted_lasso(p, lmax * factor);
      CHECK(s.slopes.cwiseAbs().maxCoeff() == 0.0);
    }
    const auto just_below = weighted_lasso(p, lmax * 0.99);
    CHECK(just_below.slopes.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("kkt certificate holds at returned solutions") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto p = random_problem(rng, 5 + static_cast<long>(rng() % 15), 1 + static_cast<long>(rng() % 4));
    const double lambda = lam(rng);
    const auto s = weighted_lasso(p, lambda);
    CHECK(kkt_violation(p, s, lambda) <= 1e-6);
    CHECK(std::abs(s.objective - lasso_objective(p, s)) <= 1e-8);
  }
}

TEST_CASE("coordinate descent objective never increases across sweeps") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = random_problem(rng, 25, 4);
    std::vector<double> trace;
    weighted_lasso(p, 0.05, &trace);
    REQUIRE(!trace.empty());
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
  }
}

TEST_CASE("lasso matches the sign-enumeration oracle on tiny problems") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lam(0.001, 0.8);
  for (int rep = 0; rep < 60; ++rep) {
    const long m = 4 + static_cast<long>(rng() % 9);   // up to 12
    const long q = 1 + static_cast<long>(rng() % 3);   // up to 3
    const auto p = random_problem(rng, m, q);
    const double lambda = lam(rng);
    const auto mine = weighted_lasso(p, lambda);
    const auto oracle = sign_enumeration_oracle(p, lambda);
    REQUIRE(std::isfinite(oracle.objective));
    CHECK(std::abs(mine.intercept - oracle.intercept) <= 1e-4);
    CHECK((mine.slopes - oracle.slopes).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("lambda path is geometric, decreasing, and spans the right range") {
  std::mt19937_64 rng(9);
  const auto p = random_problem(rng, 30, 4);
  const auto path = lambda_path(p, 50);
  REQUIRE(path.size() == 50);
  const double ratio = path[1] / path[0];
  for (std::size_t i = 1; i < path.size(); ++i) {
    CHECK(path[i] < path[i - 1]);
    CHECK(std::abs(path[i] / path[i - 1] - ratio) <= 1e-12);
  }
  CHECK(path.back() == doctest::Approx(path.front() * 1e-4).epsilon(1e-10));

  const auto at_top = weighted_lasso(p, path.front());
  CHECK(at_top.slopes.cwiseAbs().maxCoeff() == 0.0);
  const auto at_bottom = weighted_lasso(p, path.back());
  const auto wls = weighted_least_squares(p);
  CHECK((at_bottom.slopes - wls.slopes).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("an all-zero response has no lambda path") {
  RegressionProblem p;
  p.X = Eigen::MatrixXd::Random(10, 2);
  p.y = Eigen::VectorXd::Zero(10);
  p.w = Eigen::VectorXd::Ones(10);
  CHECK_THROWS_AS(lambda_path(p, 10), DataError);
}

TEST_CASE("cross validation shrinks hard when the response is pure noise") {
  int upper_half = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::mt19937_64 rng(100 + rep);
    const auto p = random_problem(rng, 60, 10, false);
    const auto cv = cross_validate_lambda(p, 10, 1000 + static_cast<std::uint64_t>(rep));
    const std::size_t half = cv.path.size() / 2;
    std::size_t pos = 0;
    while (cv.path[pos] != cv.lambda_hat) ++pos;
    if (pos < half) ++upper_half;  // path descends, so early indices are large lambdas
  }
  CHECK(upper_half >= 18);
}

TEST_CASE("cross validation keeps a strong predictor") {
  int kept = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::mt19937_64 rng(200 + rep);
    std::normal_distribution<double> gauss;
    RegressionProblem p;
    p.X.resize(80, 5);
    p.y.resize(80);
    p.w = Eigen::VectorXd::Ones(80);
    for (long i = 0; i < 80; ++i) {
      for (long j = 0; j < 5; ++j) p.X(i, j) = gauss(rng);
      p.y(i) = 3.0 * p.X(i, 0) + gauss(rng);
    }
    const auto cv = cross_validate_lambda(p, 10, 300 + static_cast<std::uint64_t>(rep));
    const auto fit = weighted_lasso(p, cv.lambda_hat);
    if (fit.slopes(0) != 0.0) ++kept;
  }
  CHECK(kept >= 19);
}

TEST_CASE("cross validation is deterministic in the seed") {
  std::mt19937_64 rng(10);
  const auto p = random_problem(rng, 40, 5);
  const auto a = cross_validate_lambda(p, 10, 77);
  const auto b = cross_validate_lambda(p, 10, 77);
  CHECK(a.lambda_hat == b.lambda_hat);
  CHECK(a.cv_errors == b.cv_errors);
  const auto c = cross_validate_lambda(p, 10, 78);
  bool any_diff = c.lambda_hat != a.lambda_hat;
  for (std::size_t i = 0; !any_diff && i < a.cv_errors.size(); ++i)
    any_diff = a.cv_errors[i] != c.cv_errors[i];
  CHECK(any_diff);
}

TEST_CASE("problem validation rejects inconsistent shapes and zero weights") {
  RegressionProblem p;
  p.X = Eigen::MatrixXd::Random(5, 2);
  p.y = Eigen::VectorXd::Random(4);
  p.w = Eigen::VectorXd::Ones(5);
  CHECK_THROWS_AS(p.validate(), DataError);
  p.y = Eigen::VectorXd::Random(5);
  p.w = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(p.validate(), DataError);
}
