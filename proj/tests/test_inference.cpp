#include <doctest.h>

#include <cmath>
#include <vector>

#include "tvvar/inference.hpp"
#include "tvvar/simulation.hpp"
#include "tvvar/spline_estimator.hpp"

using namespace tvvar;

namespace {

TimeSeriesDataset small_simulated(long n, std::uint64_t seed) {
  SpecsMatrix specs(3, std::vector<ParameterFunctionSpec>(3, {FnKind::Zero, 0.35}));
  specs[0][0] = {FnKind::ConstantNonzero, 0.35};
  specs[1][0] = {FnKind::LinearUp, 0.35};
  specs[2][2] = {FnKind::SigmoidDown, 0.35};
  const auto truth = render_coefficient_array(specs, n);
  return simulate_tv_var(truth, 0.31622776601683794, seed);
}

TimeSeriesDataset marker_fixture() {
  // three 4-beep days; blocks of 4 align with the days
  TimeSeriesDataset data;
  data.values.resize(12, 2);
  for (long i = 0; i < 12; ++i) {
    data.values(i, 0) = static_cast<double>(i) + 1.0;
    data.values(i, 1) = 20.0 - 1.5 * static_cast<double>(i);
  }
  data.labels = {"A", "B"};
  data.beep = std::vector<long>{1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4};
  data.day = std::vector<long>{1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3};
  return data;
}

bool models_identical(const TimeVaryingVarModel& a, const TimeVaryingVarModel& b) {
  if (a.E() != b.E() || a.p() != b.p()) return false;
  if (!(a.intercepts.array() == b.intercepts.array()).all()) return false;
  for (long e = 0; e < a.E(); ++e)
    if (!(a.coeffs[static_cast<std::size_t>(e)].array() ==
          b.coeffs[static_cast<std::size_t>(e)].array())
             .all())
      return false;
  return true;
}

}  // namespace

TEST_CASE("equispaced estimation points") {
  const auto one = equispaced_est_points(1);
  REQUIRE(one.size() == 1);
  CHECK(one(0) == 0.0);
  const auto five = equispaced_est_points(5);
  REQUIRE(five.size() == 5);
  CHECK(five(0) == 0.0);
  CHECK(five(2) == 0.5);
  CHECK(five(4) == 1.0);
  CHECK_THROWS_AS(equispaced_est_points(0), ConfigError);
}

TEST_CASE("method names, tags and traits") {
  const Method all[] = {Method::GLM, Method::GLM_L1, Method::KS,
                        Method::KS_L1, Method::GAM, Method::GAM_ST};
  for (Method m : all) CHECK(method_from_tag(method_tag(m)) == m);
  CHECK(method_display_name(Method::GLM_L1) == "GLM(L1)");
  CHECK(method_display_name(Method::GAM_ST) == "GAM(st)");
  CHECK(method_tag(Method::KS_L1) == "ks-l1");
  CHECK_THROWS_AS(method_from_tag("ols"), ConfigError);
  CHECK(method_is_regularized(Method::KS_L1));
  CHECK_FALSE(method_is_regularized(Method::GAM_ST));
  CHECK(method_is_kernel(Method::KS));
  CHECK_FALSE(method_is_kernel(Method::GLM));
  CHECK(method_is_time_varying(Method::GAM));
  CHECK_FALSE(method_is_time_varying(Method::GLM_L1));
}

TEST_CASE("fit_model validates its spec") {
  const auto data = small_simulated(80, 5);
  ModelSpec spec;
  spec.method = Method::KS;
  spec.bandwidth = 0.3;
  CHECK_THROWS_AS(fit_model(data, spec), ConfigError);  // no est points
  spec.est_points = equispaced_est_points(4);
  spec.est_points(3) = 1.5;
  CHECK_THROWS_AS(fit_model(data, spec), ConfigError);
  spec.est_points = equispaced_est_points(4);
  spec.bandwidth = 0.0;
  CHECK_THROWS_AS(fit_model(data, spec), ConfigError);  // kernel without bandwidth
}

TEST_CASE("fit_model dispatches to the matching estimator") {
  const auto data = small_simulated(120, 6);
  const LaggedDesign design = standardize(build_lagged_design(data, {1}));
  const auto pts = equispaced_est_points(4);

  SUBCASE("stationary methods replicate one fit across slices") {
    ModelSpec spec;
    spec.method = Method::GLM;
    spec.est_points = pts;
    spec.seed = 9;
    const auto model = fit_model(data, spec);
    CHECK(model.method == Method::GLM);
    CHECK(model.E() == 4);
    CHECK(model.bandwidth == 0.0);
    CHECK(model.lambda.size() == 0);
    for (long e = 1; e < 4; ++e)
      CHECK((model.coeffs[static_cast<std::size_t>(e)].array() == model.coeffs[0].array()).all());
    const auto direct = fit_stationary_var(design, false, 9);
    CHECK((model.coeffs[0].array() == direct.coeffs.array()).all());
  }
  SUBCASE("kernel dispatch matches a direct call") {
    ModelSpec spec;
    spec.method = Method::KS_L1;
    spec.est_points = pts;
    spec.bandwidth = 0.4;
    spec.seed = 11;
    const auto model = fit_model(data, spec);
    const auto direct = fit_tv_var_ks(design, pts, 0.4, true, 11);
    CHECK(models_identical(model, direct));
    CHECK((model.lambda.array() == direct.lambda.array()).all());
  }
  SUBCASE("spline dispatch matches a direct call") {
    ModelSpec spec;
    spec.method = Method::GAM;
    spec.est_points = pts;
    const auto model = fit_model(data, spec);
    const auto direct = fit_tv_var_gam(design, pts, 0, false, ExecutionPolicy::Parallel);
    CHECK(models_identical(model, direct));
    CHECK(model.band_lower.size() == 4);
  }
}

TEST_CASE("block bounds split occasions into near-equal contiguous runs") {
  CHECK(bootstrap_block_bounds(10, 3) == std::vector<long>{0, 4, 7, 10});
  CHECK(bootstrap_block_bounds(9, 3) == std::vector<long>{0, 3, 6, 9});
  CHECK(bootstrap_block_bounds(7, 7) == std::vector<long>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK_THROWS_AS(bootstrap_block_bounds(10, 1), ConfigError);
  CHECK_THROWS_AS(bootstrap_block_bounds(5, 6), DataError);

  for (long n : {23L, 57L, 200L}) {
    for (int blocks : {2, 5, 10}) {
      const auto bounds = bootstrap_block_bounds(n, blocks);
      REQUIRE(static_cast<int>(bounds.size()) == blocks + 1);
      CHECK(bounds.front() == 0);
      CHECK(bounds.back() == n);
      long lo = n, hi = 0;
      for (int b = 0; b < blocks; ++b) {
        const long len = bounds[static_cast<std::size_t>(b) + 1] - bounds[static_cast<std::size_t>(b)];
        lo = std::min(lo, len);
        hi = std::max(hi, len);
      }
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("block draws are deterministic and in range") {
  const auto d1 = bootstrap_block_draw(42, 10);
  const auto d2 = bootstrap_block_draw(42, 10);
  CHECK(d1 == d2);
  REQUIRE(d1.size() == 10);
  for (int d : d1) {
    CHECK(d >= 0);
    CHECK(d < 10);
  }
  bool any_diff = false;
  for (std::uint64_t s = 0; s < 8 && !any_diff; ++s)
    any_diff = bootstrap_block_draw(s, 10) != d1;
  CHECK(any_diff);
}

TEST_CASE("resampling concatenates blocks and repairs the day axis") {
  const auto data = marker_fixture();

  SUBCASE("the identity draw reproduces the dataset") {
    const auto out = bootstrap_resample(data, {0, 1, 2}, 3);
    CHECK((out.values.array() == data.values.array()).all());
    CHECK(*out.beep == *data.beep);
    CHECK(*out.day == *data.day);
    CHECK_FALSE(out.time_norm.has_value());
  }
  SUBCASE("adjacent blocks keep their original markers") {
    const auto out = bootstrap_resample(data, {1, 2}, 3);
    REQUIRE(out.n() == 8);
    CHECK(*out.beep == std::vector<long>{1, 2, 3, 4, 1, 2, 3, 4});
    CHECK(*out.day == std::vector<long>{2, 2, 2, 2, 3, 3, 3, 3});
    CHECK((out.values.array() == data.values.bottomRows(8).array()).all());
  }
  SUBCASE("a non-adjacent seam forces a day break") {
    const auto out = bootstrap_resample(data, {2, 0}, 3);
    CHECK(*out.beep == std::vector<long>{1, 2, 3, 4, 1, 2, 3, 4});
    CHECK(*out.day == std::vector<long>{3, 3, 3, 3, 4, 4, 4, 4});
  }
  SUBCASE("a repeated block breaks at the seam and survives the pairing rule") {
    const auto out = bootstrap_resample(data, {0, 0}, 3);
    CHECK(*out.day == std::vector<long>{1, 1, 1, 1, 2, 2, 2, 2});
    const auto design = build_lagged_design(out, {1});
    CHECK(design.m() == 6);
  }
  SUBCASE("sources without markers get file-order markers") {
    TimeSeriesDataset plain;
    plain.values = data.values;
    plain.labels = data.labels;
    const auto out = bootstrap_resample(plain, {0, 1, 2}, 3);
    CHECK(*out.beep == std::vector<long>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    CHECK(*out.day == std::vector<long>(12, 1));
  }
  SUBCASE("draw indices outside the block range are rejected") {
    CHECK_THROWS_AS(bootstrap_resample(data, {0, 3}, 3), ConfigError);
  }
}

TEST_CASE("block bootstrap: determinism, identity replicate, quantiles") {
  const auto data = small_simulated(90, 7);
  ModelSpec spec;
  spec.method = Method::KS;
  spec.est_points = equispaced_est_points(3);
  spec.bandwidth = 0.5;
  spec.seed = 13;

  SUBCASE("seed count and probabilities are validated") {
    CHECK_THROWS_AS(block_bootstrap(data, spec, 3, 5, {1, 2}, {0.5}), ConfigError);
    CHECK_THROWS_AS(block_bootstrap(data, spec, 1, 5, {1}, {1.5}), ConfigError);
    CHECK_THROWS_AS(block_bootstrap(data, spec, 1, 91, {1}, {0.5}), DataError);
  }

  SUBCASE("fixed seeds give identical distributions; serial matches parallel") {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t r = 0; r < 8; ++r) seeds.push_back(mix_seed(99, r));
    const auto a = block_bootstrap(data, spec, 8, 6, seeds, {0.05, 0.5, 0.95});
    const auto b = block_bootstrap(data, spec, 8, 6, seeds, {0.05, 0.5, 0.95});
    const auto c =
        block_bootstrap(data, spec, 8, 6, seeds, {0.05, 0.5, 0.95}, ExecutionPolicy::Serial);
    for (const auto* other : {&b, &c}) {
      REQUIRE(other->samples.size() == a.samples.size());
      for (std::size_t r = 0; r < a.samples.size(); ++r) {
        REQUIRE(a.replicate_ok[r]);
        REQUIRE(other->replicate_ok[r]);
        for (std::size_t e = 0; e < a.samples[r].size(); ++e)
          CHECK((a.samples[r][e].array() == other->samples[r][e].array()).all());
      }
      for (const auto& [pr, q] : a.quantiles)
        for (std::size_t e = 0; e < q.size(); ++e)
          CHECK((q[e].array() == other->quantiles.at(pr)[e].array()).all());
    }

    // quantile curves are monotone in the probability
    for (std::size_t e = 0; e < 3; ++e) {
      CHECK((a.quantiles.at(0.05)[e].array() <= a.quantiles.at(0.5)[e].array()).all());
      CHECK((a.quantiles.at(0.5)[e].array() <= a.quantiles.at(0.95)[e].array()).all());
    }
    CHECK((a.intercept_quantiles.at(0.05).array() <= a.intercept_quantiles.at(0.95).array()).all());
  }

  SUBCASE("an identity draw reproduces the direct fit exactly") {
    const int blocks = 3;
    std::uint64_t identity_seed = 0;
    bool found = false;
    for (std::uint64_t s = 0; s < 2000 && !found; ++s) {
      const auto draw = bootstrap_block_draw(s, blocks);
      if (draw == std::vector<int>{0, 1, 2}) {
        identity_seed = s;
        found = true;
      }
    }
    REQUIRE(found);
    const auto dist = block_bootstrap(data, spec, 1, blocks, {identity_seed}, {0.5});
    REQUIRE(dist.replicate_ok[0]);
    const auto base = fit_model(data, spec);
    for (long e = 0; e < 3; ++e)
      CHECK((dist.samples[0][static_cast<std::size_t>(e)].array() ==
             base.coeffs[static_cast<std::size_t>(e)].array())
                .all());
    CHECK((dist.intercept_samples[0].array() == base.intercepts.array()).all());
    // with one replicate every quantile equals that replicate
    CHECK((dist.quantiles.at(0.5)[1].array() == base.coeffs[1].array()).all());
  }

  SUBCASE("widespread refit failures surface as a data error") {
    ModelSpec doomed = spec;
    doomed.bandwidth = 1e-4;  // no usable mass at any estimation point
    std::vector<std::uint64_t> seeds{4, 5, 6};
    CHECK_THROWS_AS(block_bootstrap(data, doomed, 3, 6, seeds, {0.5}), DataError);
  }
}

TEST_CASE("prediction errors") {
  SUBCASE("a perfectly specified stationary model has zero error") {
    TimeSeriesDataset data;
    data.values.resize(9, 1);
    data.values(0, 0) = 1.0;
    for (long i = 1; i < 9; ++i) data.values(i, 0) = 0.5 * data.values(i - 1, 0);
    data.labels = {"X"};

    TimeVaryingVarModel model;
    model.method = Method::GLM;
    model.est_points = equispaced_est_points(1);
    model.intercepts = Eigen::MatrixXd::Zero(1, 1);
    model.coeffs = {Eigen::MatrixXd::Constant(1, 1, 0.5)};
    model.labels = {"X"};

    const auto report = compute_prediction_errors(model, data, PredictionCombine::Closest);
    CHECK(report.rows_used == 8);
    CHECK(report.rmse(0) <= 1e-14);
    CHECK(report.r2(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.est_point_rmse(0, 0) <= 1e-14);
  }

  SUBCASE("an intercept-only model centered on the response has zero r2") {
    const auto data = small_simulated(60, 8);
    const auto design = build_lagged_design(data, {1});
    TimeVaryingVarModel model;
    model.method = Method::GLM;
    model.est_points = equispaced_est_points(1);
    model.intercepts.resize(3, 1);
    for (long i = 0; i < 3; ++i) model.intercepts(i, 0) = design.responses.col(i).mean();
    model.coeffs = {Eigen::MatrixXd::Zero(3, 3)};
    model.labels = design.labels;
    const auto report = compute_prediction_errors(model, data, PredictionCombine::Weighted);
    for (long i = 0; i < 3; ++i) CHECK(std::abs(report.r2(i)) <= 1e-12);
  }

  SUBCASE("weighted and closest combinations agree when all slices agree") {
    const auto data = small_simulated(70, 9);
    TimeVaryingVarModel model;
    model.method = Method::KS;
    model.bandwidth = 0.25;
    model.est_points = equispaced_est_points(3);
    model.intercepts = Eigen::MatrixXd::Constant(3, 3, 0.01);
    model.coeffs.assign(3, Eigen::MatrixXd::Constant(3, 3, 0.1));
    model.labels = {"V1", "V2", "V3"};
    const auto w = compute_prediction_errors(model, data, PredictionCombine::Weighted);
    const auto c = compute_prediction_errors(model, data, PredictionCombine::Closest);
    for (long i = 0; i < 3; ++i) {
      CHECK(w.rmse(i) == doctest::Approx(c.rmse(i)).epsilon(1e-10));
      CHECK(w.r2(i) == doctest::Approx(c.r2(i)).epsilon(1e-10));
    }

    // once the slices differ, the two combinations part ways
    model.coeffs[2] = Eigen::MatrixXd::Constant(3, 3, -0.2);
    const auto w2 = compute_prediction_errors(model, data, PredictionCombine::Weighted);
    const auto c2 = compute_prediction_errors(model, data, PredictionCombine::Closest);
    CHECK((w2.rmse - c2.rmse).cwiseAbs().maxCoeff() > 1e-8);
  }

  SUBCASE("model/data dimension mismatch is a data error") {
    const auto data = small_simulated(50, 10);
    TimeVaryingVarModel model;
    model.method = Method::GLM;
    model.est_points = equispaced_est_points(1);
    model.intercepts = Eigen::MatrixXd::Zero(2, 1);
    model.coeffs = {Eigen::MatrixXd::Zero(2, 2)};
    model.labels = {"A", "B"};
    CHECK_THROWS_AS(compute_prediction_errors(model, data, PredictionCombine::Closest), DataError);
  }

  SUBCASE("a constant response column makes r2 undefined") {
    TimeSeriesDataset data;
    data.values.resize(10, 2);
    for (long i = 0; i < 10; ++i) {
      data.values(i, 0) = std::sin(static_cast<double>(i));
      data.values(i, 1) = 2.5;
    }
    data.labels = {"A", "B"};
    TimeVaryingVarModel model;
    model.method = Method::GLM;
    model.est_points = equispaced_est_points(1);
    model.intercepts = Eigen::MatrixXd::Zero(2, 1);
    model.coeffs = {Eigen::MatrixXd::Zero(2, 2)};
    model.labels = {"A", "B"};
    CHECK_THROWS_AS(compute_prediction_errors(model, data, PredictionCombine::Closest), DataError);
  }
}
