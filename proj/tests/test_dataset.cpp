#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tvvar/dataset.hpp"

using namespace tvvar;

namespace {

std::string temp_path(const std::string& stem) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() / "tvvar_tests";
  std::filesystem::create_directories(dir);
  return (dir / (stem + "_" + std::to_string(counter++) + ".csv")).string();
}

std::string write_file(const std::string& stem, const std::string& content) {
  const std::string path = temp_path(stem);
  std::ofstream out(path);
  out << content;
  return path;
}

TimeSeriesDataset beep_fixture() {
  TimeSeriesDataset data;
  data.values.resize(6, 1);
  data.values << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  data.labels = {"x"};
  data.beep = std::vector<long>{1, 5, 6, 8, 9, 10};
  data.day = std::vector<long>{226, 227, 227, 227, 227, 227};
  return data;
}

}  // namespace

TEST_CASE("csv loading binds declared roles") {
  const std::string path = write_file("roles",
                                      "a,b,time_norm,beepno,dayno\n"
                                      "1.5,2.5,0.0,1,1\n"
                                      "2.5,3.5,0.5,2,1\n"
                                      "3.5,,1.0,3,1\n");
  ColumnRoles roles;
  roles.value_columns = {"a", "b"};
  roles.time_column = "time_norm";
  roles.beep_column = "beepno";
  roles.day_column = "dayno";
  const auto data = load_csv(path, roles);
  CHECK(data.n() == 3);
  CHECK(data.p() == 2);
  CHECK(data.labels == std::vector<std::string>{"a", "b"});
  CHECK(data.values(0, 0) == 1.5);
  CHECK(std::isnan(data.values(2, 1)));
  REQUIRE(data.time_norm.has_value());
  CHECK((*data.time_norm)(1) == 0.5);
  REQUIRE(data.beep.has_value());
  CHECK((*data.beep)[2] == 3);
}

TEST_CASE("csv loading with no declared roles takes every column as a value") {
  const std::string path = write_file("single", "x\n1\n2\n3\n4\n5\n");
  const auto data = load_csv(path, {});
  CHECK(data.n() == 5);
  CHECK(data.p() == 1);
  CHECK_FALSE(data.beep.has_value());
  const auto design = build_lagged_design(data, {1});
  CHECK(design.m() == 4);
}

TEST_CASE("csv loading rejects malformed content") {
  ColumnRoles roles;
  SUBCASE("text cell in a value column") {
    const std::string path = write_file("text", "x\n1\nhello\n3\n");
    CHECK_THROWS_AS(load_csv(path, roles), DataError);
  }
  SUBCASE("non-positive beep") {
    const std::string path = write_file("beep0", "x,beepno,dayno\n1,0,1\n2,1,1\n");
    ColumnRoles r;
    r.value_columns = {"x"};
    r.beep_column = "beepno";
    r.day_column = "dayno";
    CHECK_THROWS_AS(load_csv(path, r), DataError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_csv(temp_path("nope"), roles), DataError); }
  SUBCASE("duplicate column names") {
    const std::string path = write_file("dup", "x,x\n1,2\n3,4\n");
    CHECK_THROWS_AS(load_csv(path, roles), DataError);
  }
  SUBCASE("column assigned to two roles") {
    const std::string path = write_file("tworole", "x,t\n1,0\n2,1\n");
    ColumnRoles r;
    r.value_columns = {"x", "t"};
    r.time_column = "t";
    CHECK_THROWS_AS(load_csv(path, r), DataError);
  }
}

TEST_CASE("missing cells accept empty, NA, NaN and nan spellings") {
  const std::string path = write_file("na", "x,y\n1,NA\nNaN,2\n3,nan\n,4\n5,5\n");
  const auto data = load_csv(path, {});
  CHECK(std::isnan(data.values(0, 1)));
  CHECK(std::isnan(data.values(1, 0)));
  CHECK(std::isnan(data.values(2, 1)));
  CHECK(std::isnan(data.values(3, 0)));
  CHECK(data.values(4, 1) == 5.0);
}

TEST_CASE("csv round trip preserves values, roles and missingness") {
  TimeSeriesDataset data = beep_fixture();
  data.values(3, 0) = std::nan("");
  const std::string path = temp_path("roundtrip");
  write_csv(data, path, {"note: fixture"});
  ColumnRoles roles;
  roles.value_columns = {"x"};
  roles.beep_column = "beepno";
  roles.day_column = "dayno";
  const auto back = load_csv(path, roles);
  CHECK(back.n() == 6);
  CHECK(back.values(0, 0) == 1.0);
  CHECK(std::isnan(back.values(3, 0)));
  REQUIRE(back.beep.has_value());
  CHECK(*back.beep == *data.beep);
  CHECK(*back.day == *data.day);
}

TEST_CASE("beep/day consecutiveness keeps exactly the tutorial's pairs") {
  const auto design = build_lagged_design(beep_fixture(), {1});
  CHECK(design.total_rows == 5);
  REQUIRE(design.m() == 3);
  // responses at beeps 6, 9, 10 hold values 3, 5, 6
  CHECK(design.responses(0, 0) == 3.0);
  CHECK(design.responses(1, 0) == 5.0);
  CHECK(design.responses(2, 0) == 6.0);
  CHECK(design.predictors(0, 0) == 2.0);
  CHECK(design.predictors(1, 0) == 4.0);
  CHECK(design.predictors(2, 0) == 5.0);
}

TEST_CASE("a day change between every occasion leaves nothing to fit") {
  TimeSeriesDataset data;
  data.values.resize(3, 1);
  data.values << 1, 2, 3;
  data.labels = {"x"};
  data.beep = std::vector<long>{1, 2, 3};
  data.day = std::vector<long>{1, 2, 3};
  CHECK_THROWS_AS(build_lagged_design(data, {1}), DataError);
}

TEST_CASE("without beep/day all adjacent complete rows pair up") {
  TimeSeriesDataset data;
  data.values = Eigen::MatrixXd::Random(10, 2);
  data.labels = {"a", "b"};
  const auto design = build_lagged_design(data, {1});
  CHECK(design.m() == 9);
  CHECK(design.total_rows == 9);
  for (long r = 0; r < 9; ++r) {
    CHECK((design.predictors.row(r).array() == data.values.row(r).array()).all());
    CHECK((design.responses.row(r).array() == data.values.row(r + 1).array()).all());
  }
}

TEST_CASE("lag sets other than {1} are rejected") {
  TimeSeriesDataset data;
  data.values = Eigen::MatrixXd::Random(10, 2);
  data.labels = {"a", "b"};
  CHECK_THROWS_AS(build_lagged_design(data, {}), ConfigError);
  CHECK_THROWS_AS(build_lagged_design(data, {0}), ConfigError);
  CHECK_THROWS_AS(build_lagged_design(data, {-1}), ConfigError);
  CHECK_THROWS_AS(build_lagged_design(data, {1, 2}), ConfigError);
  CHECK_THROWS_AS(build_lagged_design(data, {2}), ConfigError);
}

TEST_CASE("consecutiveness agrees with a brute-force scanner under random missingness") {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 50; ++rep) {
    const long n = 20 + static_cast<long>(rng() % 30);
    const long p = 1 + static_cast<long>(rng() % 3);
    TimeSeriesDataset data;
    data.values.resize(n, p);
    std::normal_distribution<double> gauss;
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < p; ++j)
        data.values(i, j) = (rng() % 8 == 0) ? std::nan("") : gauss(rng);
    for (long j = 0; j < p; ++j) data.labels.push_back("v" + std::to_string(j));

    const bool with_beep = rep % 2 == 0;
    if (with_beep) {
      std::vector<long> beep(static_cast<std::size_t>(n)), day(static_cast<std::size_t>(n));
      long b = 1, d = 1;
      for (long i = 0; i < n; ++i) {
        if (i > 0) {
          const int step = static_cast<int>(rng() % 4);
          if (step == 0) {
            ++d;
            b = 1 + static_cast<long>(rng() % 3);
          } else {
            b += step;  // step 1 keeps consecutive; 2 or 3 breaks it
          }
        }
        beep[static_cast<std::size_t>(i)] = b;
        day[static_cast<std::size_t>(i)] = d;
      }
      data.beep = beep;
      data.day = day;
    }

    std::vector<long> expected;
    for (long t = 1; t < n; ++t) {
      bool complete = true;
      for (long j = 0; j < p; ++j)
        if (std::isnan(data.values(t, j)) || std::isnan(data.values(t - 1, j))) complete = false;
      bool consecutive = true;
      if (with_beep) {
        const std::size_t ut = static_cast<std::size_t>(t);
        consecutive = ((*data.day)[ut] == (*data.day)[ut - 1]) &&
                      ((*data.beep)[ut] == (*data.beep)[ut - 1] + 1);
      }
      if (complete && consecutive) expected.push_back(t);
    }

    if (static_cast<long>(expected.size()) < p + 2) {
      CHECK_THROWS_AS(build_lagged_design(data, {1}), DataError);
      continue;
    }
    const auto design = build_lagged_design(data, {1});
    REQUIRE(design.m() == static_cast<long>(expected.size()));
    CHECK(design.included_rows == design.m());
    for (std::size_t r = 0; r < expected.size(); ++r) {
      CHECK(design.response_occasions[r] == expected[r]);
      const long lr = static_cast<long>(r);
      CHECK((design.responses.row(lr).array() == data.values.row(expected[r]).array()).all());
      CHECK((design.predictors.row(lr).array() == data.values.row(expected[r] - 1).array()).all());
    }
  }
}

TEST_CASE("included rows shrink monotonically as cells go missing") {
  std::mt19937_64 rng(5);
  TimeSeriesDataset data;
  data.values = Eigen::MatrixXd::Random(40, 2);
  data.labels = {"a", "b"};
  long prev = build_lagged_design(data, {1}).m();
  for (int k = 0; k < 10; ++k) {
    data.values(static_cast<long>(rng() % 40), static_cast<long>(rng() % 2)) = std::nan("");
    long m;
    try {
      m = build_lagged_design(data, {1}).m();
    } catch (const DataError&) {
      break;
    }
    CHECK(m <= prev);
    prev = m;
  }
}

TEST_CASE("synthesized timestamps keep gaps from excluded occasions") {
  TimeSeriesDataset data;
  data.values.resize(6, 1);
  data.values << 1, std::nan(""), 3, 4, 5, 6;
  data.labels = {"x"};
  const auto design = build_lagged_design(data, {1});
  REQUIRE(design.m() == 3);
  // occasions 3, 4, 5 (0-based) at i/(n-1)
  CHECK(design.response_times(0) == doctest::Approx(3.0 / 5.0));
  CHECK(design.response_times(1) == doctest::Approx(4.0 / 5.0));
  CHECK(design.response_times(2) == doctest::Approx(5.0 / 5.0));
}

TEST_CASE("standardize centers and scales with sample sd") {
  TimeSeriesDataset data;
  data.values.resize(4, 1);
  data.values << 1, 2, 3, 4;  // design columns both become {subsets}
  data.labels = {"x"};
  auto design = build_lagged_design(data, {1});
  // predictor column is [1,2,3]
  const auto std_design = standardize(design);
  CHECK(std_design.predictors(0, 0) == doctest::Approx(-1.0));
  CHECK(std_design.predictors(1, 0) == doctest::Approx(0.0));
  CHECK(std_design.predictors(2, 0) == doctest::Approx(1.0));
  CHECK(std_design.scaling.predictor_mean(0) == doctest::Approx(2.0));
  CHECK(std_design.scaling.predictor_sd(0) == doctest::Approx(1.0));

  SUBCASE("columns end up mean 0 sd 1") {
    for (auto mat : {&std_design.predictors, &std_design.responses}) {
      const double mean = mat->col(0).mean();
      const double sd = std::sqrt((mat->col(0).array() - mean).square().sum() / (mat->rows() - 1));
      CHECK(std::abs(mean) <= 1e-10);
      CHECK(std::abs(sd - 1.0) <= 1e-10);
    }
  }
  SUBCASE("idempotence") {
    const auto again = standardize(std_design);
    CHECK((again.predictors - std_design.predictors).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("round trip back to the original scale") {
    Eigen::MatrixXd unscaled = std_design.predictors;
    for (long j = 0; j < unscaled.cols(); ++j)
      unscaled.col(j) =
          unscaled.col(j) * std_design.scaling.predictor_sd(j) +
          Eigen::VectorXd::Constant(unscaled.rows(), std_design.scaling.predictor_mean(j));
    CHECK((unscaled - design.predictors).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("apply_scaling reuses stored parameters instead of refitting them") {
  TimeSeriesDataset data;
  data.values = Eigen::MatrixXd::Random(30, 2) * 3.0;
  data.values.array() += 1.0;
  data.labels = {"a", "b"};
  const auto design = build_lagged_design(data, {1});
  const auto std_design = standardize(design);
  const auto applied = apply_scaling(design, std_design.scaling);
  CHECK((applied.predictors - std_design.predictors).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((applied.responses - std_design.responses).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero-variance columns are named in the error") {
  TimeSeriesDataset data;
  data.values.resize(5, 2);
  data.values << 1, 4, 2, 4, 3, 4, 4, 4, 5, 4;
  data.labels = {"ok", "flat"};
  const auto design = build_lagged_design(data, {1});
  try {
    standardize(design);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("flat") != std::string::npos);
  }
}
