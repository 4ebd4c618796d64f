// Timing comparison between the serial reference path and the OpenMP path.
// Both must produce bit-identical results; the benchmark asserts that while
// it times them.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "tvvar/dataset.hpp"
#include "tvvar/inference.hpp"
#include "tvvar/ks_estimator.hpp"
#include "tvvar/simulation.hpp"
#include "tvvar/spline_estimator.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_call(const std::function<void()>& f) {
  const auto t0 = Clock::now();
  f();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool same_model(const tvvar::TimeVaryingVarModel& a, const tvvar::TimeVaryingVarModel& b) {
  if (a.intercepts != b.intercepts) return false;
  if (a.coeffs.size() != b.coeffs.size()) return false;
  for (std::size_t e = 0; e < a.coeffs.size(); ++e)
    if (a.coeffs[e] != b.coeffs[e]) return false;
  return true;
}

void report(const std::string& name, double serial_s, double parallel_s, bool match) {
  std::printf("%-28s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  identical %s\n",
              name.c_str(), serial_s, parallel_s, serial_s / parallel_s, match ? "yes" : "NO");
  if (!match) {
    std::fprintf(stderr, "result mismatch in benchmark '%s'\n", name.c_str());
    std::exit(1);
  }
}

}  // namespace

int main() {
  using namespace tvvar;

  ScenarioConfig config;
  config.n = 300;
  config.seed = 42;
  const CoefficientArray truth = generate_stable_coefficients(config);
  const TimeSeriesDataset data = simulate_tv_var(truth, config.sigma, 43);
  const LaggedDesign design = standardize(build_lagged_design(data, {1}));
  const Eigen::VectorXd est_points = equispaced_est_points(15);

  FitOptions serial_opt, parallel_opt;
  serial_opt.exec = ExecutionPolicy::Serial;
  parallel_opt.exec = ExecutionPolicy::Parallel;

  {
    TimeVaryingVarModel m_serial, m_parallel;
    const double ts = time_call(
        [&] { m_serial = fit_tv_var_ks(design, est_points, 0.2, true, 7, serial_opt); });
    const double tp = time_call(
        [&] { m_parallel = fit_tv_var_ks(design, est_points, 0.2, true, 7, parallel_opt); });
    report("fit_tv_var_ks (l1, E=15)", ts, tp, same_model(m_serial, m_parallel));
  }

  {
    const std::vector<double> grid = {0.1, 0.2, 0.35, 0.5};
    BandwidthSelection s_serial, s_parallel;
    const double ts =
        time_call([&] { s_serial = select_bandwidth(design, grid, 5, 4, true, 7, serial_opt); });
    const double tp = time_call(
        [&] { s_parallel = select_bandwidth(design, grid, 5, 4, true, 7, parallel_opt); });
    report("select_bandwidth (4 cand.)", ts, tp,
           s_serial.b_hat == s_parallel.b_hat &&
               s_serial.mean_abs_error == s_parallel.mean_abs_error);
  }

  {
    TimeVaryingVarModel m_serial, m_parallel;
    const double ts = time_call(
        [&] { m_serial = fit_tv_var_gam(design, est_points, 0, false, ExecutionPolicy::Serial); });
    const double tp = time_call([&] {
      m_parallel = fit_tv_var_gam(design, est_points, 0, false, ExecutionPolicy::Parallel);
    });
    report("fit_tv_var_gam (E=15)", ts, tp, same_model(m_serial, m_parallel));
  }

  {
    ModelSpec spec;
    spec.method = Method::KS_L1;
    spec.est_points = equispaced_est_points(10);
    spec.bandwidth = 0.25;
    spec.seed = 7;
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t r = 0; r < 8; ++r) seeds.push_back(mix_seed(11, r));

    BootstrapDistribution d_serial, d_parallel;
    spec.options = serial_opt;
    const double ts = time_call([&] {
      d_serial = block_bootstrap(data, spec, 8, 10, seeds, {0.05, 0.95}, ExecutionPolicy::Serial);
    });
    spec.options = parallel_opt;
    const double tp = time_call([&] {
      d_parallel =
          block_bootstrap(data, spec, 8, 10, seeds, {0.05, 0.95}, ExecutionPolicy::Parallel);
    });
    bool match = d_serial.failed == d_parallel.failed;
    for (std::size_t r = 0; match && r < d_serial.samples.size(); ++r) {
      if (d_serial.replicate_ok[r] != d_parallel.replicate_ok[r]) match = false;
      if (!d_serial.replicate_ok[r]) continue;
      for (std::size_t e = 0; match && e < d_serial.samples[r].size(); ++e)
        if (d_serial.samples[r][e] != d_parallel.samples[r][e]) match = false;
    }
    report("block_bootstrap (nB=8)", ts, tp, match);
  }

  return 0;
}
