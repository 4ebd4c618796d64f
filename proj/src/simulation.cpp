#include "tvvar/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace tvvar {

std::string fn_kind_name(FnKind k) {
  switch (k) {
    case FnKind::ConstantNonzero: return "constant_nonzero";
    case FnKind::LinearUp: return "linear_up";
    case FnKind::LinearDown: return "linear_down";
    case FnKind::SigmoidUp: return "sigmoid_up";
    case FnKind::SigmoidDown: return "sigmoid_down";
    case FnKind::StepUp: return "step_up";
    case FnKind::StepDown: return "step_down";
    case FnKind::Zero: return "zero";
  }
  throw ConfigError("unknown parameter function kind");
}

FnKind fn_kind_from_name(const std::string& name) {
  if (name == "constant_nonzero") return FnKind::ConstantNonzero;
  if (name == "linear_up") return FnKind::LinearUp;
  if (name == "linear_down") return FnKind::LinearDown;
  if (name == "sigmoid_up") return FnKind::SigmoidUp;
  if (name == "sigmoid_down") return FnKind::SigmoidDown;
  if (name == "step_up") return FnKind::StepUp;
  if (name == "step_down") return FnKind::StepDown;
  if (name == "zero") return FnKind::Zero;
  throw ConfigError("unknown parameter function kind '" + name + "'");
}

std::string fn_kind_category(FnKind k) {
  switch (k) {
    case FnKind::ConstantNonzero: return "constant";
    case FnKind::LinearUp:
    case FnKind::LinearDown: return "linear";
    case FnKind::SigmoidUp:
    case FnKind::SigmoidDown: return "sigmoid";
    case FnKind::StepUp:
    case FnKind::StepDown: return "step";
    case FnKind::Zero: return "zero";
  }
  throw ConfigError("unknown parameter function kind");
}

double eval_parameter_function(FnKind kind, double t, double theta) {
  switch (kind) {
    case FnKind::ConstantNonzero: return theta;
    case FnKind::LinearUp: return theta * t;
    case FnKind::LinearDown: return theta * (1.0 - t);
    case FnKind::SigmoidUp: return theta / (1.0 + std::exp(-15.0 * (t - 0.5)));
    case FnKind::SigmoidDown: return theta / (1.0 + std::exp(15.0 * (t - 0.5)));
    case FnKind::StepUp: return t < 0.5 ? 0.0 : theta;
    case FnKind::StepDown: return t < 0.5 ? theta : 0.0;
    case FnKind::Zero: return 0.0;
  }
  throw ConfigError("unknown parameter function kind");
}

Eigen::MatrixXd CoefficientArray::at_time(double t) const {
  const long nn = n();
  const double pos = t * static_cast<double>(nn);  // grid point k sits at k/n
  if (pos <= 1.0) return values.front();
  if (pos >= static_cast<double>(nn)) return values.back();
  const long k0 = static_cast<long>(std::floor(pos));
  const double frac = pos - static_cast<double>(k0);
  if (frac == 0.0) return values[static_cast<std::size_t>(k0 - 1)];
  return (1.0 - frac) * values[static_cast<std::size_t>(k0 - 1)] +
         frac * values[static_cast<std::size_t>(k0)];
}

Eigen::MatrixXi generate_graph_structure(int p, int n_edges, std::uint64_t seed) {
  if (p < 1) throw ConfigError("structure needs p >= 1");
  const int max_edges = p * p - p;
  if (n_edges < 0 || n_edges > max_edges)
    throw ConfigError("n_edges must lie in [0, " + std::to_string(max_edges) + "]");

  Eigen::MatrixXi structure = Eigen::MatrixXi::Zero(p, p);
  structure.diagonal().setOnes();

  std::vector<int> cells(static_cast<std::size_t>(max_edges));
  std::iota(cells.begin(), cells.end(), 0);
  auto rng = make_rng(seed);
  // Partial Fisher-Yates: the first n_edges entries are a uniform draw
  // without replacement.
  for (int i = 0; i < n_edges; ++i) {
    std::uniform_int_distribution<int> pick(i, max_edges - 1);
    std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(pick(rng))]);
    const int cell = cells[static_cast<std::size_t>(i)];
    const int row = cell / (p - 1);
    int col = cell % (p - 1);
    if (col >= row) ++col;  // skip the diagonal
    structure(row, col) = 1;
  }
  return structure;
}

Eigen::MatrixXi upper_triangular_structure(int p) {
  if (p < 1) throw ConfigError("structure needs p >= 1");
  Eigen::MatrixXi structure = Eigen::MatrixXi::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) structure(i, j) = 1;
  return structure;
}

SpecsMatrix assign_parameter_functions(const Eigen::MatrixXi& structure, double theta,
                                       std::uint64_t seed) {
  if (!(theta > 0.0)) throw ConfigError("theta must be positive");
  const long p = structure.rows();
  if (structure.cols() != p) throw ConfigError("structure matrix must be square");

  static const FnKind nonzero_kinds[] = {FnKind::ConstantNonzero, FnKind::LinearUp,
                                         FnKind::LinearDown,      FnKind::SigmoidUp,
                                         FnKind::SigmoidDown,     FnKind::StepUp,
                                         FnKind::StepDown};
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, 6);

  SpecsMatrix specs(static_cast<std::size_t>(p),
                    std::vector<ParameterFunctionSpec>(static_cast<std::size_t>(p)));
  for (long i = 0; i < p; ++i) {
    for (long j = 0; j < p; ++j) {
      auto& spec = specs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      spec.theta = theta;
      spec.kind = structure(i, j) != 0 ? nonzero_kinds[pick(rng)] : FnKind::Zero;
    }
  }
  return specs;
}

double spectral_radius(const Eigen::MatrixXd& B) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(B, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

CoefficientArray render_coefficient_array(const SpecsMatrix& specs, long n) {
  if (n < 2) throw ConfigError("coefficient array needs n >= 2");
  const long p = static_cast<long>(specs.size());
  if (p < 1) throw ConfigError("empty parameter specs");
  for (const auto& row : specs)
    if (static_cast<long>(row.size()) != p) throw ConfigError("parameter specs must be square");

  CoefficientArray out;
  out.values.reserve(static_cast<std::size_t>(n));
  for (long k = 1; k <= n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    Eigen::MatrixXd B(p, p);
    for (long i = 0; i < p; ++i)
      for (long j = 0; j < p; ++j) {
        const auto& spec = specs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        B(i, j) = eval_parameter_function(spec.kind, t, spec.theta);
      }
    if (!(spectral_radius(B) < 1.0))
      throw NumericalError("coefficient slice at t=" + std::to_string(t) +
                           " is unstable (spectral radius >= 1)");
    out.values.push_back(std::move(B));
  }
  out.specs = specs;
  return out;
}

CoefficientArray generate_stable_coefficients(const ScenarioConfig& config) {
  if (config.n < 2) throw ConfigError("scenario needs n >= 2");
  if (config.max_redraws < 1) throw ConfigError("max_redraws must be positive");

  for (int attempt = 0; attempt < config.max_redraws; ++attempt) {
    const std::uint64_t structure_seed = mix_seed(config.seed, 2 * static_cast<std::uint64_t>(attempt));
    const std::uint64_t assign_seed = mix_seed(config.seed, 2 * static_cast<std::uint64_t>(attempt) + 1);
    Eigen::MatrixXi structure;
    if (config.structure == ScenarioConfig::Structure::RandomGraph)
      structure = generate_graph_structure(config.p, config.n_edges, structure_seed);
    else
      structure = upper_triangular_structure(config.p);
    const SpecsMatrix specs = assign_parameter_functions(structure, config.theta, assign_seed);
    try {
      CoefficientArray coeffs = render_coefficient_array(specs, config.n);
      coeffs.sigma = config.sigma;
      coeffs.seed = config.seed;
      coeffs.redraws = attempt;
      return coeffs;
    } catch (const NumericalError&) {
      // unstable draw; retry from the next seed stream
    }
  }
  throw ConfigError("no stable coefficient array in " + std::to_string(config.max_redraws) +
                    " redraws; the scenario configuration appears infeasible");
}

TimeSeriesDataset simulate_tv_var(const CoefficientArray& coeffs, double sigma,
                                  std::uint64_t seed) {
  if (!(sigma > 0.0)) throw ConfigError("noise sd must be positive");
  const long n = coeffs.n();
  const long p = coeffs.p();
  if (n < 2) throw ConfigError("coefficient array has fewer than 2 slices");

  auto rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);

  TimeSeriesDataset data;
  data.values.resize(n, p);
  for (long j = 0; j < p; ++j) data.values(0, j) = noise(rng);
  for (long t = 1; t < n; ++t) {
    const Eigen::MatrixXd& B = coeffs.values[static_cast<std::size_t>(t)];
    const Eigen::VectorXd prev = data.values.row(t - 1).transpose();
    Eigen::VectorXd next = B * prev;
    for (long j = 0; j < p; ++j) next(j) += noise(rng);
    if (next.cwiseAbs().maxCoeff() > 1e6)
      throw NumericalError("simulated series diverged; coefficient array is unstable");
    data.values.row(t) = next.transpose();
  }

  data.labels.resize(static_cast<std::size_t>(p));
  for (long j = 0; j < p; ++j) data.labels[static_cast<std::size_t>(j)] = "V" + std::to_string(j + 1);
  Eigen::VectorXd times(n);
  for (long i = 0; i < n; ++i) times(i) = static_cast<double>(i) / static_cast<double>(n - 1);
  data.time_norm = times;
  return data;
}

std::vector<long> simulation_n_grid() {
  return {20, 30, 36, 69, 103, 155, 234, 352, 530, 798, 1201, 1808};
}

}  // namespace tvvar
