#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tvvar/common.hpp"
#include "tvvar/dataset.hpp"

namespace tvvar {

enum class FnKind {
  ConstantNonzero,
  LinearUp,
  LinearDown,
  SigmoidUp,
  SigmoidDown,
  StepUp,
  StepDown,
  Zero
};

std::string fn_kind_name(FnKind k);
FnKind fn_kind_from_name(const std::string& name);

// Merged reporting categories: the up/down variants of linear, sigmoid and
// step collapse into one category each.
std::string fn_kind_category(FnKind k);

double eval_parameter_function(FnKind kind, double t, double theta);

struct ParameterFunctionSpec {
  FnKind kind = FnKind::Zero;
  double theta = 0.35;
};

using SpecsMatrix = std::vector<std::vector<ParameterFunctionSpec>>;  // p x p

struct CoefficientArray {
  std::vector<Eigen::MatrixXd> values;  // n slices, each p x p; slice t-1 is B at occasion t
  SpecsMatrix specs;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  int redraws = 0;

  long p() const { return values.empty() ? 0 : values.front().rows(); }
  long n() const { return static_cast<long>(values.size()); }

  // Truth at an arbitrary time in [0,1]: linear interpolation on the grid
  // t_k = k/n (k = 1..n), clamped at the ends.
  Eigen::MatrixXd at_time(double t) const;
};

Eigen::MatrixXi generate_graph_structure(int p, int n_edges, std::uint64_t seed);

Eigen::MatrixXi upper_triangular_structure(int p);

SpecsMatrix assign_parameter_functions(const Eigen::MatrixXi& structure, double theta,
                                       std::uint64_t seed);

double spectral_radius(const Eigen::MatrixXd& B);

// Build the n coefficient slices for fixed specs on the grid t_k = k/n and
// verify stability; throws if any slice has spectral radius >= 1.
CoefficientArray render_coefficient_array(const SpecsMatrix& specs, long n);

struct ScenarioConfig {
  enum class Structure { RandomGraph, UpperTriangular };
  Structure structure = Structure::RandomGraph;
  int p = 10;
  int n_edges = 26;
  double theta = 0.35;
  double sigma = 0.31622776601683794;  // sqrt(0.1): noise variance 0.1
  long n = 0;
  std::uint64_t seed = 0;
  int max_redraws = 1000;
};

// Draw structure + assignment, render, and redraw wholesale from a fresh
// seed stream until every slice is stable. Records the redraw count.
CoefficientArray generate_stable_coefficients(const ScenarioConfig& config);

TimeSeriesDataset simulate_tv_var(const CoefficientArray& coeffs, double sigma,
                                  std::uint64_t seed);

// The sample-size grid used throughout the original experiments.
std::vector<long> simulation_n_grid();

}  // namespace tvvar
