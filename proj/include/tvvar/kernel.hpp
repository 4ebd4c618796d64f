#pragma once

#include <Eigen/Dense>

#include "tvvar/common.hpp"

namespace tvvar {

// Gaussian weights over the normalized time axis for one estimation point.
// Weights are peak-normalized: the value at zero distance is exactly 1, so
// the density prefactor (constant across observations) is dropped.
struct KernelWeights {
  double est_point = 0.0;
  double bandwidth = 0.0;
  Eigen::VectorXd weights;
  double n_util = 0.0;  // sum of weights
};

KernelWeights kernel_weights(double est_point, const Eigen::VectorXd& times, double bandwidth);

double effective_sample_size(const KernelWeights& w);

}  // namespace tvvar
