#include "tvvar/kernel.hpp"

namespace tvvar {

KernelWeights kernel_weights(double est_point, const Eigen::VectorXd& times, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  if (times.size() == 0) throw DataError("kernel weights requested for empty time vector");
  constexpr double eps = 1e-12;
  if (est_point < -eps || est_point > 1.0 + eps)
    throw ConfigError("estimation point must lie in [0,1]");
  if (times.minCoeff() < -eps || times.maxCoeff() > 1.0 + eps)
    throw DataError("timestamps must be normalized to [0,1]");

  KernelWeights out;
  out.est_point = est_point;
  out.bandwidth = bandwidth;
  const double denom = 2.0 * bandwidth * bandwidth;
  out.weights = ((times.array() - est_point).square() / -denom).exp();
  out.n_util = out.weights.sum();
  return out;
}

double effective_sample_size(const KernelWeights& w) { return w.weights.sum(); }

}  // namespace tvvar
