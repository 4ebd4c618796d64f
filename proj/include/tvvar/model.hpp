#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tvvar/common.hpp"
#include "tvvar/dataset.hpp"

namespace tvvar {

enum class Method { GLM, GLM_L1, KS, KS_L1, GAM, GAM_ST };

// Canonical display names: GLM, GLM(L1), KS, KS(L1), GAM, GAM(st).
std::string method_display_name(Method m);
// Stable lowercase tags used by the CLI and serialized files: glm, glm-l1,
// ks, ks-l1, gam, gam-st.
std::string method_tag(Method m);
Method method_from_tag(const std::string& tag);
bool method_is_regularized(Method m);
bool method_is_kernel(Method m);
bool method_is_time_varying(Method m);

// One VAR(1) fit: equation i regresses X_{t,i} on X_{t-1,1..p}.
// coeffs(i, j) is the effect of X_{t-1,j} on X_{t,i}.
struct VarCoefficients {
  Eigen::VectorXd intercepts;    // p
  Eigen::MatrixXd coeffs;        // p x p
  std::vector<double> lambda;    // per equation; empty when unregularized
};

// Sequence of local VAR(1) models over estimation points on [0,1].
// Stationary methods carry E identical slices.
struct TimeVaryingVarModel {
  Method method = Method::KS;
  Eigen::VectorXd est_points;            // E
  Eigen::MatrixXd intercepts;            // p x E
  std::vector<Eigen::MatrixXd> coeffs;   // E matrices, each p x p
  double bandwidth = 0.0;                // kernel methods; 0 = not applicable
  Eigen::MatrixXd lambda;                // p x E; 0 x 0 when unregularized
  std::vector<std::string> labels;       // p
  ColumnScaling scaling;                 // scaling under which the fit ran

  // Pointwise 95% credible bands (spline methods only; empty otherwise).
  // Index [e](i, j): band for coeffs[e](i, j); *_intercept p x E.
  std::vector<Eigen::MatrixXd> band_lower, band_upper;
  Eigen::MatrixXd band_intercept_lower, band_intercept_upper;

  std::vector<std::string> warnings;  // fit diagnostics worth surfacing

  long E() const { return est_points.size(); }
  long p() const { return intercepts.rows(); }
};

}  // namespace tvvar
