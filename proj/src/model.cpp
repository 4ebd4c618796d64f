#include "tvvar/model.hpp"

namespace tvvar {

std::string method_display_name(Method m) {
  switch (m) {
    case Method::GLM: return "GLM";
    case Method::GLM_L1: return "GLM(L1)";
    case Method::KS: return "KS";
    case Method::KS_L1: return "KS(L1)";
    case Method::GAM: return "GAM";
    case Method::GAM_ST: return "GAM(st)";
  }
  throw ConfigError("unknown method");
}

std::string method_tag(Method m) {
  switch (m) {
    case Method::GLM: return "glm";
    case Method::GLM_L1: return "glm-l1";
    case Method::KS: return "ks";
    case Method::KS_L1: return "ks-l1";
    case Method::GAM: return "gam";
    case Method::GAM_ST: return "gam-st";
  }
  throw ConfigError("unknown method");
}

Method method_from_tag(const std::string& tag) {
  if (tag == "glm") return Method::GLM;
  if (tag == "glm-l1") return Method::GLM_L1;
  if (tag == "ks") return Method::KS;
  if (tag == "ks-l1") return Method::KS_L1;
  if (tag == "gam") return Method::GAM;
  if (tag == "gam-st") return Method::GAM_ST;
  throw ConfigError("unknown method '" + tag +
                    "'; expected one of glm, glm-l1, ks, ks-l1, gam, gam-st");
}

bool method_is_regularized(Method m) { return m == Method::GLM_L1 || m == Method::KS_L1; }

bool method_is_kernel(Method m) { return m == Method::KS || m == Method::KS_L1; }

bool method_is_time_varying(Method m) {
  return m == Method::KS || m == Method::KS_L1 || m == Method::GAM || m == Method::GAM_ST;
}

}  // namespace tvvar
