#include "tvvar/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

namespace tvvar {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  long i = 0;
  for (const auto& x : arr) v(i++) = x.get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const long r = static_cast<long>(rows.size());
  if (r == 0) return {};
  const long c = static_cast<long>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (long i = 0; i < r; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<long>(row.size()) != c) throw DataError("ragged matrix in JSON document");
    for (long j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

json slices_to_json(const std::vector<Eigen::MatrixXd>& slices) {
  json arr = json::array();
  for (const auto& s : slices) arr.push_back(matrix_to_json(s));
  return arr;
}

std::vector<Eigen::MatrixXd> slices_from_json(const json& arr) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& s : arr) out.push_back(matrix_from_json(s));
  return out;
}

json scaling_to_json(const ColumnScaling& s) {
  json doc;
  doc["identity"] = s.identity;
  if (!s.identity) {
    doc["predictor_mean"] = vector_to_json(s.predictor_mean);
    doc["predictor_sd"] = vector_to_json(s.predictor_sd);
    doc["response_mean"] = vector_to_json(s.response_mean);
    doc["response_sd"] = vector_to_json(s.response_sd);
  }
  return doc;
}

ColumnScaling scaling_from_json(const json& doc) {
  ColumnScaling s;
  s.identity = doc.at("identity").get<bool>();
  if (!s.identity) {
    s.predictor_mean = vector_from_json(doc.at("predictor_mean"));
    s.predictor_sd = vector_from_json(doc.at("predictor_sd"));
    s.response_mean = vector_from_json(doc.at("response_mean"));
    s.response_sd = vector_from_json(doc.at("response_sd"));
  }
  return s;
}

}  // namespace

json model_to_json(const TimeVaryingVarModel& model) {
  json doc;
  doc["format"] = "tvvar-model";
  doc["method"] = method_tag(model.method);
  doc["est_points"] = vector_to_json(model.est_points);
  doc["labels"] = model.labels;
  doc["scaling"] = scaling_to_json(model.scaling);
  doc["intercepts"] = matrix_to_json(model.intercepts);
  doc["coeffs"] = slices_to_json(model.coeffs);
  if (model.bandwidth > 0.0)
    doc["bandwidth"] = model.bandwidth;
  else
    doc["bandwidth"] = nullptr;
  if (model.lambda.size() > 0)
    doc["lambda"] = matrix_to_json(model.lambda);
  else
    doc["lambda"] = nullptr;
  if (!model.band_lower.empty()) {
    doc["bands"] = {{"lower", slices_to_json(model.band_lower)},
                    {"upper", slices_to_json(model.band_upper)},
                    {"intercept_lower", matrix_to_json(model.band_intercept_lower)},
                    {"intercept_upper", matrix_to_json(model.band_intercept_upper)}};
  } else {
    doc["bands"] = nullptr;
  }
  doc["warnings"] = model.warnings;
  return doc;
}

TimeVaryingVarModel model_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "tvvar-model")
    throw DataError("not a model document (missing format tag)");
  TimeVaryingVarModel model;
  model.method = method_from_tag(doc.at("method").get<std::string>());
  model.est_points = vector_from_json(doc.at("est_points"));
  model.labels = doc.at("labels").get<std::vector<std::string>>();
  model.scaling = scaling_from_json(doc.at("scaling"));
  model.intercepts = matrix_from_json(doc.at("intercepts"));
  model.coeffs = slices_from_json(doc.at("coeffs"));
  if (!doc.at("bandwidth").is_null()) model.bandwidth = doc.at("bandwidth").get<double>();
  if (!doc.at("lambda").is_null()) model.lambda = matrix_from_json(doc.at("lambda"));
  if (!doc.at("bands").is_null()) {
    const auto& bands = doc.at("bands");
    model.band_lower = slices_from_json(bands.at("lower"));
    model.band_upper = slices_from_json(bands.at("upper"));
    model.band_intercept_lower = matrix_from_json(bands.at("intercept_lower"));
    model.band_intercept_upper = matrix_from_json(bands.at("intercept_upper"));
  }
  if (doc.contains("warnings")) model.warnings = doc.at("warnings").get<std::vector<std::string>>();

  const long p = model.intercepts.rows();
  const long E = model.est_points.size();
  if (model.intercepts.cols() != E || static_cast<long>(model.coeffs.size()) != E)
    throw DataError("model document dimensions are inconsistent");
  for (const auto& c : model.coeffs)
    if (c.rows() != p || c.cols() != p) throw DataError("model document dimensions are inconsistent");
  return model;
}

json truth_to_json(const CoefficientArray& truth) {
  json doc;
  doc["format"] = "tvvar-truth";
  doc["n"] = truth.n();
  doc["sigma"] = truth.sigma;
  doc["seed"] = truth.seed;
  doc["redraws"] = truth.redraws;
  json specs = json::array();
  for (const auto& row : truth.specs) {
    json jrow = json::array();
    for (const auto& spec : row)
      jrow.push_back({{"kind", fn_kind_name(spec.kind)}, {"theta", spec.theta}});
    specs.push_back(std::move(jrow));
  }
  doc["specs"] = specs;
  return doc;
}

CoefficientArray truth_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "tvvar-truth")
    throw DataError("not a truth document (missing format tag)");
  SpecsMatrix specs;
  for (const auto& jrow : doc.at("specs")) {
    std::vector<ParameterFunctionSpec> row;
    for (const auto& jspec : jrow) {
      ParameterFunctionSpec spec;
      spec.kind = fn_kind_from_name(jspec.at("kind").get<std::string>());
      spec.theta = jspec.at("theta").get<double>();
      row.push_back(spec);
    }
    specs.push_back(std::move(row));
  }
  CoefficientArray truth = render_coefficient_array(specs, doc.at("n").get<long>());
  truth.sigma = doc.at("sigma").get<double>();
  truth.seed = doc.at("seed").get<std::uint64_t>();
  truth.redraws = doc.value("redraws", 0);
  return truth;
}

json bootstrap_to_json(const BootstrapDistribution& dist) {
  json doc;
  doc["format"] = "tvvar-bootstrap";
  doc["method"] = dist.method_tag_name;
  doc["nB"] = dist.nB;
  doc["blocks"] = dist.blocks;
  doc["seeds"] = dist.seeds;
  doc["est_points"] = vector_to_json(dist.est_points);
  doc["labels"] = dist.labels;
  doc["failed"] = dist.failed;
  json ok = json::array();
  for (bool b : dist.replicate_ok) ok.push_back(b);
  doc["replicate_ok"] = ok;
  json samples = json::array();
  for (long r = 0; r < dist.nB; ++r) {
    if (dist.replicate_ok[static_cast<std::size_t>(r)]) {
      samples.push_back({{"coeffs", slices_to_json(dist.samples[static_cast<std::size_t>(r)])},
                         {"intercepts",
                          matrix_to_json(dist.intercept_samples[static_cast<std::size_t>(r)])}});
    } else {
      samples.push_back(nullptr);
    }
  }
  doc["samples"] = samples;
  json quant = json::object();
  for (const auto& [prob, slices] : dist.quantiles) {
    char key[32];
    std::snprintf(key, sizeof(key), "%.17g", prob);
    quant[key] = {{"coeffs", slices_to_json(slices)},
                  {"intercepts", matrix_to_json(dist.intercept_quantiles.at(prob))}};
  }
  doc["quantiles"] = quant;
  return doc;
}

void bootstrap_quantiles_to_csv(const BootstrapDistribution& dist, std::ostream& out) {
  out << "response,predictor,est_point,prob,value\n";
  char buf[64];
  for (const auto& [prob, slices] : dist.quantiles) {
    for (long e = 0; e < dist.est_points.size(); ++e) {
      const auto& q = slices[static_cast<std::size_t>(e)];
      for (long i = 0; i < q.rows(); ++i)
        for (long j = 0; j < q.cols(); ++j) {
          out << dist.labels[static_cast<std::size_t>(i)] << ','
              << dist.labels[static_cast<std::size_t>(j)] << ',';
          std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", dist.est_points(e), prob, q(i, j));
          out << buf << '\n';
        }
    }
  }
}

json prediction_report_to_json(const PredictionErrorReport& report) {
  json doc;
  doc["format"] = "tvvar-predict";
  doc["combine"] = report.combine == PredictionCombine::Weighted ? "weighted" : "closest";
  doc["labels"] = report.labels;
  doc["r2"] = vector_to_json(report.r2);
  doc["rmse"] = vector_to_json(report.rmse);
  doc["est_point_rmse"] = matrix_to_json(report.est_point_rmse);
  doc["est_point_r2"] = matrix_to_json(report.est_point_r2);
  doc["rows_used"] = report.rows_used;
  return doc;
}

void prediction_report_to_csv(const PredictionErrorReport& report, std::ostream& out) {
  out << "variable,rmse,r2\n";
  char buf[64];
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", report.rmse(static_cast<long>(i)),
                  report.r2(static_cast<long>(i)));
    out << report.labels[i] << ',' << buf << '\n';
  }
}

json evaluation_report_to_json(const EvaluationReport& report) {
  json doc;
  doc["format"] = "tvvar-evaluation";
  doc["iterations"] = report.iterations;
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"method", r.method},
                    {"n", r.n},
                    {"kind", r.kind},
                    {"stat", r.stat},
                    {"prob", r.prob},
                    {"value", r.value}});
  }
  doc["rows"] = rows;
  return doc;
}

EvaluationReport evaluation_report_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "tvvar-evaluation")
    throw DataError("not an evaluation document (missing format tag)");
  EvaluationReport report;
  report.iterations = doc.at("iterations").get<long>();
  for (const auto& jr : doc.at("rows")) {
    EvaluationRow r;
    r.method = jr.at("method").get<std::string>();
    r.n = jr.at("n").get<long>();
    r.kind = jr.at("kind").get<std::string>();
    r.stat = jr.at("stat").get<std::string>();
    r.prob = jr.at("prob").get<double>();
    r.value = jr.at("value").get<double>();
    report.rows.push_back(std::move(r));
  }
  return report;
}

void evaluation_report_to_csv(const EvaluationReport& report, std::ostream& out) {
  out << "method,n,kind,stat,prob,value\n";
  char buf[64];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.prob, r.value);
    out << r.method << ',' << r.n << ',' << r.kind << ',' << r.stat << ',' << buf << '\n';
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw DataError("invalid JSON in " + path + ": " + e.what());
  }
  return doc;
}

void write_json_file(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("failed while writing " + path);
}

}  // namespace tvvar
