#include "tvvar/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace tvvar {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan"; }

double parse_value_cell(const std::string& s, long row, const std::string& col) {
  if (is_missing_token(s)) return std::numeric_limits<double>::quiet_NaN();
  double v;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e)
    throw DataError("non-numeric cell '" + s + "' in column '" + col + "' at data row " +
                    std::to_string(row + 1));
  return v;
}

long parse_index_cell(const std::string& s, long row, const std::string& col) {
  if (is_missing_token(s))
    throw DataError("missing value in column '" + col + "' at data row " + std::to_string(row + 1));
  long v;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e)
    throw DataError("column '" + col + "' must hold integers; got '" + s + "' at data row " +
                    std::to_string(row + 1));
  if (v <= 0)
    throw DataError("column '" + col + "' must hold positive integers; got '" + s +
                    "' at data row " + std::to_string(row + 1));
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Eigen::VectorXd TimeSeriesDataset::occasion_times() const {
  if (time_norm) return *time_norm;
  const long nn = n();
  Eigen::VectorXd t(nn);
  for (long i = 0; i < nn; ++i) t(i) = static_cast<double>(i) / static_cast<double>(nn - 1);
  return t;
}

void TimeSeriesDataset::validate() const {
  if (n() < 2) throw DataError("dataset needs at least 2 measurement occasions");
  if (p() < 1) throw DataError("dataset needs at least 1 variable");
  if (static_cast<long>(labels.size()) != p()) throw DataError("label count does not match variable count");
  if (beep.has_value() != day.has_value())
    throw DataError("beep and day columns must be supplied together");
  if (beep && (static_cast<long>(beep->size()) != n() || static_cast<long>(day->size()) != n()))
    throw DataError("beep/day length does not match occasion count");
  if (time_norm) {
    if (time_norm->size() != n()) throw DataError("time column length does not match occasion count");
    for (long i = 0; i < n(); ++i) {
      const double t = (*time_norm)(i);
      if (!(t >= 0.0 && t <= 1.0)) throw DataError("normalized timestamps must lie in [0,1]");
      if (i > 0 && t < (*time_norm)(i - 1) - 1e-12)
        throw DataError("normalized timestamps must be non-decreasing");
    }
  }
}

TimeSeriesDataset load_csv(const std::string& path, const ColumnRoles& roles) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw DataError("missing header row in " + path);

  std::unordered_map<std::string, int> col_index;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (col_index.count(header[i])) throw DataError("duplicate column name '" + header[i] + "'");
    col_index[header[i]] = i;
  }
  auto require_column = [&](const std::string& name) {
    auto it = col_index.find(name);
    if (it == col_index.end()) throw DataError("column '" + name + "' not found in " + path);
    return it->second;
  };

  int time_idx = roles.time_column ? require_column(*roles.time_column) : -1;
  int beep_idx = roles.beep_column ? require_column(*roles.beep_column) : -1;
  int day_idx = roles.day_column ? require_column(*roles.day_column) : -1;
  if ((beep_idx >= 0) != (day_idx >= 0))
    throw DataError("beep and day columns must be supplied together");

  std::vector<int> value_idx;
  std::vector<std::string> labels;
  if (!roles.value_columns.empty()) {
    for (const auto& name : roles.value_columns) {
      int idx = require_column(name);
      if (idx == time_idx || idx == beep_idx || idx == day_idx)
        throw DataError("column '" + name + "' assigned to two roles");
      value_idx.push_back(idx);
      labels.push_back(name);
    }
  } else {
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
      if (i == time_idx || i == beep_idx || i == day_idx) continue;
      value_idx.push_back(i);
      labels.push_back(header[i]);
    }
  }
  if (value_idx.empty()) throw DataError("no value columns declared in " + path);

  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  std::vector<long> beeps, days;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_fields(line);
    if (fields.size() < header.size())
      throw DataError("data row " + std::to_string(rows.size() + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    const long r = static_cast<long>(rows.size());
    std::vector<double> vals(value_idx.size());
    for (std::size_t j = 0; j < value_idx.size(); ++j)
      vals[j] = parse_value_cell(fields[value_idx[j]], r, labels[j]);
    rows.push_back(std::move(vals));
    if (time_idx >= 0) {
      if (is_missing_token(fields[time_idx]))
        throw DataError("missing timestamp at data row " + std::to_string(r + 1));
      times.push_back(parse_value_cell(fields[time_idx], r, header[time_idx]));
    }
    if (beep_idx >= 0) {
      beeps.push_back(parse_index_cell(fields[beep_idx], r, header[beep_idx]));
      days.push_back(parse_index_cell(fields[day_idx], r, header[day_idx]));
    }
  }
  if (rows.size() < 2) throw DataError("dataset needs at least 2 measurement occasions");

  TimeSeriesDataset data;
  data.values.resize(static_cast<long>(rows.size()), static_cast<long>(value_idx.size()));
  for (long i = 0; i < data.values.rows(); ++i)
    for (long j = 0; j < data.values.cols(); ++j) data.values(i, j) = rows[i][j];
  data.labels = std::move(labels);
  if (time_idx >= 0)
    data.time_norm = Eigen::Map<Eigen::VectorXd>(times.data(), static_cast<long>(times.size()));
  if (beep_idx >= 0) {
    data.beep = std::move(beeps);
    data.day = std::move(days);
  }
  data.validate();
  return data;
}

void write_csv(const TimeSeriesDataset& data, const std::string& path,
               const std::vector<std::string>& meta_lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& m : meta_lines) out << "# " << m << "\n";
  for (std::size_t j = 0; j < data.labels.size(); ++j) {
    if (j) out << ",";
    out << data.labels[j];
  }
  if (data.time_norm) out << ",time_norm";
  if (data.beep) out << ",beepno,dayno";
  out << "\n";
  for (long i = 0; i < data.n(); ++i) {
    for (long j = 0; j < data.p(); ++j) {
      if (j) out << ",";
      out << format_double(data.values(i, j));
    }
    if (data.time_norm) out << "," << format_double((*data.time_norm)(i));
    if (data.beep) out << "," << (*data.beep)[i] << "," << (*data.day)[i];
    out << "\n";
  }
  if (!out) throw DataError("failed while writing " + path);
}

LaggedDesign build_lagged_design(const TimeSeriesDataset& data, const std::vector<int>& lags) {
  data.validate();
  if (lags.empty()) throw ConfigError("lag set must not be empty");
  for (int l : lags)
    if (l <= 0) throw ConfigError("lags must be positive integers");
  if (lags != std::vector<int>{1})
    throw ConfigError("only the lag set {1} is supported");

  const long n = data.n();
  const long p = data.p();
  const Eigen::VectorXd times = data.occasion_times();

  std::vector<long> response_rows;
  for (long t = 1; t < n; ++t) {
    bool complete = true;
    for (long j = 0; j < p && complete; ++j)
      if (std::isnan(data.values(t, j)) || std::isnan(data.values(t - 1, j))) complete = false;
    if (!complete) continue;
    if (data.beep) {
      if ((*data.day)[t] != (*data.day)[t - 1]) continue;
      if ((*data.beep)[t] != (*data.beep)[t - 1] + 1) continue;
    }
    response_rows.push_back(t);
  }

  const long m = static_cast<long>(response_rows.size());
  if (m < p + 2)
    throw DataError("only " + std::to_string(m) + " consecutive row pairs available; need at least " +
                    std::to_string(p + 2) + " (p + 2) to identify the model");

  LaggedDesign design;
  design.predictors.resize(m, p);
  design.responses.resize(m, p);
  design.response_times.resize(m);
  design.response_occasions = response_rows;
  for (long r = 0; r < m; ++r) {
    const long t = response_rows[r];
    design.predictors.row(r) = data.values.row(t - 1);
    design.responses.row(r) = data.values.row(t);
    design.response_times(r) = times(t);
  }
  design.included_rows = m;
  design.total_rows = n - 1;
  design.labels = data.labels;
  return design;
}

LaggedDesign standardize(const LaggedDesign& design) {
  const long m = design.m();
  const long p = design.p();
  if (m < 2) throw DataError("standardization needs at least 2 rows");

  LaggedDesign out = design;
  out.scaling.identity = false;
  out.scaling.predictor_mean.resize(p);
  out.scaling.predictor_sd.resize(p);
  out.scaling.response_mean.resize(p);
  out.scaling.response_sd.resize(p);

  auto scale_columns = [&](Eigen::MatrixXd& mat, Eigen::VectorXd& mean, Eigen::VectorXd& sd,
                           const char* which) {
    for (long j = 0; j < p; ++j) {
      const double mu = mat.col(j).mean();
      const double ss = (mat.col(j).array() - mu).square().sum();
      const double s = std::sqrt(ss / static_cast<double>(m - 1));
      if (!(s > 0.0))
        throw DataError(std::string("zero-variance ") + which + " column '" + design.labels[j] +
                        "'; cannot standardize");
      mean(j) = mu;
      sd(j) = s;
      mat.col(j) = (mat.col(j).array() - mu) / s;
    }
  };
  scale_columns(out.predictors, out.scaling.predictor_mean, out.scaling.predictor_sd, "predictor");
  scale_columns(out.responses, out.scaling.response_mean, out.scaling.response_sd, "response");
  return out;
}

LaggedDesign apply_scaling(const LaggedDesign& design, const ColumnScaling& scaling) {
  if (scaling.identity) return design;
  const long p = design.p();
  if (scaling.predictor_mean.size() != p || scaling.response_mean.size() != p)
    throw DataError("scaling dimensions do not match the design");
  LaggedDesign out = design;
  out.scaling = scaling;
  for (long j = 0; j < p; ++j) {
    out.predictors.col(j) =
        (design.predictors.col(j).array() - scaling.predictor_mean(j)) / scaling.predictor_sd(j);
    out.responses.col(j) =
        (design.responses.col(j).array() - scaling.response_mean(j)) / scaling.response_sd(j);
  }
  return out;
}

}  // namespace tvvar
