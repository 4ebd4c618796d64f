#include "tvvar/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "tvvar/common.hpp"
#include "tvvar/dataset.hpp"
#include "tvvar/evaluation.hpp"
#include "tvvar/inference.hpp"
#include "tvvar/ks_estimator.hpp"
#include "tvvar/model_io.hpp"
#include "tvvar/simulation.hpp"
#include "tvvar/svg.hpp"

namespace tvvar {

namespace {

using nlohmann::json;

constexpr const char* kDataHelp = "input CSV path";
constexpr const char* kVarsHelp =
    "comma-separated value columns (default: every column without a role)";
constexpr const char* kTimeHelp =
    "time column with values in [0,1] (default: auto-detect 'time_norm'; 'none' disables)";
constexpr const char* kBeepHelp =
    "beep index column (default: auto-detect 'beepno'; 'none' disables)";
constexpr const char* kDayHelp =
    "day index column (default: auto-detect 'dayno'; 'none' disables)";
constexpr const char* kLambdaFoldsHelp = "cross-validation folds for the lasso penalty";
constexpr const char* kLambdaPathHelp = "lasso penalty path length";

const std::vector<OptionSpec> kSchema = {
    {"*", "config", 's', false, "", "JSON config file; command-line flags take precedence"},
    {"*", "seed", 'u', false, "1", "master random seed"},
    {"*", "threads", 'i', false, "0",
     "worker thread cap; 1 forces the serial path, 0 uses all cores"},

    {"simulate", "preset", 's', false, "sim-a",
     "scenario preset: sim-a (random graph, p=10) or sim-b (upper-triangular, p=20)"},
    {"simulate", "n", 'l', true, "", "number of time points"},
    {"simulate", "p", 'i', false, "0", "variable count override (0 keeps the preset default)"},
    {"simulate", "edges", 'i', false, "26", "off-diagonal edges for the random-graph preset"},
    {"simulate", "theta", 'd', false, "0.35", "peak absolute coefficient value"},
    {"simulate", "sigma", 'd', false, "0.31622776601683794", "innovation standard deviation"},
    {"simulate", "max-redraws", 'i', false, "1000", "stability redraw budget before giving up"},
    {"simulate", "data-out", 's', true, "", "output CSV path for the simulated series"},
    {"simulate", "truth-out", 's', true, "",
     "output JSON path for the generating coefficient functions"},

    {"fit", "data", 's', true, "", kDataHelp},
    {"fit", "vars", 's', false, "", kVarsHelp},
    {"fit", "time-col", 's', false, "", kTimeHelp},
    {"fit", "beep-col", 's', false, "", kBeepHelp},
    {"fit", "day-col", 's', false, "", kDayHelp},
    {"fit", "method", 's', true, "", "glm | glm-l1 | ks | ks-l1 | gam | gam-st"},
    {"fit", "bandwidth", 'd', false, "0",
     "kernel bandwidth on the [0,1] time axis (ks and ks-l1 only)"},
    {"fit", "bwselect", 'f', false, "false",
     "select the kernel bandwidth by cross-validation before fitting"},
    {"fit", "estpoints", 'i', false, "0",
     "equispaced estimation points (0 = 20 for time-varying methods, 1 otherwise)"},
    {"fit", "k", 'i', false, "0", "spline basis dimension per smooth (0 = automatic)"},
    {"fit", "lambda-folds", 'i', false, "10", kLambdaFoldsHelp},
    {"fit", "lambda-path", 'i', false, "50", kLambdaPathHelp},
    {"fit", "model-out", 's', true, "", "output JSON path for the fitted model"},

    {"bwselect", "data", 's', true, "", kDataHelp},
    {"bwselect", "vars", 's', false, "", kVarsHelp},
    {"bwselect", "time-col", 's', false, "", kTimeHelp},
    {"bwselect", "beep-col", 's', false, "", kBeepHelp},
    {"bwselect", "day-col", 's', false, "", kDayHelp},
    {"bwselect", "method", 's', false, "ks-l1",
     "kernel method whose prediction error drives selection: ks | ks-l1"},
    {"bwselect", "grid", 's', false, "",
     "comma-separated candidate bandwidths (default: 10 equispaced values in [0.01, 1])"},
    {"bwselect", "folds", 'i', false, "10", "number of time-stratified folds"},
    {"bwselect", "foldsize", 'i', false, "0", "test occasions per fold (0 = automatic rule)"},
    {"bwselect", "lambda-folds", 'i', false, "10", kLambdaFoldsHelp},
    {"bwselect", "lambda-path", 'i', false, "50", kLambdaPathHelp},
    {"bwselect", "table-out", 's', true, "", "output CSV path for the candidate error table"},

    {"resample", "data", 's', true, "", kDataHelp},
    {"resample", "vars", 's', false, "", kVarsHelp},
    {"resample", "time-col", 's', false, "", kTimeHelp},
    {"resample", "beep-col", 's', false, "", kBeepHelp},
    {"resample", "day-col", 's', false, "", kDayHelp},
    {"resample", "method", 's', true, "", "glm | glm-l1 | ks | ks-l1 | gam | gam-st"},
    {"resample", "bandwidth", 'd', false, "0",
     "kernel bandwidth on the [0,1] time axis (ks and ks-l1 only)"},
    {"resample", "estpoints", 'i', false, "0",
     "equispaced estimation points (0 = 20 for time-varying methods, 1 otherwise)"},
    {"resample", "k", 'i', false, "0", "spline basis dimension per smooth (0 = automatic)"},
    {"resample", "lambda-folds", 'i', false, "10", kLambdaFoldsHelp},
    {"resample", "lambda-path", 'i', false, "50", kLambdaPathHelp},
    {"resample", "nb", 'l', false, "50", "number of bootstrap replicates"},
    {"resample", "blocks", 'i', false, "10", "number of contiguous blocks to resample"},
    {"resample", "quantiles", 's', false, "0.05,0.95",
     "comma-separated quantile probabilities to summarize the replicates"},
    {"resample", "boot-out", 's', true, "", "output JSON path for the bootstrap distribution"},
    {"resample", "boot-csv", 's', false, "",
     "optional long-format CSV path for the bootstrap quantiles"},

    {"predict", "data", 's', true, "", kDataHelp},
    {"predict", "vars", 's', false, "", kVarsHelp},
    {"predict", "time-col", 's', false, "", kTimeHelp},
    {"predict", "beep-col", 's', false, "", kBeepHelp},
    {"predict", "day-col", 's', false, "", kDayHelp},
    {"predict", "model", 's', true, "", "fitted model JSON path"},
    {"predict", "tv-method", 's', false, "weighted",
     "time-varying prediction combination: weighted | closest | both"},
    {"predict", "pred-out", 's', true, "", "output CSV path for per-variable errors"},
    {"predict", "pred-json", 's', false, "", "optional JSON report path"},

    {"evaluate", "models", 's', true, "", "comma-separated model JSON paths"},
    {"evaluate", "truths", 's', true, "",
     "comma-separated truth JSON paths, paired with --models"},
    {"evaluate", "probs", 's', false, "0.25,0.75",
     "quantile probabilities for the error summaries"},
    {"evaluate", "report-out", 's', true, "", "output CSV path for the long-format report"},
    {"evaluate", "json-out", 's', false, "", "optional JSON report path"},
    {"evaluate", "plots", 'f', false, "false", "emit SVG figures"},
    {"evaluate", "plot-dir", 's', false, ".", "directory for emitted figures"},
};

const std::vector<std::string> kCommands = {"simulate", "fit",     "bwselect",
                                            "resample", "predict", "evaluate"};

const char* command_description(const std::string& cmd) {
  if (cmd == "simulate") return "generate a time-varying VAR dataset and its ground truth";
  if (cmd == "fit") return "fit a stationary or time-varying VAR model";
  if (cmd == "bwselect") return "select a kernel bandwidth by time-stratified cross-validation";
  if (cmd == "resample") return "block-bootstrap the sampling distribution of a fit";
  if (cmd == "predict") return "compute within-sample prediction errors of a fitted model";
  if (cmd == "evaluate") return "compare fitted models against ground truths";
  return "";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) {
      out.emplace_back();
      continue;
    }
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

json parse_typed(const OptionSpec& spec, const std::string& text) {
  const std::string where = std::string("option --") + spec.key;
  switch (spec.type) {
    case 's':
      return text;
    case 'f': {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0" || text.empty()) return false;
      throw ConfigError(where + ": expected a boolean, got '" + text + "'");
    }
    case 'i':
    case 'l': {
      long v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size())
        throw ConfigError(where + ": expected an integer, got '" + text + "'");
      return v;
    }
    case 'u': {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size())
        throw ConfigError(where + ": expected a non-negative integer, got '" + text + "'");
      return v;
    }
    case 'd': {
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size() || text.empty())
        throw ConfigError(where + ": expected a number, got '" + text + "'");
      return v;
    }
  }
  throw ConfigError(where + ": unknown option type");
}

json coerce_file_value(const OptionSpec& spec, const json& value) {
  const std::string where = std::string("config key '") + spec.key + "'";
  switch (spec.type) {
    case 's':
      if (value.is_string() || value.is_array()) return value;
      throw ConfigError(where + ": expected a string");
    case 'f':
      if (value.is_boolean()) return value;
      throw ConfigError(where + ": expected a boolean");
    case 'i':
    case 'l':
      if (value.is_number_integer() || value.is_number_unsigned()) return value.get<long>();
      throw ConfigError(where + ": expected an integer");
    case 'u':
      if (value.is_number_unsigned()) return value.get<std::uint64_t>();
      if (value.is_number_integer() && value.get<long long>() >= 0)
        return static_cast<std::uint64_t>(value.get<long long>());
      throw ConfigError(where + ": expected a non-negative integer");
    case 'd':
      if (value.is_number()) return value.get<double>();
      throw ConfigError(where + ": expected a number");
  }
  throw ConfigError(where + ": unknown option type");
}

std::vector<const OptionSpec*> schema_for(const std::string& command) {
  std::vector<const OptionSpec*> out;
  for (const auto& spec : kSchema)
    if (spec.command == command || std::string(spec.command) == "*") out.push_back(&spec);
  return out;
}

std::string config_hash_hex(const json& doc) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(doc.dump())));
  return buf;
}

std::vector<std::string> meta_lines(const RunConfig& cfg) {
  return {std::string("tool: ") + kToolName + " " + kToolVersion, "command: " + cfg.command,
          "seed: " + std::to_string(cfg.seed), "config: " + config_hash_hex(cfg.doc)};
}

json meta_object(const RunConfig& cfg) {
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"command", cfg.command},
          {"seed", cfg.seed},
          {"config", config_hash_hex(cfg.doc)}};
}

void write_meta_prefix(std::ostream& out, const RunConfig& cfg) {
  for (const auto& line : meta_lines(cfg)) out << "# " << line << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  return out;
}

ExecutionPolicy exec_policy(const RunConfig& cfg) {
  const long threads = cfg.integer("threads");
  if (threads == 1) return ExecutionPolicy::Serial;
#ifdef _OPENMP
  if (threads > 1) omp_set_num_threads(static_cast<int>(threads));
#endif
  return ExecutionPolicy::Parallel;
}

ColumnRoles resolve_roles(const RunConfig& cfg, const std::string& data_path) {
  std::ifstream in(data_path);
  if (!in) throw DataError("cannot open file: " + data_path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] != '#') break;
  }
  std::set<std::string> header;
  for (const auto& name : split_list(line)) header.insert(name);

  auto pick = [&](const char* key, const char* auto_name) -> std::optional<std::string> {
    const std::string v = cfg.str_or(key, "");
    if (v == "none") return std::nullopt;
    if (!v.empty()) return v;
    if (header.count(auto_name)) return std::string(auto_name);
    return std::nullopt;
  };

  ColumnRoles roles;
  roles.time_column = pick("time-col", "time_norm");
  roles.beep_column = pick("beep-col", "beepno");
  roles.day_column = pick("day-col", "dayno");
  const std::string vars = cfg.str_or("vars", "");
  if (!vars.empty())
    for (const auto& v : cfg.string_list("vars")) roles.value_columns.push_back(v);
  return roles;
}

TimeSeriesDataset load_input(const RunConfig& cfg) {
  const std::string path = cfg.str("data");
  return load_csv(path, resolve_roles(cfg, path));
}

std::vector<double> cli_bandwidth_grid() {
  std::vector<double> grid(10);
  for (int i = 0; i < 10; ++i) grid[i] = 0.01 + i * (1.0 - 0.01) / 9.0;
  return grid;
}

void report_bandwidth_choice(const BandwidthSelection& sel) {
  std::printf("Selected bandwidth: %.6g (folds=%d, foldsize=%d)\n", sel.b_hat, sel.folds,
              sel.foldsize);
  if (sel.b_hat_on_grid_edge)
    std::printf(
        "warning: the selected bandwidth %.6g lies on the boundary of the candidate grid; "
        "another search with an extended grid should be conducted\n",
        sel.b_hat);
}

ModelSpec spec_from_config(const RunConfig& cfg, const TimeSeriesDataset& data,
                           bool allow_bwselect) {
  ModelSpec spec;
  spec.method = method_from_tag(cfg.str("method"));
  long E = cfg.integer("estpoints");
  if (E <= 0) E = method_is_time_varying(spec.method) ? 20 : 1;
  spec.est_points = equispaced_est_points(E);
  spec.seed = cfg.seed;
  spec.k = static_cast<int>(cfg.integer("k"));
  spec.options.cv_folds = static_cast<int>(cfg.integer("lambda-folds"));
  spec.options.n_lambda = static_cast<int>(cfg.integer("lambda-path"));
  spec.options.exec = exec_policy(cfg);

  const double bandwidth = cfg.number("bandwidth");
  const bool bwselect = allow_bwselect && cfg.flag("bwselect");
  if (method_is_kernel(spec.method)) {
    if (bwselect) {
      const LaggedDesign design = standardize(build_lagged_design(data, {1}));
      const BandwidthSelection sel =
          select_bandwidth(design, cli_bandwidth_grid(), 10, 0,
                           method_is_regularized(spec.method), cfg.seed, spec.options);
      report_bandwidth_choice(sel);
      spec.bandwidth = sel.b_hat;
    } else if (bandwidth > 0.0) {
      spec.bandwidth = bandwidth;
    } else {
      throw ConfigError("method '" + method_tag(spec.method) +
                        "' needs --bandwidth or --bwselect");
    }
  } else {
    if (bandwidth > 0.0 || bwselect)
      throw ConfigError("--bandwidth and --bwselect apply to kernel methods only");
  }
  return spec;
}

void print_model_warnings(const TimeVaryingVarModel& model) {
  for (const auto& w : model.warnings) std::printf("warning: %s\n", w.c_str());
}

void cmd_simulate(const RunConfig& cfg) {
  const std::string preset = cfg.str("preset");
  ScenarioConfig config;
  if (preset == "sim-a") {
    config.structure = ScenarioConfig::Structure::RandomGraph;
    config.p = 10;
  } else if (preset == "sim-b") {
    config.structure = ScenarioConfig::Structure::UpperTriangular;
    config.p = 20;
  } else {
    throw ConfigError("unknown preset '" + preset + "' (expected sim-a or sim-b)");
  }
  const long p_override = cfg.integer("p");
  if (p_override > 0) config.p = static_cast<int>(p_override);
  config.n_edges = static_cast<int>(cfg.integer("edges"));
  config.theta = cfg.number("theta");
  config.sigma = cfg.number("sigma");
  config.n = cfg.integer("n");
  config.seed = cfg.seed;
  config.max_redraws = static_cast<int>(cfg.integer("max-redraws"));

  const CoefficientArray truth = generate_stable_coefficients(config);
  const TimeSeriesDataset data = simulate_tv_var(truth, config.sigma, mix_seed(cfg.seed, std::uint64_t{0xAB5EED}));

  write_csv(data, cfg.str("data-out"), meta_lines(cfg));
  json truth_doc = truth_to_json(truth);
  truth_doc["meta"] = meta_object(cfg);
  write_json_file(truth_doc, cfg.str("truth-out"));

  long nonzero = 0;
  const long p = static_cast<long>(truth.specs.size());
  for (const auto& row : truth.specs)
    for (const auto& spec : row)
      if (spec.kind != FnKind::Zero) ++nonzero;
  std::printf("Wrote %ld x %ld series to %s\n", data.n(), data.p(), cfg.str("data-out").c_str());
  std::printf("Stability redraws: %d\n", truth.redraws);
  std::printf("Nonzero parameter functions: %ld / %ld (density %.4g)\n", nonzero, p * p,
              static_cast<double>(nonzero) / static_cast<double>(p * p));
}

void cmd_fit(const RunConfig& cfg) {
  const TimeSeriesDataset data = load_input(cfg);
  const ModelSpec spec = spec_from_config(cfg, data, true);

  const LaggedDesign design = build_lagged_design(data, {1});
  std::printf("Rows included in VAR design matrix: %ld / %ld\n", design.m(), design.total_rows);

  const TimeVaryingVarModel model = fit_model(data, spec);
  print_model_warnings(model);

  json doc = model_to_json(model);
  doc["meta"] = meta_object(cfg);
  write_json_file(doc, cfg.str("model-out"));
  std::printf("Wrote model (%s, E=%ld) to %s\n", method_display_name(model.method).c_str(),
              model.E(), cfg.str("model-out").c_str());
}

void cmd_bwselect(const RunConfig& cfg) {
  const std::string method_tag_text = cfg.str("method");
  const Method method = method_from_tag(method_tag_text);
  if (!method_is_kernel(method))
    throw ConfigError("--method must be a kernel method (ks or ks-l1), got '" + method_tag_text +
                      "'");

  const TimeSeriesDataset data = load_input(cfg);
  const LaggedDesign design = standardize(build_lagged_design(data, {1}));

  std::vector<double> grid;
  if (!cfg.str_or("grid", "").empty()) {
    grid = cfg.number_list("grid");
  } else {
    grid = cli_bandwidth_grid();
  }

  FitOptions opt;
  opt.cv_folds = static_cast<int>(cfg.integer("lambda-folds"));
  opt.n_lambda = static_cast<int>(cfg.integer("lambda-path"));
  opt.exec = exec_policy(cfg);

  const BandwidthSelection sel =
      select_bandwidth(design, grid, static_cast<int>(cfg.integer("folds")),
                       static_cast<int>(cfg.integer("foldsize")),
                       method_is_regularized(method), cfg.seed, opt);
  report_bandwidth_choice(sel);

  auto out = open_output(cfg.str("table-out"));
  write_meta_prefix(out, cfg);
  out << "# selected: ";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", sel.b_hat);
  out << buf << '\n';
  out << "bandwidth,mean_abs_error\n";
  for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", sel.candidates[i], sel.mean_abs_error[i]);
    out << buf << '\n';
  }
}

void cmd_resample(const RunConfig& cfg) {
  const TimeSeriesDataset data = load_input(cfg);
  const ModelSpec spec = spec_from_config(cfg, data, false);

  const long nB = cfg.integer("nb");
  if (nB < 1) throw ConfigError("--nb must be at least 1");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(nB));
  for (long r = 0; r < nB; ++r)
    seeds[static_cast<std::size_t>(r)] = mix_seed(cfg.seed, static_cast<std::uint64_t>(r));

  std::vector<double> probs = cfg.number_list("quantiles");
  const BootstrapDistribution dist =
      block_bootstrap(data, spec, nB, static_cast<int>(cfg.integer("blocks")), seeds, probs,
                      exec_policy(cfg));

  json doc = bootstrap_to_json(dist);
  doc["meta"] = meta_object(cfg);
  write_json_file(doc, cfg.str("boot-out"));

  const std::string csv_path = cfg.str_or("boot-csv", "");
  if (!csv_path.empty()) {
    auto out = open_output(csv_path);
    write_meta_prefix(out, cfg);
    bootstrap_quantiles_to_csv(dist, out);
  }
  std::printf("Bootstrap replicates: %ld ok / %ld (failed %ld)\n", nB - dist.failed, nB,
              dist.failed);
}

void write_predict_csv(std::ostream& out, const std::vector<PredictionErrorReport>& reports,
                       const std::vector<std::string>& names) {
  out << "variable";
  for (const auto& name : names) out << ",rmse_" << name << ",r2_" << name;
  out << '\n';
  char buf[64];
  const auto& labels = reports.front().labels;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels[i];
    for (const auto& rep : reports) {
      std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", rep.rmse(static_cast<long>(i)),
                    rep.r2(static_cast<long>(i)));
      out << buf;
    }
    out << '\n';
  }
}

void cmd_predict(const RunConfig& cfg) {
  const TimeVaryingVarModel model = model_from_json(load_json_file(cfg.str("model")));
  const TimeSeriesDataset data = load_input(cfg);

  const std::string tv_method = cfg.str("tv-method");
  std::vector<PredictionCombine> combines;
  if (tv_method == "weighted")
    combines = {PredictionCombine::Weighted};
  else if (tv_method == "closest")
    combines = {PredictionCombine::Closest};
  else if (tv_method == "both")
    combines = {PredictionCombine::Weighted, PredictionCombine::Closest};
  else
    throw ConfigError("--tv-method must be weighted, closest, or both");

  std::vector<PredictionErrorReport> reports;
  std::vector<std::string> names;
  for (PredictionCombine combine : combines) {
    reports.push_back(compute_prediction_errors(model, data, combine));
    names.push_back(combine == PredictionCombine::Weighted ? "weighted" : "closest");
  }

  for (std::size_t c = 0; c < reports.size(); ++c) {
    std::printf("%s predictions (%ld rows):\n", names[c].c_str(), reports[c].rows_used);
    std::printf("%-16s %10s %10s\n", "variable", "RMSE", "R2");
    for (std::size_t i = 0; i < reports[c].labels.size(); ++i)
      std::printf("%-16s %10.4f %10.4f\n", reports[c].labels[i].c_str(),
                  reports[c].rmse(static_cast<long>(i)), reports[c].r2(static_cast<long>(i)));
  }

  {
    auto out = open_output(cfg.str("pred-out"));
    write_meta_prefix(out, cfg);
    if (reports.size() == 1)
      prediction_report_to_csv(reports.front(), out);
    else
      write_predict_csv(out, reports, names);
  }
  const std::string json_path = cfg.str_or("pred-json", "");
  if (!json_path.empty()) {
    json doc;
    doc["format"] = "tvvar-predict-set";
    doc["meta"] = meta_object(cfg);
    for (std::size_t c = 0; c < reports.size(); ++c)
      doc[names[c]] = prediction_report_to_json(reports[c]);
    write_json_file(doc, json_path);
  }
}

void cmd_evaluate(const RunConfig& cfg) {
  const std::vector<std::string> model_paths = cfg.string_list("models");
  const std::vector<std::string> truth_paths = cfg.string_list("truths");
  if (model_paths.empty()) throw ConfigError("--models is empty");
  if (model_paths.size() != truth_paths.size())
    throw ConfigError("--models and --truths list different numbers of files");

  const std::vector<double> probs = cfg.number_list("probs");

  struct GroupKey {
    std::string method;
    long n;
    bool operator<(const GroupKey& o) const {
      return method != o.method ? method < o.method : n < o.n;
    }
  };
  struct Group {
    std::vector<ErrorSample> samples;
    std::vector<StructureRecovery> recovery;
  };
  std::map<GroupKey, Group> groups;

  for (std::size_t i = 0; i < model_paths.size(); ++i) {
    const TimeVaryingVarModel model = model_from_json(load_json_file(model_paths[i]));
    const CoefficientArray truth = truth_from_json(load_json_file(truth_paths[i]));
    GroupKey key{method_display_name(model.method), truth.n()};
    Group& g = groups[key];
    g.samples.push_back({absolute_error(model, truth), truth.specs});
    g.recovery.push_back(structure_recovery(model, truth));
  }

  EvaluationReport report;
  report.iterations = static_cast<long>(model_paths.size());
  for (const auto& [key, group] : groups) {
    for (const auto& stats : aggregate_errors(group.samples, probs)) {
      report.rows.push_back({key.method, key.n, stats.kind, "mean", 0.0, stats.mean});
      for (const auto& [prob, q] : stats.quantiles)
        report.rows.push_back({key.method, key.n, stats.kind, "quantile", prob, q});
      report.rows.push_back({key.method, key.n, stats.kind, "count", 0.0,
                             static_cast<double>(stats.n_parameters)});
    }
    double sens = 0.0, prec = 0.0;
    long prec_defined = 0;
    for (const auto& r : group.recovery) {
      sens += r.sensitivity;
      if (r.precision_defined) {
        prec += r.precision;
        ++prec_defined;
      }
    }
    const double denom = static_cast<double>(group.recovery.size());
    report.rows.push_back({key.method, key.n, "", "sensitivity", 0.0, sens / denom});
    if (prec_defined > 0)
      report.rows.push_back(
          {key.method, key.n, "", "precision", 0.0, prec / static_cast<double>(prec_defined)});
    report.rows.push_back({key.method, key.n, "", "precision_defined", 0.0,
                           static_cast<double>(prec_defined) / denom});
  }

  {
    auto out = open_output(cfg.str("report-out"));
    write_meta_prefix(out, cfg);
    evaluation_report_to_csv(report, out);
  }
  const std::string json_path = cfg.str_or("json-out", "");
  if (!json_path.empty()) {
    json doc = evaluation_report_to_json(report);
    doc["meta"] = meta_object(cfg);
    write_json_file(doc, json_path);
  }

  if (cfg.flag("plots")) {
    const std::string dir = cfg.str_or("plot-dir", ".");
    // kind -> method -> (n -> value), all std::map so file bytes are stable
    std::map<std::string, std::map<std::string, std::map<long, double>>> error_curves;
    std::map<std::string, std::map<std::string, std::map<long, double>>> structure_curves;
    for (const auto& row : report.rows) {
      if (row.stat == "mean" && !row.kind.empty())
        error_curves[row.kind][row.method][row.n] = row.value;
      if (row.stat == "sensitivity" || row.stat == "precision")
        structure_curves[row.stat][row.method][row.n] = row.value;
    }
    auto plot_curves = [&](const std::map<std::string, std::map<long, double>>& curves,
                           const std::string& title, const std::string& ylabel,
                           const std::string& path) {
      SvgFigure fig(title, "n", ylabel);
      fig.set_log_x(true);
      for (const auto& [method, points] : curves) {
        std::vector<double> xs, ys;
        for (const auto& [n, v] : points) {
          xs.push_back(static_cast<double>(n));
          ys.push_back(v);
        }
        fig.add_line(xs, ys, method);
        fig.add_points(xs, ys, "");
      }
      fig.save(path);
      std::printf("Wrote %s\n", path.c_str());
    };
    for (const auto& [kind, curves] : error_curves)
      plot_curves(curves, "Mean absolute estimation error: " + kind, "mean absolute error",
                  dir + "/error_" + kind + ".svg");
    for (const auto& [stat, curves] : structure_curves)
      plot_curves(curves, "Structure recovery: " + stat, stat, dir + "/structure_" + stat + ".svg");
  }
  std::printf("Evaluated %ld model/truth pairs into %ld report rows\n", report.iterations,
              static_cast<long>(report.rows.size()));
}

}  // namespace

const std::vector<OptionSpec>& cli_schema() { return kSchema; }

std::vector<std::string> cli_command_names() { return kCommands; }

bool RunConfig::has(const std::string& key) const { return doc.contains(key); }

std::string RunConfig::str(const std::string& key) const {
  if (!doc.contains(key)) throw ConfigError("missing required option --" + key);
  const auto& v = doc.at(key);
  if (!v.is_string()) throw ConfigError("option --" + key + " is not a string");
  return v.get<std::string>();
}

std::string RunConfig::str_or(const std::string& key, const std::string& fallback) const {
  if (!doc.contains(key)) return fallback;
  return str(key);
}

long RunConfig::integer(const std::string& key) const {
  if (!doc.contains(key)) throw ConfigError("missing required option --" + key);
  const auto& v = doc.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ConfigError("option --" + key + " is not an integer");
  return v.get<long>();
}

std::uint64_t RunConfig::uinteger(const std::string& key) const {
  if (!doc.contains(key)) throw ConfigError("missing required option --" + key);
  const auto& v = doc.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError("option --" + key + " is not a non-negative integer");
}

double RunConfig::number(const std::string& key) const {
  if (!doc.contains(key)) throw ConfigError("missing required option --" + key);
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ConfigError("option --" + key + " is not a number");
  return v.get<double>();
}

bool RunConfig::flag(const std::string& key) const {
  if (!doc.contains(key)) return false;
  const auto& v = doc.at(key);
  if (!v.is_boolean()) throw ConfigError("option --" + key + " is not a boolean");
  return v.get<bool>();
}

std::vector<double> RunConfig::number_list(const std::string& key) const {
  if (!doc.contains(key)) throw ConfigError("missing required option --" + key);
  const auto& v = doc.at(key);
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("option --" + key + " has a non-numeric element");
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (!v.is_string()) throw ConfigError("option --" + key + " is not a list");
  for (const auto& item : split_list(v.get<std::string>())) {
    if (item.empty()) continue;
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (end != item.c_str() + item.size())
      throw ConfigError("option --" + key + ": '" + item + "' is not a number");
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError("option --" + key + " is empty");
  return out;
}

std::vector<std::string> RunConfig::string_list(const std::string& key) const {
  if (!doc.contains(key)) throw ConfigError("missing required option --" + key);
  const auto& v = doc.at(key);
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError("option --" + key + " has a non-string element");
      out.push_back(x.get<std::string>());
    }
    return out;
  }
  if (!v.is_string()) throw ConfigError("option --" + key + " is not a list");
  for (auto& item : split_list(v.get<std::string>()))
    if (!item.empty()) out.push_back(item);
  return out;
}

RunConfig merge_run_config(const std::string& command, const nlohmann::json& file_values,
                           const nlohmann::json& cli_values) {
  const auto schema = schema_for(command);
  RunConfig cfg;
  cfg.command = command;

  for (const auto* spec : schema)
    if (!spec->required && spec->default_value[0] != '\0')
      cfg.doc[spec->key] = parse_typed(*spec, spec->default_value);

  auto find_spec = [&](const std::string& key) -> const OptionSpec* {
    for (const auto* spec : schema)
      if (key == spec->key) return spec;
    return nullptr;
  };

  if (!file_values.is_null()) {
    if (!file_values.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : file_values.items()) {
      const OptionSpec* spec = find_spec(key);
      if (spec == nullptr)
        throw ConfigError("unknown config key '" + key + "' for command '" + command + "'");
      cfg.doc[key] = coerce_file_value(*spec, value);
    }
  }

  for (const auto& [key, value] : cli_values.items()) {
    const OptionSpec* spec = find_spec(key);
    if (spec == nullptr)
      throw ConfigError("unknown option '--" + key + "' for command '" + command + "'");
    cfg.doc[key] = value;
  }

  for (const auto* spec : schema)
    if (spec->required && !cfg.doc.contains(spec->key))
      throw ConfigError("missing required option --" + std::string(spec->key) + " for command '" +
                        command + "'");

  cfg.seed = cfg.uinteger("seed");
  return cfg;
}

int run_cli(int argc, char** argv) {
  CLI::App app{std::string(kToolName) + ": time-varying vector autoregression toolkit"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> text;
  std::map<std::string, std::map<std::string, bool>> flags;
  std::map<std::string, CLI::App*> subs;

  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd, command_description(cmd));
    subs[cmd] = sub;
    for (const auto* spec : schema_for(cmd)) {
      std::string help = spec->help;
      if (spec->required) help += " [required]";
      if (spec->type == 'f')
        sub->add_flag("--" + std::string(spec->key), flags[cmd][spec->key], help);
      else
        sub->add_option("--" + std::string(spec->key), text[cmd][spec->key], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    CLI::App* sub = subs.at(cmd);

    json cli_values = json::object();
    for (const auto* spec : schema_for(cmd)) {
      if (sub->count("--" + std::string(spec->key)) == 0) continue;
      if (spec->type == 'f')
        cli_values[spec->key] = flags[cmd][spec->key];
      else
        cli_values[spec->key] = parse_typed(*spec, text[cmd][spec->key]);
    }

    json file_values;
    if (cli_values.contains("config"))
      file_values = load_json_file(cli_values.at("config").get<std::string>());

    const RunConfig cfg = merge_run_config(cmd, file_values, cli_values);

    if (cmd == "simulate")
      cmd_simulate(cfg);
    else if (cmd == "fit")
      cmd_fit(cfg);
    else if (cmd == "bwselect")
      cmd_bwselect(cfg);
    else if (cmd == "resample")
      cmd_resample(cfg);
    else if (cmd == "predict")
      cmd_predict(cfg);
    else if (cmd == "evaluate")
      cmd_evaluate(cfg);
    else
      throw ConfigError("unknown command '" + cmd + "'");
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s: config error: %s\n", kToolName, e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "%s: data error: %s\n", kToolName, e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "%s: numerical error: %s\n", kToolName, e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: error: %s\n", kToolName, e.what());
    return 1;
  }
}

}  // namespace tvvar
