#include "mixent/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "mixent/errors.hpp"

namespace mixent {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

void check_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
  if (!doc.is_object()) throw InvalidInput(where + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) throw InvalidInput("unknown key '" + key + "' in " + where);
  }
}

const json& require(const json& doc, const std::string& key, const std::string& where) {
  if (!doc.contains(key)) throw InvalidInput(where + " is missing '" + key + "'");
  return doc.at(key);
}

double number(const json& value, const std::string& what) {
  if (!value.is_number()) throw InvalidInput(what + " must be a number");
  return value.get<double>();
}

Vector vector_from_json(const json& value, const std::string& what) {
  if (!value.is_array()) throw InvalidInput(what + " must be an array of numbers");
  Vector out(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = number(value[i], what);
  }
  return out;
}

Matrix matrix_from_json(const json& value, const std::string& what) {
  if (!value.is_array() || value.empty()) throw InvalidInput(what + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(value.size());
  const auto cols = static_cast<Eigen::Index>(value[0].is_array() ? value[0].size() : 0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vector row = vector_from_json(value[static_cast<std::size_t>(i)], what);
    if (row.size() != cols) throw InvalidInput(what + " is not rectangular");
    out.row(i) = row.transpose();
  }
  return out;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_round_trip(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::string format_text(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  std::string out(buffer);
  return out == "-0" ? "0" : out;
}

Dataset read_csv_dataset(std::istream& in, const std::string& label_column) {
  std::string line;
  std::size_t line_number = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_number;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.size() < 2) {
    throw InvalidInput("CSV needs a header with at least one feature and one label column");
  }
  std::size_t label_index = header.size() - 1;
  if (!label_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) throw InvalidInput("label column '" + label_column + "' not found in header");
    label_index = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::map<std::string, int> ids;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::size_t row_number = rows.size() + 1;
    const std::string locus = "row " + std::to_string(row_number) + " (line " +
                              std::to_string(line_number) + ")";
    if (cells.size() != header.size()) {
      throw InvalidInput(locus + " has " + std::to_string(cells.size()) + " cells, header has " +
                         std::to_string(header.size()));
    }
    std::vector<double> features;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_index) continue;
      const std::string& cell = cells[c];
      double value = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      if (!cell.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (cell.empty() || ec != std::errc() || ptr != end) {
        throw InvalidInput(locus + ", column '" + header[c] + "': '" + cell + "' is not a number");
      }
      if (!std::isfinite(value)) {
        throw InvalidInput(locus + ", column '" + header[c] + "': non-finite value '" + cell + "'");
      }
      features.push_back(value);
    }
    const std::string& name = cells[label_index];
    auto [it, inserted] = ids.emplace(name, static_cast<int>(names.size()));
    if (inserted) names.push_back(name);
    labels.push_back(it->second);
    rows.push_back(std::move(features));
  }
  if (rows.size() < 2) {
    throw InvalidInput("CSV has " + std::to_string(rows.size()) + " data rows, need at least 2");
  }

  Dataset out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  out.features.resize(n, d);
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    out.labels(i) = labels[static_cast<std::size_t>(i)];
  }
  out.num_labels = static_cast<int>(names.size());
  out.label_names = std::move(names);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_index) out.feature_names.push_back(header[c]);
  }
  validate_dataset(out);
  return out;
}

Dataset ingest_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_csv_dataset(in, label_column);
}

void write_csv_dataset(std::ostream& out, const Dataset& dataset) {
  for (Eigen::Index j = 0; j < dataset.dimension(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    for (Eigen::Index j = 0; j < dataset.dimension(); ++j) {
      out << format_round_trip(dataset.features(i, j)) << ',';
    }
    const int y = dataset.labels(i);
    out << (static_cast<std::size_t>(y) < dataset.label_names.size()
                ? dataset.label_names[static_cast<std::size_t>(y)]
                : std::to_string(y))
        << '\n';
  }
}

json model_to_json(const ModelSpec& spec) {
  json doc;
  doc["schema"] = kModelSchema;
  if (const auto* logistic = std::get_if<LogisticGaussianSpec>(&spec)) {
    doc["type"] = "logistic-gaussian";
    doc["mean"] = to_json(logistic->mean);
    doc["covariance"] = to_json(logistic->covariance);
    doc["weights"] = to_json(logistic->weights);
    doc["intercept"] = logistic->intercept;
    return doc;
  }
  const auto& classes = std::get<ClassGaussianSpec>(spec);
  doc["type"] = "class-gaussian";
  doc["priors"] = to_json(classes.priors);
  doc["means"] = json::array();
  doc["covariances"] = json::array();
  for (const auto& m : classes.means) doc["means"].push_back(to_json(m));
  for (const auto& c : classes.covariances) doc["covariances"].push_back(to_json(c));
  return doc;
}

ModelSpec model_from_json(const json& doc, bool require_schema) {
  const std::string where = "model";
  if (!doc.is_object()) throw InvalidInput("model must be a JSON object");
  if (require_schema || doc.contains("schema")) {
    const json& schema = require(doc, "schema", where);
    if (!schema.is_string() || schema.get<std::string>() != kModelSchema) {
      throw InvalidInput(std::string("model schema must be \"") + kModelSchema + "\"");
    }
  }
  const json& type = require(doc, "type", where);
  if (!type.is_string()) throw InvalidInput("model type must be a string");
  if (type == "logistic-gaussian") {
    check_keys(doc, {"schema", "type", "mean", "covariance", "weights", "intercept"}, where);
    LogisticGaussianSpec spec;
    spec.weights = vector_from_json(require(doc, "weights", where), "weights");
    const Eigen::Index d = spec.weights.size();
    spec.mean = doc.contains("mean") ? vector_from_json(doc["mean"], "mean") : Vector::Zero(d);
    spec.covariance = doc.contains("covariance") ? matrix_from_json(doc["covariance"], "covariance")
                                                 : Matrix::Identity(d, d);
    spec.intercept = doc.contains("intercept") ? number(doc["intercept"], "intercept") : 0.0;
    validate_model(spec);
    return spec;
  }
  if (type == "class-gaussian") {
    check_keys(doc, {"schema", "type", "priors", "means", "covariances"}, where);
    ClassGaussianSpec spec;
    spec.priors = vector_from_json(require(doc, "priors", where), "priors");
    const json& means = require(doc, "means", where);
    if (!means.is_array()) throw InvalidInput("means must be an array");
    for (const auto& m : means) spec.means.push_back(vector_from_json(m, "means"));
    if (doc.contains("covariances")) {
      const json& covariances = doc["covariances"];
      if (!covariances.is_array()) throw InvalidInput("covariances must be an array");
      for (const auto& c : covariances) spec.covariances.push_back(matrix_from_json(c, "covariances"));
    } else {
      for (const auto& m : spec.means) spec.covariances.push_back(Matrix::Identity(m.size(), m.size()));
    }
    validate_model(spec);
    return spec;
  }
  throw InvalidInput("unknown model type '" + type.get<std::string>() +
                     "' (expected logistic-gaussian or class-gaussian)");
}

json estimator_config_to_json(const EstimatorConfig& config) {
  json doc;
  if (const auto* k = std::get_if<Eigen::Index>(&config.k)) {
    doc["k"] = *k;
  } else {
    const auto& schedule = std::get<NeighborSchedule>(config.k);
    doc["alpha"] = schedule.alpha;
    doc["c"] = schedule.c;
  }
  doc["clamp_nonnegative"] = config.clamp_nonnegative;
  doc["tie_clamp"] = config.tie_clamp;
  doc["leaf_capacity"] = config.leaf_capacity;
  return doc;
}

EstimatorConfig estimator_config_from_json(const json& doc) {
  const std::string where = "estimator";
  check_keys(doc, {"k", "alpha", "c", "clamp_nonnegative", "tie_clamp", "leaf_capacity"}, where);
  EstimatorConfig config;
  if (doc.contains("k")) {
    if (doc.contains("alpha") || doc.contains("c")) {
      throw InvalidInput("estimator sets both k and a schedule");
    }
    if (!doc["k"].is_number_integer()) throw InvalidInput("k must be an integer");
    config.k = doc["k"].get<Eigen::Index>();
  } else {
    NeighborSchedule schedule;
    if (doc.contains("alpha")) schedule.alpha = number(doc["alpha"], "alpha");
    if (doc.contains("c")) schedule.c = number(doc["c"], "c");
    config.k = schedule;
  }
  auto flag = [&](const char* key, bool fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_boolean()) throw InvalidInput(std::string(key) + " must be a boolean");
    return doc[key].get<bool>();
  };
  config.clamp_nonnegative = flag("clamp_nonnegative", false);
  config.tie_clamp = flag("tie_clamp", true);
  if (doc.contains("leaf_capacity")) {
    if (!doc["leaf_capacity"].is_number_integer()) throw InvalidInput("leaf_capacity must be an integer");
    config.leaf_capacity = doc["leaf_capacity"].get<Eigen::Index>();
  }
  return config;
}

RunConfig run_config_from_json(const json& doc) {
  const std::string where = "run config";
  check_keys(doc, {"schema", "estimator", "model", "plan"}, where);
  const json& schema = require(doc, "schema", where);
  if (!schema.is_string() || schema.get<std::string>() != kRunSchema) {
    throw InvalidInput(std::string("run config schema must be \"") + kRunSchema + "\"");
  }
  RunConfig config;
  if (doc.contains("estimator")) config.estimator = estimator_config_from_json(doc["estimator"]);
  if (doc.contains("model")) config.model = model_from_json(doc["model"], false);
  if (doc.contains("plan")) {
    const json& p = doc["plan"];
    check_keys(p, {"n_grid", "replicates", "base_seed", "estimators", "truth_tolerance"}, "plan");
    if (!config.model) throw InvalidInput("plan section needs a model section");
    ExperimentPlan plan;
    plan.model = *config.model;
    if (config.estimator) plan.k_rule = *config.estimator;
    const json& grid = require(p, "n_grid", "plan");
    if (!grid.is_array()) throw InvalidInput("n_grid must be an array of integers");
    for (const auto& n : grid) {
      if (!n.is_number_integer()) throw InvalidInput("n_grid must be an array of integers");
      plan.n_grid.push_back(n.get<Eigen::Index>());
    }
    if (p.contains("replicates")) {
      if (!p["replicates"].is_number_integer()) throw InvalidInput("replicates must be an integer");
      plan.replicates = p["replicates"].get<Eigen::Index>();
    }
    if (p.contains("base_seed")) {
      if (!p["base_seed"].is_number_unsigned()) throw InvalidInput("base_seed must be a nonnegative integer");
      plan.base_seed = p["base_seed"].get<std::uint64_t>();
    }
    if (p.contains("estimators")) {
      if (!p["estimators"].is_array()) throw InvalidInput("estimators must be an array of names");
      plan.estimators.clear();
      for (const auto& e : p["estimators"]) {
        if (!e.is_string()) throw InvalidInput("estimators must be an array of names");
        plan.estimators.push_back(parse_estimator_kind(e.get<std::string>()));
      }
    }
    if (p.contains("truth_tolerance")) plan.truth_tolerance = number(p["truth_tolerance"], "truth_tolerance");
    validate_plan(plan);
    config.plan = plan;
  }
  return config;
}

json plan_to_json(const ExperimentPlan& plan) {
  json doc;
  doc["model"] = model_to_json(plan.model);
  doc["estimator"] = estimator_config_to_json(plan.k_rule);
  doc["n_grid"] = plan.n_grid;
  doc["replicates"] = plan.replicates;
  doc["base_seed"] = plan.base_seed;
  doc["estimators"] = json::array();
  for (const auto kind : plan.estimators) doc["estimators"].push_back(to_string(kind));
  doc["truth_tolerance"] = plan.truth_tolerance;
  return doc;
}

json ground_truth_to_json(const GroundTruth& truth) {
  return {{"value", truth.value},
          {"method", to_string(truth.method)},
          {"error_bound", truth.error_bound},
          {"evaluations", truth.evaluations}};
}

json convergence_to_json(const ConvergenceReport& report) {
  json doc;
  doc["schema"] = kConvergenceSchema;
  doc["version"] = report.version;
  doc["plan"] = plan_to_json(report.plan);
  doc["ground_truth"] = ground_truth_to_json(report.ground_truth);
  doc["rows"] = json::array();
  for (const auto& row : report.rows) {
    json estimates = json::array();
    for (const double v : row.estimates) estimates.push_back(number_or_null(v));
    doc["rows"].push_back({{"n", row.n},
                           {"estimator", to_string(row.estimator)},
                           {"k", row.k},
                           {"replicates", row.replicates},
                           {"failures", row.failures},
                           {"mean", number_or_null(row.mean)},
                           {"bias", number_or_null(row.bias)},
                           {"mse", number_or_null(row.mse)},
                           {"standard_error", number_or_null(row.standard_error)},
                           {"estimates", estimates}});
  }
  return doc;
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "n,estimator,k,replicates,failures,mean,bias,mse,standard_error,ground_truth\n";
  for (const auto& row : report.rows) {
    out << row.n << ',' << to_string(row.estimator) << ',' << row.k << ',' << row.replicates << ','
        << row.failures << ',' << format_round_trip(row.mean) << ',' << format_round_trip(row.bias)
        << ',' << format_round_trip(row.mse) << ',' << format_round_trip(row.standard_error) << ','
        << format_round_trip(report.ground_truth.value) << '\n';
  }
}

json law_check_to_json(const LawCheckReport& report) {
  return {{"schema", kLemmaSchema},
          {"empirical_pmf", to_json(report.empirical_pmf)},
          {"analytic_pmf", to_json(report.analytic_pmf)},
          {"tv_distance", report.tv_distance},
          {"replicates_used", report.replicates_used},
          {"replicates_simulated", report.replicates_simulated},
          {"shell", {{"t", report.shell.t}, {"delta", report.shell.delta}}},
          {"ball_probability", report.ball_probability},
          {"sphere_probability", report.sphere_probability},
          {"threshold", report.threshold},
          {"acceptance", report.acceptance}};
}

json distance_check_to_json(const DistanceCheckReport& report) {
  return {{"schema", kDensitySchema},
          {"ks_statistic", report.ks_statistic},
          {"band", report.band},
          {"samples", report.samples},
          {"within_band", report.within_band},
          {"exact_cdf", report.exact_cdf}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace mixent
