#include "mixent/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixent/errors.hpp"
#include "mixent/estimator.hpp"
#include "mixent/harness.hpp"
#include "mixent/io.hpp"
#include "mixent/lemma_lab.hpp"
#include "mixent/models.hpp"

namespace mixent {

namespace {

using nlohmann::json;

struct CommonOptions {
  std::string units = "nats";
  std::string output = "text";
  unsigned threads = 1;
};

struct NeighborOptions {
  std::optional<Eigen::Index> k;
  std::optional<double> alpha;
  std::optional<double> c;
  bool clamp_nonnegative = false;
  bool no_tie_clamp = false;
};

void add_common(CLI::App* cmd, CommonOptions& common, bool with_units = true) {
  if (with_units) {
    cmd->add_option("--units", common.units, "Display units (results are computed in nats)")
        ->check(CLI::IsMember({"nats", "bits"}));
  }
  cmd->add_option("--output", common.output, "Output format")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  cmd->add_option("--threads", common.threads, "Worker threads (0 = all cores); results do not depend on it");
}

void add_neighbor_options(CLI::App* cmd, NeighborOptions& opts) {
  auto* k = cmd->add_option("--k", opts.k, "Explicit neighbor count");
  auto* alpha = cmd->add_option("--alpha", opts.alpha, "Schedule exponent: k = round(c n^alpha)");
  auto* c = cmd->add_option("--c", opts.c, "Schedule constant");
  k->excludes(alpha);
  k->excludes(c);
  cmd->add_flag("--clamp-nonnegative", opts.clamp_nonnegative, "Report max(0, estimate)");
  cmd->add_flag("--no-tie-clamp", opts.no_tie_clamp, "Do not cap the same-label count at k");
}

EstimatorConfig make_config(const NeighborOptions& opts, unsigned threads,
                            EstimatorConfig config = {}) {
  if (opts.k) {
    config.k = *opts.k;
  } else if (opts.alpha || opts.c) {
    NeighborSchedule schedule;
    if (const auto* current = std::get_if<NeighborSchedule>(&config.k)) schedule = *current;
    if (opts.alpha) schedule.alpha = *opts.alpha;
    if (opts.c) schedule.c = *opts.c;
    config.k = schedule;
  }
  if (opts.clamp_nonnegative) config.clamp_nonnegative = true;
  if (opts.no_tie_clamp) config.tie_clamp = false;
  config.threads = threads;
  return config;
}

double display(double nats, const CommonOptions& common) {
  return common.units == "bits" ? nats / std::log(2.0) : nats;
}

Vector parse_point(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
      throw InvalidInput("point coordinate '" + cell + "' is not a finite number");
    }
    values.push_back(v);
  }
  if (values.empty()) throw InvalidInput("empty point");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<Eigen::Index> parse_grid(const std::string& text) {
  std::vector<Eigen::Index> grid;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    Eigen::Index v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw InvalidInput("sample size '" + cell + "' is not an integer");
    }
    grid.push_back(v);
  }
  return grid;
}

int label_id(const ModelSpec& spec, const std::string& name) {
  const int m = num_labels(spec);
  for (int y = 0; y < m; ++y) {
    if (std::to_string(y + 1) == name) return y;
  }
  throw InvalidInput("label '" + name + "' is not in the model alphabet 1.." + std::to_string(m));
}

json label_map(const Dataset& data) {
  json map = json::array();
  for (std::size_t y = 0; y < data.label_names.size(); ++y) {
    map.push_back({{"label", data.label_names[y]}, {"id", y}});
  }
  return map;
}

std::string label_map_text(const Dataset& data) {
  std::string text;
  for (std::size_t y = 0; y < data.label_names.size(); ++y) {
    text += (y ? " " : "") + data.label_names[y] + "=" + std::to_string(y);
  }
  return text;
}

// --- subcommands -----------------------------------------------------------

struct EstimateArgs {
  std::string input;
  std::string label;
  NeighborOptions neighbors;
  CommonOptions common;
};

int run_estimate(const EstimateArgs& args, bool mutual, std::ostream& out, std::ostream& err) {
  const Dataset data = ingest_csv(args.input, args.label);
  const EstimatorConfig config = make_config(args.neighbors, args.common.threads);
  const EstimateResult result = conditional_entropy(data, config);
  const double h_y = label_entropy(data.labels);
  const double value = mutual ? h_y - result.value : result.value;
  const std::string quantity = mutual ? "mutual_information" : "conditional_entropy";

  if (result.negative_flag) {
    err << "warning: conditional entropy estimate is negative (" << format_text(result.raw_value)
        << " nats)" << (result.clamped ? "; reported as 0" : "") << '\n';
  }
  if (args.common.output == "json") {
    json doc = {{"schema", kEstimateSchema},
                {"quantity", quantity},
                {"value", display(value, args.common)},
                {"units", args.common.units},
                {"conditional_entropy", display(result.value, args.common)},
                {"raw_conditional_entropy", display(result.raw_value, args.common)},
                {"label_entropy", display(h_y, args.common)},
                {"k", result.k_used},
                {"n", data.size()},
                {"tie_events", result.tie_events},
                {"negative", result.negative_flag},
                {"clamped", result.clamped},
                {"labels", label_map(data)},
                {"version", kVersion}};
    out << doc.dump(2) << '\n';
  } else if (args.common.output == "csv") {
    out << "quantity,value,units,k,n,tie_events,negative,clamped\n"
        << quantity << ',' << format_round_trip(display(value, args.common)) << ','
        << args.common.units << ',' << result.k_used << ',' << data.size() << ','
        << result.tie_events << ',' << (result.negative_flag ? "true" : "false") << ','
        << (result.clamped ? "true" : "false") << '\n';
  } else {
    out << format_text(display(value, args.common)) << '\n';
    err << "k=" << result.k_used << " n=" << data.size() << " tie_events=" << result.tie_events
        << " labels: " << label_map_text(data) << '\n';
  }
  return kExitSuccess;
}

struct GenerateArgs {
  std::string model;
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  CommonOptions common;
};

int run_generate(const GenerateArgs& args, std::ostream& out) {
  const ModelSpec spec = model_from_json(read_json_file(args.model));
  const Dataset data = sample(spec, args.n, args.seed);
  if (args.common.output == "json") {
    json features = json::array();
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      features.push_back(std::vector<double>(data.features.row(i).data(),
                                             data.features.row(i).data() + data.dimension()));
    }
    json labels = json::array();
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      labels.push_back(data.label_names[static_cast<std::size_t>(data.labels(i))]);
    }
    out << json{{"schema", "mixent.dataset/1"},
                {"seed", args.seed},
                {"features", features},
                {"labels", labels}}
               .dump()
        << '\n';
  } else {
    write_csv_dataset(out, data);
  }
  return kExitSuccess;
}

struct ConvergenceArgs {
  std::string config;
  std::string model;
  std::string n_grid;
  std::optional<Eigen::Index> replicates;
  std::vector<std::string> estimators;
  std::uint64_t seed = 0;
  NeighborOptions neighbors;
  CommonOptions common;
};

int run_convergence_command(const ConvergenceArgs& args, std::ostream& out) {
  ExperimentPlan plan;
  if (!args.config.empty()) {
    const RunConfig config = run_config_from_json(read_json_file(args.config));
    if (config.plan) {
      plan = *config.plan;
    } else if (config.model) {
      plan.model = *config.model;
      if (config.estimator) plan.k_rule = *config.estimator;
    } else {
      throw InvalidInput("run config has neither a plan nor a model section");
    }
  } else if (!args.model.empty()) {
    plan.model = model_from_json(read_json_file(args.model));
  } else {
    throw InvalidInput("convergence needs --config or --model");
  }
  if (!args.n_grid.empty()) plan.n_grid = parse_grid(args.n_grid);
  if (args.replicates) plan.replicates = *args.replicates;
  if (!args.estimators.empty()) {
    plan.estimators.clear();
    for (const auto& name : args.estimators) plan.estimators.push_back(parse_estimator_kind(name));
  }
  plan.k_rule = make_config(args.neighbors, 1, plan.k_rule);
  plan.base_seed = args.seed;

  const ConvergenceReport report = run_convergence(plan, args.common.threads);
  if (args.common.output == "json") {
    out << convergence_to_json(report).dump(2) << '\n';
  } else if (args.common.output == "csv") {
    write_convergence_csv(out, report);
  } else {
    out << "ground truth " << format_text(display(report.ground_truth.value, args.common)) << ' '
        << args.common.units << " (" << to_string(report.ground_truth.method) << ", error "
        << format_text(display(report.ground_truth.error_bound, args.common)) << ")\n";
    out << std::left << std::setw(8) << "n" << std::setw(22) << "estimator" << std::setw(6) << "k"
        << std::setw(12) << "mean" << std::setw(12) << "bias" << std::setw(12) << "mse"
        << std::setw(12) << "stderr" << "ok/failed\n";
    for (const auto& row : report.rows) {
      const double scale = display(1.0, args.common);
      out << std::left << std::setw(8) << row.n << std::setw(22) << to_string(row.estimator)
          << std::setw(6) << row.k << std::setw(12) << format_text(row.mean * scale)
          << std::setw(12) << format_text(row.bias * scale) << std::setw(12)
          << format_text(row.mse * scale * scale) << std::setw(12)
          << format_text(row.standard_error * scale) << row.replicates << '/' << row.failures
          << '\n';
    }
  }
  return kExitSuccess;
}

struct LemmaArgs {
  std::string model;
  std::string x;
  std::string y = "1";
  std::int64_t n = 0;
  std::int64_t k = 0;
  std::optional<double> t;
  std::optional<double> delta;
  std::int64_t replicates = 0;
  std::uint64_t seed = 0;
  double threshold = 0.05;
  std::int64_t min_hits = 500;
  CommonOptions common;
};

int run_lemma_check(const LemmaArgs& args, std::ostream& out) {
  const ModelSpec spec = model_from_json(read_json_file(args.model));
  const Vector x = parse_point(args.x);
  Shell shell;
  shell.t = args.t ? *args.t : knn_distance_quantile(DistanceLaw(spec, x), args.n, args.k, 0.5);
  shell.delta = args.delta ? *args.delta : shell.t / 10.0;
  LawCheckOptions options;
  options.threshold = args.threshold;
  options.min_hits = args.min_hits;
  options.threads = args.common.threads;
  const LawCheckReport report = verify_conditional_law(
      spec, x, label_id(spec, args.y), args.n, args.k, shell, args.replicates, args.seed, options);
  if (args.common.output == "json") {
    out << law_check_to_json(report).dump(2) << '\n';
  } else if (args.common.output == "csv") {
    out << "r,empirical,analytic\n";
    for (Eigen::Index r = 0; r < report.analytic_pmf.size(); ++r) {
      out << r << ',' << format_round_trip(report.empirical_pmf(r)) << ','
          << format_round_trip(report.analytic_pmf(r)) << '\n';
    }
  } else {
    out << "shell t=" << format_text(shell.t) << " delta=" << format_text(shell.delta) << '\n'
        << "hits " << report.replicates_used << " of " << report.replicates_simulated << '\n'
        << "p=" << format_text(report.ball_probability)
        << " alpha=" << format_text(1.0 - report.sphere_probability) << '\n';
    for (Eigen::Index r = 0; r < report.analytic_pmf.size(); ++r) {
      out << "r=" << r << " empirical " << format_text(report.empirical_pmf(r)) << " analytic "
          << format_text(report.analytic_pmf(r)) << '\n';
    }
    out << "tv_distance " << format_text(report.tv_distance) << ' '
        << (report.acceptance ? "PASS" : "FAIL") << " (threshold " << format_text(report.threshold)
        << ")\n";
  }
  return kExitSuccess;
}

struct DensityArgs {
  std::string model;
  std::string x;
  std::int64_t n = 0;
  std::int64_t k = 0;
  std::int64_t samples = 10000;
  std::uint64_t seed = 0;
  CommonOptions common;
};

int run_density_check(const DensityArgs& args, std::ostream& out) {
  const ModelSpec spec = model_from_json(read_json_file(args.model));
  const DistanceCheckReport report = verify_distance_distribution(
      spec, parse_point(args.x), args.n, args.k, args.samples, args.seed, args.common.threads);
  if (args.common.output == "json") {
    out << distance_check_to_json(report).dump(2) << '\n';
  } else if (args.common.output == "csv") {
    out << "ks_statistic,band,samples,within_band,exact_cdf\n"
        << format_round_trip(report.ks_statistic) << ',' << format_round_trip(report.band) << ','
        << report.samples << ',' << (report.within_band ? "true" : "false") << ','
        << (report.exact_cdf ? "true" : "false") << '\n';
  } else {
    out << "ks_statistic " << format_text(report.ks_statistic) << '\n'
        << "band " << format_text(report.band) << '\n'
        << (report.within_band ? "PASS" : "FAIL") << '\n';
  }
  return kExitSuccess;
}

int run_rank_features(const EstimateArgs& args, std::ostream& out, std::ostream& err) {
  const Dataset data = ingest_csv(args.input, args.label);
  const FeatureRanking ranking = rank_features(data, make_config(args.neighbors, args.common.threads));
  auto name = [&](Eigen::Index j) {
    return static_cast<std::size_t>(j) < data.feature_names.size()
               ? data.feature_names[static_cast<std::size_t>(j)]
               : "x" + std::to_string(j + 1);
  };
  for (const auto& s : ranking.scores) {
    if (s.degenerate) err << "warning: feature '" << name(s.feature) << "' is constant\n";
  }
  if (args.common.output == "json") {
    json scores = json::array();
    for (const auto& s : ranking.scores) {
      scores.push_back({{"rank", s.rank},
                        {"feature", name(s.feature)},
                        {"index", s.feature},
                        {"mutual_information", display(s.mutual_information, args.common)},
                        {"degenerate", s.degenerate}});
    }
    out << json{{"schema", kRankingSchema},
                {"k", ranking.k_used},
                {"units", args.common.units},
                {"scores", scores},
                {"labels", label_map(data)}}
               .dump(2)
        << '\n';
  } else if (args.common.output == "csv") {
    out << "rank,feature,index,mutual_information,degenerate\n";
    for (const auto& s : ranking.scores) {
      out << s.rank << ',' << name(s.feature) << ',' << s.feature << ','
          << format_round_trip(display(s.mutual_information, args.common)) << ','
          << (s.degenerate ? "true" : "false") << '\n';
    }
  } else {
    for (const auto& s : ranking.scores) {
      out << s.rank << ' ' << name(s.feature) << ' '
          << format_text(display(s.mutual_information, args.common))
          << (s.degenerate ? " degenerate" : "") << '\n';
    }
    err << "k=" << ranking.k_used << " labels: " << label_map_text(data) << '\n';
  }
  return kExitSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional entropy and mutual information for mixed continuous/discrete data",
               "mixent"};
  app.set_version_flag("--version", std::string("mixent ") + kVersion);
  app.require_subcommand(1);

  EstimateArgs estimate;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate H(Y|X) from a CSV dataset");
  EstimateArgs mi;
  auto* mi_cmd = app.add_subcommand("mi", "Estimate I(X;Y) = H(Y) - H(Y|X) from a CSV dataset");
  EstimateArgs rank;
  auto* rank_cmd = app.add_subcommand("rank-features", "Rank features by marginal mutual information");
  for (auto [cmd, a] : {std::pair{estimate_cmd, &estimate}, std::pair{mi_cmd, &mi}, std::pair{rank_cmd, &rank}}) {
    cmd->add_option("--input", a->input, "CSV file with a header row")->required();
    cmd->add_option("--label", a->label, "Label column name (default: last column)");
    add_neighbor_options(cmd, a->neighbors);
    add_common(cmd, a->common);
  }

  GenerateArgs generate;
  auto* generate_cmd = app.add_subcommand("generate", "Sample a dataset from a model");
  generate_cmd->add_option("--model", generate.model, "Model JSON file")->required();
  generate_cmd->add_option("--n", generate.n, "Sample size")->required();
  generate_cmd->add_option("--seed", generate.seed, "Random seed")->required();
  add_common(generate_cmd, generate.common, false);

  ConvergenceArgs convergence;
  auto* convergence_cmd = app.add_subcommand("convergence", "Bias/MSE study across sample sizes");
  auto* config_opt = convergence_cmd->add_option("--config", convergence.config, "Run config JSON");
  auto* model_opt = convergence_cmd->add_option("--model", convergence.model, "Model JSON file");
  config_opt->excludes(model_opt);
  convergence_cmd->add_option("--n-grid", convergence.n_grid, "Comma-separated sample sizes");
  convergence_cmd->add_option("--replicates", convergence.replicates, "Replicates per sample size");
  convergence_cmd->add_option("--estimators", convergence.estimators,
                              "knn-conditional and/or difference-baseline")
      ->delimiter(',');
  convergence_cmd->add_option("--seed", convergence.seed, "Base seed")->required();
  add_neighbor_options(convergence_cmd, convergence.neighbors);
  add_common(convergence_cmd, convergence.common);

  LemmaArgs lemma;
  auto* lemma_cmd = app.add_subcommand("lemma-check", "Check the conditional law of the same-label count");
  lemma_cmd->add_option("--model", lemma.model, "Model JSON file")->required();
  lemma_cmd->add_option("--x", lemma.x, "Center point, comma-separated")->required();
  lemma_cmd->add_option("--y", lemma.y, "Label of the center point (model label name)");
  lemma_cmd->add_option("--n", lemma.n, "Sample size including the center")->required();
  lemma_cmd->add_option("--k", lemma.k, "Neighbor rank")->required();
  lemma_cmd->add_option("--t", lemma.t, "Shell center radius (default: median k-NN radius)");
  lemma_cmd->add_option("--delta", lemma.delta, "Shell half-width (default: t/10)");
  lemma_cmd->add_option("--replicates", lemma.replicates, "Simulated samples")->required();
  lemma_cmd->add_option("--seed", lemma.seed, "Random seed")->required();
  lemma_cmd->add_option("--threshold", lemma.threshold, "TV acceptance threshold");
  lemma_cmd->add_option("--min-hits", lemma.min_hits, "Minimum shell hits");
  add_common(lemma_cmd, lemma.common, false);

  DensityArgs density;
  auto* density_cmd = app.add_subcommand("density-check", "KS check of the k-NN radius distribution");
  density_cmd->add_option("--model", density.model, "Model JSON file")->required();
  density_cmd->add_option("--x", density.x, "Center point, comma-separated")->required();
  density_cmd->add_option("--n", density.n, "Sample size including the center")->required();
  density_cmd->add_option("--k", density.k, "Neighbor rank")->required();
  density_cmd->add_option("--samples", density.samples, "Simulated radii");
  density_cmd->add_option("--seed", density.seed, "Random seed")->required();
  add_common(density_cmd, density.common, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    if (*estimate_cmd) return run_estimate(estimate, false, out, err);
    if (*mi_cmd) return run_estimate(mi, true, out, err);
    if (*rank_cmd) return run_rank_features(rank, out, err);
    if (*generate_cmd) return run_generate(generate, out);
    if (*convergence_cmd) return run_convergence_command(convergence, out);
    if (*lemma_cmd) return run_lemma_check(lemma, out);
    if (*density_cmd) return run_density_check(density, out);
  } catch (const Inconclusive& e) {
    err << "inconclusive: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace mixent
