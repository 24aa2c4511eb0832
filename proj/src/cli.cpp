#include "mdcompat/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <thread>

#include "json_codec.hpp"
#include "mdcompat/bootstrap.hpp"
#include "mdcompat/compat.hpp"
#include "mdcompat/config.hpp"
#include "mdcompat/cpm.hpp"
#include "mdcompat/error.hpp"
#include "mdcompat/rng.hpp"

namespace mdcompat {

namespace {

using codec::json;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "out";
  int workers = 0;
  bool dry_run = false;
};

int resolve_workers(int flag, std::optional<int> configured = std::nullopt) {
  if (flag > 0) return flag;
  if (configured) return *configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json decisions() {
  return json{{"metric_pooling", "per-imputation metrics averaged"},
              {"bias_sign", "estimand-matched performance minus handling performance"},
              {"e_mean_reference", "mean/mode values transported from development"},
              {"e_ri_reference", "regression package transported when the bundle has one, else refit on validation"},
              {"e_mi_reference", "mi_no_y refit on validation"},
              {"mi_binary_draws", "logistic-bernoulli"},
              {"calibration_intercept", "logistic fit with logit(p) as offset"},
              {"probability_clamp", 1e-10},
              {"failed_cells", "excluded from bias averages and counted"}};
}

/// "name" or "name:kind" items.
std::vector<ColumnSpec> parse_predictor_specs(const std::vector<std::string>& items) {
  std::vector<ColumnSpec> out;
  for (const auto& item : items) {
    const auto colon = item.find(':');
    ColumnSpec spec;
    spec.name = item.substr(0, colon);
    if (colon != std::string::npos) spec.kind = parse_column_kind(item.substr(colon + 1));
    spec.role = ColumnRole::predictor;
    out.push_back(spec);
  }
  if (out.empty()) throw ArgumentError("at least one predictor is required");
  return out;
}

bool header_has(const std::filesystem::path& path, const std::string& name) {
  const auto header = read_csv_header(path);
  return std::find(header.begin(), header.end(), name) != header.end();
}

void print_report(std::ostream& out, const PerfReport& r) {
  out << "auc           " << format_double(r.auc) << "\n"
      << "brier         " << format_double(r.brier) << "\n"
      << "cal_intercept " << format_double(r.cal_intercept) << "\n"
      << "cal_slope     " << format_double(r.cal_slope) << "\n"
      << "n_rows        " << r.n_rows << "\n"
      << "n_events      " << r.n_events << "\n"
      << "k_imputations " << r.k_imputations << "\n";
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string grid;
  std::string preset;
  std::string pooling = "average";
  int m = kDefaultImputations;
  bool heatmaps = false;
  bool quiet = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<GridSpec> grids;
  SimulationConfig cfg;
  if (!a.preset.empty()) {
    grids = preset_grids(a.preset);
  } else {
    cfg = load_grid_config(a.grid);
    grids = cfg.grids;
  }
  const auto scenarios = enumerate_scenarios(grids);
  out << scenarios.size() << " scenarios\n";
  if (g.dry_run) return 0;

  RunOptions options;
  options.root_seed = g.seed_set ? g.seed : cfg.seed.value_or(0);
  options.workers = resolve_workers(g.workers, cfg.workers);
  options.pooling = parse_pooling(a.pooling);
  options.development.m = a.m;
  options.handling.m = a.m;

  const std::filesystem::path dir = g.out;
  std::filesystem::create_directories(dir);
  std::ofstream results(dir / "results.csv", std::ios::binary);
  if (!results) throw IoError("cannot open '" + (dir / "results.csv").string() + "' for writing");
  results << results_csv_header();

  std::vector<BiasTable> bias;
  for (auto e : kAllEstimands) bias.push_back(BiasTable{to_string(e), {}});
  BiasTable degradation{"degradation_vs_fully_observed", {}};
  Index n_cells = 0;
  Index n_failed = 0;
  std::size_t done = 0;
  run_grid(scenarios, options, [&](const ScenarioConfig& s, std::vector<CellResult>&& cells) {
    results << format_result_rows(cells);
    for (std::size_t e = 0; e < kAllEstimands.size(); ++e) merge_into(bias[e], compute_bias(cells, kAllEstimands[e]));
    merge_into(degradation, compute_degradation(cells, DevelopmentMethod::fully_observed));
    for (const auto& c : cells) {
      ++n_cells;
      n_failed += !c.ok();
    }
    ++done;
    if (!a.quiet) err << "scenario " << done << "/" << scenarios.size() << " " << s.scenario_id << " done\n";
  });
  results.close();
  if (!results) throw IoError("write failed for results.csv");

  for (const auto& t : bias) write_bias_csv(t, dir / ("bias_" + t.label + ".csv"));
  write_bias_csv(degradation, dir / "degradation_fully_observed.csv");
  if (a.heatmaps || scenarios.size() <= 16) {
    for (const auto& t : bias) {
      for (const auto& id : t.scenario_ids()) {
        render_panel(t, dir / "heatmaps" / id / ("bias_" + t.label + ".svg"), id);
      }
    }
  }

  json scen = json::array();
  for (const auto& s : scenarios) {
    scen.push_back(json{{"scenario_id", s.scenario_id},
                        {"x1_kind", to_string(s.x1_kind)},
                        {"missing_prop", s.target_missing},
                        {"beta_dev", {s.beta_dev.x1, s.beta_dev.x2, s.beta_dev.u}},
                        {"beta_val", {s.beta_val.x1, s.beta_val.x2, s.beta_val.u}},
                        {"rho", s.rho},
                        {"gamma", {s.gamma1, s.gamma2, s.gamma3}},
                        {"prevalence", s.target_prevalence},
                        {"n_dev", s.n_dev},
                        {"n_val", s.n_val},
                        {"iterations", s.iterations},
                        {"dag_dev", std::string(1, dag_label(s.beta_dev, s.target_missing))},
                        {"dag_val", std::string(1, dag_label(s.beta_val, s.target_missing))}});
  }
  json meta{{"command", "simulate"},
            {"version", kVersion},
            {"seed", options.root_seed},
            {"workers", options.workers},
            {"source", a.preset.empty() ? "grid:" + a.grid : "preset:" + a.preset},
            {"grid", format_grid_config(grids)},
            {"imputations", a.m},
            {"pooling", a.pooling},
            {"psm_thresholds", {{"min_rows", options.development.psm.min_rows},
                                {"min_events", options.development.psm.min_events}}},
            {"decisions", decisions()},
            {"scenarios", scen},
            {"cells", n_cells},
            {"failed_cells", n_failed}};
  write_text(dir / "run_metadata.json", meta.dump(2) + "\n");

  out << n_cells << " cells, " << n_failed << " failed\n";
  if (n_failed > 0) err << "warning: " << n_failed << " cells failed; see the status column of results.csv\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct BootstrapArgs {
  std::string data;
  std::string plan;
};

int cmd_bootstrap(const Globals& g, const BootstrapArgs& a, std::ostream& out, std::ostream& err) {
  BootstrapPlan plan = load_plan(a.plan);
  if (g.seed_set) plan.root_seed = g.seed;
  plan.validate();
  const Dataset ds = load_csv(a.data, plan.columns());
  out << "bootstrap: " << plan.b << " replicates on " << ds.rows() << " rows\n";
  if (g.dry_run) return 0;
  const int workers = resolve_workers(g.workers);
  const auto result = bootstrap_run(ds, plan, workers, [&](Index r) { err << "replicate " << (r + 1) << " done\n"; });
  summarize(result, g.out);
  Index failed = 0;
  for (const auto& c : result.cells) failed += !c.ok();
  json meta{{"command", "bootstrap"}, {"version", kVersion},  {"data", a.data},
            {"plan", format_plan(plan)}, {"workers", workers}, {"decisions", decisions()},
            {"cells", result.cells.size()}, {"failed_cells", failed},
            {"failed_replicates", result.failed_replicates}};
  write_text(std::filesystem::path(g.out) / "run_metadata.json", meta.dump(2) + "\n");
  out << result.cells.size() << " cells, " << failed << " failed, " << result.failed_replicates
      << " failed replicates\n";
  if (failed > 0) err << "warning: " << failed << " cells failed\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct DevelopArgs {
  std::string data;
  std::string method;
  std::vector<std::string> predictors;
  std::string outcome;
  std::string bundle;
  int m = kDefaultImputations;
  int cycles = kDefaultCycles;
};

int cmd_develop(const Globals& g, const DevelopArgs& a, std::ostream& out) {
  const auto method = parse_development_method(a.method);
  auto specs = parse_predictor_specs(a.predictors);
  specs.push_back(ColumnSpec{a.outcome, ColumnKind::binary, ColumnRole::outcome});
  const Dataset ds = load_csv(a.data, specs);
  if (g.dry_run) return 0;
  DevelopmentOptions opts;
  opts.m = a.m;
  opts.cycles = a.cycles;
  Stream rng(SeedSpec{g.seed, {"develop"}});
  const ModelBundle bundle = develop_cpm(ds, method, rng, opts);
  const std::filesystem::path path = a.bundle.empty() ? std::filesystem::path(g.out) / "bundle.json" : std::filesystem::path(a.bundle);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_bundle(bundle, path);
  const Cpm& model = bundle.primary_model();
  out << "developed " << to_string(method) << " on " << ds.rows() << " rows\n";
  out << "intercept " << format_double(model.coefficients(0)) << "\n";
  for (std::size_t j = 0; j < model.predictors.size(); ++j) {
    out << model.predictors[j] << " " << format_double(model.coefficients(static_cast<Index>(j) + 1)) << "\n";
  }
  out << "bundle written to " << path.string() << "\n";
  json meta{{"command", "develop"}, {"version", kVersion}, {"seed", g.seed},     {"data", a.data},
            {"method", a.method},   {"predictors", a.predictors}, {"outcome", a.outcome}, {"m", a.m},
            {"cycles", a.cycles},   {"bundle", path.string()}};
  write_text(path.parent_path() / "run_metadata.json", meta.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string bundle;
  std::string data;
  std::string handling;
  std::string report;
  std::string pooling = "average";
  int m = kDefaultImputations;
  int cycles = kDefaultCycles;
};

int cmd_validate(const Globals& g, const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  const ValidationHandling handling = ValidationHandling::parse(a.handling);
  const Pooling pooling = parse_pooling(a.pooling);
  const ModelBundle bundle = load_bundle(a.bundle);
  if (!admissible(bundle.method, handling)) {
    err << "warning: handling '" << handling.label() << "' is not a recognised pairing for a bundle developed with "
        << to_string(bundle.method) << "; running it anyway\n";
  }
  std::vector<ColumnSpec> specs = bundle.schema;
  const auto oit = std::find_if(specs.begin(), specs.end(), [](const ColumnSpec& c) { return c.role == ColumnRole::outcome; });
  std::string outcome_name = oit == specs.end() ? std::string() : oit->name;
  if (oit != specs.end() && !header_has(a.data, oit->name)) specs.erase(oit);
  const Dataset ds = load_csv(a.data, specs);
  if (g.dry_run) return 0;

  HandlingOptions opts;
  opts.m = a.m;
  opts.cycles = a.cycles;
  Stream rng(SeedSpec{g.seed, {"validate"}});
  const Prediction pred = predict_bundle(bundle, ds, handling, rng, opts);
  if (!ds.has_outcome()) {
    throw ContractError("validation data has no outcome column '" + outcome_name + "'");
  }
  const VectorXd y = ds.outcome();
  VectorXd ys(static_cast<Index>(pred.rows.size()));
  for (std::size_t i = 0; i < pred.rows.size(); ++i) ys(static_cast<Index>(i)) = y(pred.rows[i]);
  const PerfReport report = evaluate(pred.probabilities, ys, pooling);

  out << "development " << to_string(bundle.method) << ", handling " << handling.label() << "\n";
  if (static_cast<Index>(pred.rows.size()) != ds.rows()) {
    out << "retained rows " << pred.rows.size() << " of " << ds.rows() << "\n";
  }
  print_report(out, report);

  const std::filesystem::path path = a.report.empty() ? std::filesystem::path(g.out) / "report.csv" : std::filesystem::path(a.report);
  std::string csv = "dev_method,val_method,val_mode,auc,brier,cal_intercept,cal_slope,n_rows,n_events,k_imputations,input_rows\n";
  csv += to_string(bundle.method) + ',' + to_string(handling.method) + ',' + to_string(handling.mode) + ',' +
         format_double(report.auc) + ',' + format_double(report.brier) + ',' + format_double(report.cal_intercept) +
         ',' + format_double(report.cal_slope) + ',' + std::to_string(report.n_rows) + ',' +
         std::to_string(report.n_events) + ',' + std::to_string(report.k_imputations) + ',' +
         std::to_string(ds.rows()) + '\n';
  write_text(path, csv);
  json meta{{"command", "validate"}, {"version", kVersion}, {"seed", g.seed},   {"bundle", a.bundle},
            {"data", a.data},        {"handling", handling.label()}, {"m", a.m}, {"cycles", a.cycles},
            {"pooling", a.pooling},  {"report", path.string()}, {"decisions", decisions()}};
  write_text(path.parent_path() / "run_metadata.json", meta.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct ImputeArgs {
  std::string data;
  std::string package;
  std::string strategy;
  std::vector<std::string> predictors;
  std::string outcome;
  bool with_outcome = false;
  int m = kDefaultImputations;
  int cycles = kDefaultCycles;
};

int cmd_impute(const Globals& g, const ImputeArgs& a, std::ostream& out) {
  if (a.package.empty() == a.strategy.empty()) {
    throw ArgumentError("impute needs exactly one of --package (apply) or --strategy (fit and apply)");
  }
  const std::filesystem::path dir = g.out;
  ImputationPackage pkg;
  Dataset ds;
  Stream rng(SeedSpec{g.seed, {"impute"}});
  if (!a.package.empty()) {
    std::ifstream in(a.package, std::ios::binary);
    if (!in) throw IoError("cannot open package '" + a.package + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    pkg = decode_package(ss.str());
    std::vector<ColumnSpec> specs;
    for (const auto& s : pkg.summaries) specs.push_back(ColumnSpec{s.name, s.kind, ColumnRole::predictor});
    if (!pkg.outcome.empty() && header_has(a.data, pkg.outcome)) {
      specs.push_back(ColumnSpec{pkg.outcome, ColumnKind::binary, ColumnRole::outcome});
    }
    ds = load_csv(a.data, specs);
    if (g.dry_run) return 0;
  } else {
    auto specs = parse_predictor_specs(a.predictors);
    if (!a.outcome.empty()) specs.push_back(ColumnSpec{a.outcome, ColumnKind::binary, ColumnRole::outcome});
    ds = load_csv(a.data, specs);
    if (g.dry_run) return 0;
    ImputationOptions opts;
    opts.include_outcome = a.with_outcome;
    opts.m = a.m;
    opts.cycles = a.cycles;
    Stream fit_rng = rng.split("fit");
    pkg = fit_package(parse_imputation_strategy(a.strategy), ds, opts, fit_rng);
    write_text(dir / "package.json", encode_package(pkg) + "\n");
    out << "package written to " << (dir / "package.json").string() << "\n";
  }
  Stream apply_rng = rng.split("apply");
  const CompletedData completed = apply_package(pkg, ds, apply_rng);
  for (std::size_t k = 0; k < completed.datasets.size(); ++k) {
    const auto name = completed.datasets.size() == 1 ? std::string("completed.csv")
                                                      : "completed_" + std::to_string(k + 1) + ".csv";
    write_text(dir / name, format_csv(completed.datasets[k]));
    out << "wrote " << (dir / name).string() << " (" << completed.datasets[k].rows() << " rows)\n";
  }
  json meta{{"command", "impute"},       {"version", kVersion},     {"seed", g.seed},
            {"data", a.data},            {"package", a.package},    {"strategy", to_string(pkg.strategy)},
            {"with_outcome", pkg.options.include_outcome}, {"m", pkg.options.m}, {"cycles", pkg.options.cycles}};
  write_text(dir / "run_metadata.json", meta.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string results;
  std::vector<std::string> estimands;
  std::string metric;
  std::string scenario;
};

int cmd_report(const Globals& g, const ReportArgs& a, std::ostream& out) {
  std::vector<EstimandId> estimands;
  for (const auto& e : a.estimands) estimands.push_back(parse_estimand(e));
  if (estimands.empty()) estimands.assign(kAllEstimands.begin(), kAllEstimands.end());
  std::optional<Metric> metric;
  if (!a.metric.empty()) metric = parse_metric(a.metric);
  const auto cells = read_results_csv(a.results);
  if (g.dry_run) return 0;
  const std::filesystem::path dir = g.out;
  for (auto e : estimands) {
    const BiasTable table = compute_bias(cells, e);
    write_bias_csv(table, dir / ("bias_" + table.label + ".csv"));
    for (const auto& id : table.scenario_ids()) {
      if (!a.scenario.empty() && id != a.scenario) continue;
      if (metric) {
        render_heatmap(table, *metric, dir / "heatmaps" / id / ("bias_" + table.label + "_" + to_string(*metric) + ".svg"), id);
      } else {
        render_panel(table, dir / "heatmaps" / id / ("bias_" + table.label + ".svg"), id);
      }
    }
    out << "wrote bias_" << table.label << ".csv\n";
  }
  json meta{{"command", "report"}, {"version", kVersion}, {"results", a.results},
            {"estimands", a.estimands}, {"metric", a.metric}, {"scenario", a.scenario}};
  write_text(dir / "run_metadata.json", meta.dump(2) + "\n");
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Missing-data compatibility study: simulation grid, bootstrap audit and model tools"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Root seed")->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "Parallel workers (default: all cores)")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", g.dry_run, "Validate inputs and report what would run, writing nothing");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the scenario grid");
  auto* grid_opt = simulate->add_option("--grid", sim.grid, "Grid file")->check(CLI::ExistingFile);
  auto* preset_opt = simulate->add_option("--preset", sim.preset, "Built-in grid: paper or desk")
                         ->check(CLI::IsMember({"paper", "desk"}));
  grid_opt->excludes(preset_opt);
  simulate->add_option("--pooling", sim.pooling, "average or stacked")->check(CLI::IsMember({"average", "stacked"}));
  simulate->add_option("--m", sim.m, "Imputations for multiple imputation")->check(CLI::PositiveNumber);
  simulate->add_flag("--heatmaps", sim.heatmaps, "Write heatmaps even for large grids");
  simulate->add_flag("--quiet", sim.quiet, "No progress lines");

  BootstrapArgs boot;
  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap audit of handling combinations on a data file");
  bootstrap->add_option("--data", boot.data, "CSV data")->required()->check(CLI::ExistingFile);
  bootstrap->add_option("--plan", boot.plan, "Plan file")->required()->check(CLI::ExistingFile);

  DevelopArgs dev;
  auto* develop = app.add_subcommand("develop", "Develop a prediction model bundle");
  develop->add_option("--data", dev.data, "CSV data")->required()->check(CLI::ExistingFile);
  develop->add_option("--method", dev.method, "Development method")->required();
  develop->add_option("--predictors", dev.predictors, "name[:continuous|binary], comma separated")
      ->required()
      ->delimiter(',');
  develop->add_option("--outcome", dev.outcome, "Outcome column")->required();
  develop->add_option("--bundle", dev.bundle, "Bundle path (default: <out>/bundle.json)");
  develop->add_option("--m", dev.m, "Imputations")->check(CLI::PositiveNumber);
  develop->add_option("--cycles", dev.cycles, "Chained-equation cycles")->check(CLI::PositiveNumber);

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "Validate a bundle on a data file under one handling");
  validate->add_option("--bundle", val.bundle, "Bundle file")->required()->check(CLI::ExistingFile);
  validate->add_option("--data", val.data, "CSV data")->required()->check(CLI::ExistingFile);
  validate->add_option("--handling", val.handling, "method[:transported|refit]")->required();
  validate->add_option("--report", val.report, "Report CSV path (default: <out>/report.csv)");
  validate->add_option("--pooling", val.pooling, "average or stacked")->check(CLI::IsMember({"average", "stacked"}));
  validate->add_option("--m", val.m, "Imputations")->check(CLI::PositiveNumber);
  validate->add_option("--cycles", val.cycles, "Chained-equation cycles")->check(CLI::PositiveNumber);

  ImputeArgs imp;
  auto* impute = app.add_subcommand("impute", "Fit and/or apply an imputation package");
  impute->add_option("--data", imp.data, "CSV data")->required()->check(CLI::ExistingFile);
  impute->add_option("--package", imp.package, "Package to apply")->check(CLI::ExistingFile);
  impute->add_option("--strategy", imp.strategy, "cca, mean_mode, regression or multiple");
  impute->add_option("--predictors", imp.predictors, "name[:continuous|binary], comma separated")->delimiter(',');
  impute->add_option("--outcome", imp.outcome, "Outcome column");
  impute->add_flag("--with-outcome", imp.with_outcome, "Use the outcome in the imputation models");
  impute->add_option("--m", imp.m, "Imputations")->check(CLI::PositiveNumber);
  impute->add_option("--cycles", imp.cycles, "Chained-equation cycles")->check(CLI::PositiveNumber);

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Recompute bias tables and heatmaps from results.csv");
  report->add_option("--results", rep.results, "results.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--estimand", rep.estimands, "Estimands (default: all)")->delimiter(',');
  report->add_option("--metric", rep.metric, "Single metric heatmaps instead of four-metric panels");
  report->add_option("--scenario", rep.scenario, "Only this scenario's heatmaps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (simulate->parsed() && sim.grid.empty() && sim.preset.empty()) {
    err << "error: simulate needs --grid or --preset\n";
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(g, sim, out, err);
    if (bootstrap->parsed()) return cmd_bootstrap(g, boot, out, err);
    if (develop->parsed()) return cmd_develop(g, dev, out);
    if (validate->parsed()) return cmd_validate(g, val, out, err);
    if (impute->parsed()) return cmd_impute(g, imp, out);
    if (report->parsed()) return cmd_report(g, rep, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mdcompat
