#include "mdcompat/impute.hpp"

#include <algorithm>
#include <cmath>

#include "package_json.hpp"
#include "mdcompat/error.hpp"
#include "mdcompat/rng.hpp"

namespace mdcompat {

std::string to_string(ImputationStrategy s) {
  switch (s) {
    case ImputationStrategy::cca: return "cca";
    case ImputationStrategy::mean_mode: return "mean_mode";
    case ImputationStrategy::regression: return "regression";
    case ImputationStrategy::multiple: return "multiple";
  }
  return "cca";
}

ImputationStrategy parse_imputation_strategy(std::string_view text) {
  if (text == "cca") return ImputationStrategy::cca;
  if (text == "mean_mode") return ImputationStrategy::mean_mode;
  if (text == "regression") return ImputationStrategy::regression;
  if (text == "multiple") return ImputationStrategy::multiple;
  throw ArgumentError("unknown imputation strategy '" + std::string(text) + "'");
}

const VariableModel* ImputationPackage::model_for(std::string_view name) const {
  for (const auto& m : models) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

namespace {

// Predictor values (plus the outcome as a trailing column when requested) that
// imputation works on in place. Only cells flagged missing are ever written.
struct Workspace {
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  MatrixXd values;
  std::vector<IndexList> missing_rows;  // per predictor
  Index n_predictors = 0;

  Index index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<Index>(i);
    }
    throw ContractError("imputation model refers to unknown column '" + std::string(name) + "'");
  }

  MatrixXd design(const IndexList& regressor_cols, const IndexList& rows) const {
    MatrixXd x(static_cast<Index>(rows.size()), static_cast<Index>(regressor_cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < regressor_cols.size(); ++j) {
        x(static_cast<Index>(i), static_cast<Index>(j)) = values(rows[i], regressor_cols[j]);
      }
    }
    return x;
  }
};

Workspace make_workspace(const Dataset& ds, bool with_outcome) {
  Workspace w;
  const IndexList pcols = ds.predictor_columns();
  w.n_predictors = static_cast<Index>(pcols.size());
  const Index extra = with_outcome ? 1 : 0;
  w.values.resize(ds.rows(), w.n_predictors + extra);
  for (std::size_t j = 0; j < pcols.size(); ++j) {
    const ColumnSpec& spec = ds.column(pcols[j]);
    w.names.push_back(spec.name);
    w.kinds.push_back(spec.kind);
    IndexList missing;
    for (Index i = 0; i < ds.rows(); ++i) {
      if (ds.observed(i, pcols[j])) {
        w.values(i, static_cast<Index>(j)) = ds.value(i, pcols[j]);
      } else {
        w.values(i, static_cast<Index>(j)) = 0.0;
        missing.push_back(i);
      }
    }
    w.missing_rows.push_back(std::move(missing));
  }
  if (with_outcome) {
    const Index oc = ds.outcome_column();
    if (ds.missing_count(oc) > 0) {
      throw ContractError("imputation with the outcome needs the outcome '" + ds.column(oc).name +
                          "' fully observed");
    }
    w.names.push_back(ds.column(oc).name);
    w.kinds.push_back(ds.column(oc).kind);
    w.values.col(w.n_predictors) = ds.values().col(oc);
  }
  return w;
}

void initialize_missing(Workspace& w, const std::vector<ColumnSummary>& summaries) {
  for (Index j = 0; j < w.n_predictors; ++j) {
    for (Index i : w.missing_rows[static_cast<std::size_t>(j)]) {
      w.values(i, j) = summaries[static_cast<std::size_t>(j)].value;
    }
  }
}

IndexList resolve_regressors(const Workspace& w, const VariableModel& model) {
  IndexList cols;
  for (const auto& r : model.regressors) cols.push_back(w.index_of(r));
  return cols;
}

VariableModel fit_variable(const Workspace& w, Index target, const IndexList& regressor_cols, const IndexList& rows) {
  VariableModel model;
  model.name = w.names[static_cast<std::size_t>(target)];
  model.kind = w.kinds[static_cast<std::size_t>(target)];
  std::vector<std::string> reg_names;
  for (Index c : regressor_cols) reg_names.push_back(w.names[static_cast<std::size_t>(c)]);
  model.regressors = reg_names;
  const MatrixXd x = w.design(regressor_cols, rows);
  VectorXd y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Index>(i)) = w.values(rows[i], target);
  try {
    if (model.kind == ColumnKind::continuous) {
      model.fit = fit_linear(x, y, reg_names);
    } else {
      model.fit = fit_logistic(x, y);
    }
  } catch (const Error& e) {
    throw FitError("imputation model for '" + model.name + "' failed: " + e.what());
  }
  return model;
}

enum class FillMode { deterministic, stochastic };

void fill_variable(Workspace& w, Index target, const VariableModel& model, FillMode mode, Stream* rng) {
  const IndexList& rows = w.missing_rows[static_cast<std::size_t>(target)];
  if (rows.empty()) return;
  const IndexList regs = resolve_regressors(w, model);
  const MatrixXd x = w.design(regs, rows);
  if (const auto* lin = std::get_if<LinearFit>(&model.fit)) {
    if (mode == FillMode::deterministic) {
      const VectorXd mean = linear_predictor(lin->coefficients, x);
      for (std::size_t i = 0; i < rows.size(); ++i) w.values(rows[i], target) = mean(static_cast<Index>(i));
      return;
    }
    const LinearDraw draw = posterior_draw(*lin, *rng);
    const VectorXd mean = linear_predictor(draw.coefficients, x);
    const double sd = std::sqrt(draw.residual_variance);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      w.values(rows[i], target) = mean(static_cast<Index>(i)) + sd * rng->normal();
    }
    return;
  }
  const auto& logit_fit = std::get<LogisticFit>(model.fit);
  if (mode == FillMode::deterministic) {
    // Point estimate for a binary predictor is its conditional probability.
    const VectorXd p = predict_probability(logit_fit.coefficients, x);
    for (std::size_t i = 0; i < rows.size(); ++i) w.values(rows[i], target) = p(static_cast<Index>(i));
    return;
  }
  const VectorXd beta = posterior_draw(logit_fit, *rng);
  const VectorXd p = predict_probability(beta, x);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    w.values(rows[i], target) = rng->bernoulli(p(static_cast<Index>(i))) ? 1.0 : 0.0;
  }
}

IndexList incomplete_predictors(const Workspace& w) {
  IndexList out;
  for (Index j = 0; j < w.n_predictors; ++j) {
    if (!w.missing_rows[static_cast<std::size_t>(j)].empty()) out.push_back(j);
  }
  return out;
}

IndexList all_rows(Index n) {
  IndexList rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

Dataset rebuild(const Dataset& ds, const Workspace& w) {
  MatrixXd values = ds.values();
  MaskMatrix mask = ds.mask();
  const IndexList pcols = ds.predictor_columns();
  for (std::size_t j = 0; j < pcols.size(); ++j) {
    for (Index i : w.missing_rows[j]) {
      values(i, pcols[j]) = w.values(i, static_cast<Index>(j));
      mask(i, pcols[j]) = 1;
    }
  }
  return ds.with_values(std::move(values), std::move(mask));
}

void check_schema(const ImputationPackage& pkg, const Dataset& ds) {
  const auto names = ds.predictor_names();
  if (names != pkg.predictors) {
    std::string expected;
    for (const auto& n : pkg.predictors) expected += (expected.empty() ? "" : ", ") + n;
    std::string found;
    for (const auto& n : names) found += (found.empty() ? "" : ", ") + n;
    throw ContractError("package predictors (" + expected + ") do not match dataset predictors (" + found + ")");
  }
  const IndexList pcols = ds.predictor_columns();
  for (std::size_t j = 0; j < pcols.size() && j < pkg.summaries.size(); ++j) {
    if (ds.column(pcols[j]).kind != pkg.summaries[j].kind) {
      throw ContractError("predictor '" + pkg.predictors[j] + "' changed kind since the package was fitted");
    }
  }
}

const VariableModel& required_model(const ImputationPackage& pkg, const std::string& name) {
  const VariableModel* m = pkg.model_for(name);
  if (!m) throw ContractError("package has no imputation model for '" + name + "'");
  return *m;
}

}  // namespace

ImputationPackage fit_package(ImputationStrategy strategy, const Dataset& ds, const ImputationOptions& options,
                              Stream& rng) {
  ImputationPackage pkg;
  pkg.strategy = strategy;
  pkg.options = options;
  pkg.predictors = ds.predictor_names();
  pkg.provenance.root_seed = rng.seed().root_seed;
  pkg.provenance.seed_path = rng.seed().path_string();
  if (strategy == ImputationStrategy::cca) return pkg;

  if (options.include_outcome && strategy != ImputationStrategy::multiple) {
    throw ContractError("only multiple imputation may include the outcome");
  }
  if (options.m < 1) throw ArgumentError("number of imputations must be at least 1");
  if (options.cycles < 1) throw ArgumentError("number of chained-equation cycles must be at least 1");
  pkg.summaries = column_summaries(ds);
  if (strategy == ImputationStrategy::mean_mode) return pkg;

  if (strategy == ImputationStrategy::regression) {
    Workspace w = make_workspace(ds, false);
    const IndexList pcols = ds.predictor_columns();
    for (Index j = 0; j < w.n_predictors; ++j) {
      IndexList regs;
      for (Index k = 0; k < w.n_predictors; ++k) {
        if (k != j) regs.push_back(k);
      }
      IndexList rows;
      for (Index i = 0; i < ds.rows(); ++i) {
        bool ok = true;
        for (Index c : regs) ok = ok && ds.observed(i, pcols[static_cast<std::size_t>(c)]);
        if (ok && ds.observed(i, pcols[static_cast<std::size_t>(j)])) rows.push_back(i);
      }
      const bool needed = !w.missing_rows[static_cast<std::size_t>(j)].empty();
      try {
        pkg.models.push_back(fit_variable(w, j, regs, rows));
      } catch (const FitError&) {
        // Models for complete predictors only serve transport; skip if unfittable.
        if (needed) throw;
      }
    }
    return pkg;
  }

  // Chained equations.
  if (options.include_outcome) pkg.outcome = ds.column(ds.outcome_column()).name;
  Workspace w = make_workspace(ds, options.include_outcome);
  initialize_missing(w, pkg.summaries);
  const IndexList incomplete = incomplete_predictors(w);
  const int cycles = incomplete.size() > 1 ? options.cycles : 1;
  auto regressors_of = [&](Index j) {
    IndexList regs;
    for (Index k = 0; k < w.values.cols(); ++k) {
      if (k != j) regs.push_back(k);
    }
    return regs;
  };
  std::vector<std::optional<VariableModel>> fitted(static_cast<std::size_t>(w.n_predictors));
  for (int cycle = 0; cycle < cycles; ++cycle) {
    for (Index j : incomplete) {
      IndexList rows;
      const auto& missing = w.missing_rows[static_cast<std::size_t>(j)];
      std::vector<char> is_missing(static_cast<std::size_t>(ds.rows()), 0);
      for (Index i : missing) is_missing[static_cast<std::size_t>(i)] = 1;
      for (Index i = 0; i < ds.rows(); ++i) {
        if (!is_missing[static_cast<std::size_t>(i)]) rows.push_back(i);
      }
      fitted[static_cast<std::size_t>(j)] = fit_variable(w, j, regressors_of(j), rows);
      if (incomplete.size() > 1) {
        Stream draw = rng.split("cycle" + std::to_string(cycle) + "/" + w.names[static_cast<std::size_t>(j)]);
        fill_variable(w, j, *fitted[static_cast<std::size_t>(j)],
                      options.posterior_draws ? FillMode::stochastic : FillMode::deterministic, &draw);
      }
    }
  }
  const IndexList everything = all_rows(ds.rows());
  for (Index j = 0; j < w.n_predictors; ++j) {
    if (fitted[static_cast<std::size_t>(j)]) {
      pkg.models.push_back(std::move(*fitted[static_cast<std::size_t>(j)]));
      continue;
    }
    try {
      pkg.models.push_back(fit_variable(w, j, regressors_of(j), everything));
    } catch (const FitError&) {
    }
  }
  return pkg;
}

CompletedData apply_package(const ImputationPackage& pkg, const Dataset& ds, Stream& rng) {
  check_schema(pkg, ds);
  CompletedData out;
  out.source_mask = ds.mask();

  if (pkg.strategy == ImputationStrategy::cca) {
    const IndexList pcols = ds.predictor_columns();
    for (Index i = 0; i < ds.rows(); ++i) {
      bool complete = true;
      for (Index c : pcols) complete = complete && ds.observed(i, c);
      if (complete) out.row_filter.push_back(i);
    }
    out.datasets.push_back(ds.select_rows(out.row_filter));
    return out;
  }

  out.row_filter = all_rows(ds.rows());
  if (pkg.strategy == ImputationStrategy::mean_mode) {
    Workspace w = make_workspace(ds, false);
    initialize_missing(w, pkg.summaries);
    out.datasets.push_back(rebuild(ds, w));
    return out;
  }

  if (pkg.requires_outcome()) {
    if (!ds.has_outcome()) {
      throw ContractError("multiple imputation with the outcome cannot be applied to data without an outcome column");
    }
    const Index oc = ds.outcome_column();
    if (ds.column(oc).name != pkg.outcome) {
      throw ContractError("package imputes with outcome '" + pkg.outcome + "' but the dataset's outcome is '" +
                          ds.column(oc).name + "'");
    }
  }
  Workspace base = make_workspace(ds, pkg.requires_outcome());
  initialize_missing(base, pkg.summaries);
  const IndexList incomplete = incomplete_predictors(base);
  std::vector<const VariableModel*> models(static_cast<std::size_t>(base.n_predictors), nullptr);
  for (Index j : incomplete) models[static_cast<std::size_t>(j)] = &required_model(pkg, base.names[static_cast<std::size_t>(j)]);
  const int cycles = incomplete.size() > 1 ? pkg.options.cycles : 1;

  if (pkg.strategy == ImputationStrategy::regression) {
    for (int cycle = 0; cycle < cycles; ++cycle) {
      for (Index j : incomplete) fill_variable(base, j, *models[static_cast<std::size_t>(j)], FillMode::deterministic, nullptr);
    }
    out.datasets.push_back(rebuild(ds, base));
    return out;
  }

  const FillMode mode = pkg.options.posterior_draws ? FillMode::stochastic : FillMode::deterministic;
  for (int k = 0; k < pkg.options.m; ++k) {
    Workspace w = base;
    Stream imp = rng.split("imputation" + std::to_string(k + 1));
    for (int cycle = 0; cycle < cycles; ++cycle) {
      for (Index j : incomplete) {
        Stream draw = imp.split("cycle" + std::to_string(cycle) + "/" + w.names[static_cast<std::size_t>(j)]);
        fill_variable(w, j, *models[static_cast<std::size_t>(j)], mode, &draw);
      }
    }
    out.datasets.push_back(rebuild(ds, w));
  }
  return out;
}

std::string encode_package(const ImputationPackage& pkg) {
  using codec::json;
  json variables = json::array();
  for (const auto& m : pkg.models) {
    json model = std::visit([](const auto& fit) { return codec::to_json(fit); }, m.fit);
    variables.push_back(json{{"name", m.name}, {"kind", to_string(m.kind)}, {"regressors", m.regressors}, {"model", model}});
  }
  json summaries = json::array();
  for (const auto& s : pkg.summaries) {
    summaries.push_back(json{{"name", s.name}, {"kind", to_string(s.kind)}, {"value", s.value},
                             {"observed_count", s.observed_count}});
  }
  json doc{
      {"format_version", kPackageFormatVersion},
      {"strategy", to_string(pkg.strategy)},
      {"options", {{"include_outcome", pkg.options.include_outcome},
                   {"m", pkg.options.m},
                   {"cycles", pkg.options.cycles},
                   {"posterior_draws", pkg.options.posterior_draws},
                   {"binary_draws", "logistic-bernoulli"}}},
      {"predictors", pkg.predictors},
      {"outcome", pkg.outcome},
      {"summaries", summaries},
      {"variables", variables},
      {"provenance", {{"stage", pkg.provenance.stage},
                      {"root_seed", pkg.provenance.root_seed},
                      {"seed_path", pkg.provenance.seed_path}}},
  };
  return doc.dump(1);
}

namespace {

ImputationPackage package_from_json(const codec::json& doc) {
  using codec::field;
  const int version = field(doc, "format_version").get<int>();
  if (version != kPackageFormatVersion) {
    throw DecodeError("unsupported package format_version: expected " + std::to_string(kPackageFormatVersion) +
                      ", found " + std::to_string(version));
  }
  ImputationPackage pkg;
  try {
    pkg.strategy = parse_imputation_strategy(field(doc, "strategy").get<std::string>());
  } catch (const ArgumentError& e) {
    throw DecodeError(e.what());
  }
  const auto& opts = field(doc, "options");
  pkg.options.include_outcome = field(opts, "include_outcome").get<bool>();
  pkg.options.m = field(opts, "m").get<int>();
  pkg.options.cycles = field(opts, "cycles").get<int>();
  pkg.options.posterior_draws = field(opts, "posterior_draws").get<bool>();
  pkg.predictors = field(doc, "predictors").get<std::vector<std::string>>();
  pkg.outcome = field(doc, "outcome").get<std::string>();
  for (const auto& s : field(doc, "summaries")) {
    pkg.summaries.push_back(ColumnSummary{field(s, "name").get<std::string>(),
                                          parse_column_kind(field(s, "kind").get<std::string>()),
                                          field(s, "value").get<double>(), field(s, "observed_count").get<Index>()});
  }
  for (const auto& v : field(doc, "variables")) {
    VariableModel m;
    m.name = field(v, "name").get<std::string>();
    m.kind = parse_column_kind(field(v, "kind").get<std::string>());
    m.regressors = field(v, "regressors").get<std::vector<std::string>>();
    const auto& model = field(v, "model");
    const auto family = field(model, "family").get<std::string>();
    if (family == "linear") {
      m.fit = codec::linear_fit_from(model);
    } else if (family == "logistic") {
      m.fit = codec::logistic_fit_from(model);
    } else {
      throw DecodeError("unknown model family '" + family + "'");
    }
    pkg.models.push_back(std::move(m));
  }
  const auto& prov = field(doc, "provenance");
  pkg.provenance.stage = field(prov, "stage").get<std::string>();
  pkg.provenance.root_seed = field(prov, "root_seed").get<std::uint64_t>();
  pkg.provenance.seed_path = field(prov, "seed_path").get<std::string>();
  return pkg;
}

}  // namespace

namespace detail {
codec::json package_to_json(const ImputationPackage& pkg) { return codec::json::parse(encode_package(pkg)); }
ImputationPackage package_from_json_checked(const codec::json& doc) {
  try {
    return package_from_json(doc);
  } catch (const DecodeError&) {
    throw;
  } catch (const std::exception& e) {
    throw DecodeError(std::string("malformed package: ") + e.what());
  }
}
}  // namespace detail

ImputationPackage decode_package(std::string_view bytes) {
  codec::json doc;
  try {
    doc = codec::json::parse(bytes);
  } catch (const std::exception& e) {
    throw DecodeError(std::string("package is not valid JSON: ") + e.what());
  }
  return detail::package_from_json_checked(doc);
}

}  // namespace mdcompat
