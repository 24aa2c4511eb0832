#include "mdcompat/cpm.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mdcompat/error.hpp"
#include "mdcompat/glm.hpp"
#include "mdcompat/rng.hpp"
#include "package_json.hpp"

namespace mdcompat {

std::string to_string(DevelopmentMethod method) {
  switch (method) {
    case DevelopmentMethod::fully_observed: return "fully_observed";
    case DevelopmentMethod::cca: return "cca";
    case DevelopmentMethod::mean_mode: return "mean_mode";
    case DevelopmentMethod::regression: return "regression";
    case DevelopmentMethod::mi_no_y: return "mi_no_y";
    case DevelopmentMethod::mi_with_y: return "mi_with_y";
    case DevelopmentMethod::psm: return "psm";
  }
  return "fully_observed";
}

DevelopmentMethod parse_development_method(std::string_view text) {
  for (auto m : kAllDevelopmentMethods) {
    if (to_string(m) == text) return m;
  }
  throw ArgumentError("unknown development method '" + std::string(text) +
                      "' (expected fully_observed, cca, mean_mode, regression, mi_no_y, mi_with_y or psm)");
}

std::string to_string(HandlingMethod method) {
  switch (method) {
    case HandlingMethod::fully_observed: return "fully_observed";
    case HandlingMethod::cca: return "cca";
    case HandlingMethod::mean_mode: return "mean_mode";
    case HandlingMethod::regression: return "regression";
    case HandlingMethod::mi_no_y: return "mi_no_y";
    case HandlingMethod::mi_with_y: return "mi_with_y";
    case HandlingMethod::psm: return "psm";
  }
  return "fully_observed";
}

std::string to_string(HandlingMode mode) {
  switch (mode) {
    case HandlingMode::none: return "none";
    case HandlingMode::transported: return "transported";
    case HandlingMode::refit: return "refit";
  }
  return "none";
}

HandlingMethod parse_handling_method(std::string_view text) {
  for (auto m : {HandlingMethod::fully_observed, HandlingMethod::cca, HandlingMethod::mean_mode,
                 HandlingMethod::regression, HandlingMethod::mi_no_y, HandlingMethod::mi_with_y, HandlingMethod::psm}) {
    if (to_string(m) == text) return m;
  }
  throw ArgumentError("unknown validation handling '" + std::string(text) + "'");
}

HandlingMode parse_handling_mode(std::string_view text) {
  if (text == "none") return HandlingMode::none;
  if (text == "transported") return HandlingMode::transported;
  if (text == "refit") return HandlingMode::refit;
  throw ArgumentError("unknown handling mode '" + std::string(text) + "' (expected none, transported or refit)");
}

std::string ValidationHandling::label() const {
  if (mode == HandlingMode::none) return to_string(method);
  return to_string(method) + ":" + to_string(mode);
}

namespace {

HandlingMode default_mode(HandlingMethod method) {
  switch (method) {
    case HandlingMethod::fully_observed:
    case HandlingMethod::cca: return HandlingMode::none;
    case HandlingMethod::mean_mode:
    case HandlingMethod::psm: return HandlingMode::transported;
    default: return HandlingMode::refit;
  }
}

}  // namespace

ValidationHandling ValidationHandling::parse(std::string_view text) {
  const auto colon = text.find(':');
  ValidationHandling h;
  h.method = parse_handling_method(text.substr(0, colon));
  h.mode = colon == std::string_view::npos ? default_mode(h.method) : parse_handling_mode(text.substr(colon + 1));
  const bool modeless = h.method == HandlingMethod::fully_observed || h.method == HandlingMethod::cca;
  if (modeless != (h.mode == HandlingMode::none)) {
    throw ArgumentError("handling '" + std::string(text) + "' has an invalid mode");
  }
  if (h.method == HandlingMethod::psm && h.mode != HandlingMode::transported) {
    throw ArgumentError("pattern sub-model handling is always transported from development");
  }
  return h;
}

bool admissible(DevelopmentMethod dev, const ValidationHandling& h) {
  switch (h.method) {
    case HandlingMethod::fully_observed:
    case HandlingMethod::cca: return true;
    case HandlingMethod::mean_mode: return h.mode == HandlingMode::transported;
    case HandlingMethod::regression:
      return h.mode == HandlingMode::refit || dev == DevelopmentMethod::regression;
    case HandlingMethod::mi_no_y: return h.mode == HandlingMode::refit || dev == DevelopmentMethod::mi_no_y;
    case HandlingMethod::mi_with_y: return h.mode == HandlingMode::refit || dev == DevelopmentMethod::mi_with_y;
    case HandlingMethod::psm: return dev == DevelopmentMethod::psm;
  }
  return false;
}

std::vector<ValidationHandling> admitted_handlings(DevelopmentMethod dev, bool include_fully_observed) {
  using HM = HandlingMethod;
  using Md = HandlingMode;
  const std::vector<ValidationHandling> canonical = {
      {HM::fully_observed, Md::none}, {HM::cca, Md::none},          {HM::mean_mode, Md::transported},
      {HM::regression, Md::transported}, {HM::regression, Md::refit}, {HM::mi_no_y, Md::transported},
      {HM::mi_no_y, Md::refit},       {HM::mi_with_y, Md::transported}, {HM::mi_with_y, Md::refit},
      {HM::psm, Md::transported}};
  std::vector<ValidationHandling> out;
  for (const auto& h : canonical) {
    if (h.method == HM::fully_observed && !include_fully_observed) continue;
    if (admissible(dev, h)) out.push_back(h);
  }
  return out;
}

// ---------------------------------------------------------------------------

const Cpm& PatternSubmodelFamily::model_for(const MissingnessPattern& pattern) const {
  auto it = entries.find(pattern);
  if (it == entries.end() || !it->second.model) return fallback;
  return *it->second.model;
}

const Cpm& PatternSubmodelFamily::full_model() const {
  MissingnessPattern all;
  all.bits.assign(predictors.size(), 1);
  return model_for(all);
}

const Cpm& ModelBundle::primary_model() const {
  if (const auto* family = std::get_if<PatternSubmodelFamily>(&model)) return family->full_model();
  return std::get<Cpm>(model);
}

PooledEstimate rubin_pool(const std::vector<VectorXd>& estimates, const std::vector<MatrixXd>& covariances) {
  if (estimates.empty()) throw ArgumentError("rubin_pool needs at least one estimate");
  if (covariances.size() != estimates.size()) throw ArgumentError("rubin_pool needs one covariance per estimate");
  const Index p = estimates.front().size();
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    if (estimates[k].size() != p || covariances[k].rows() != p || covariances[k].cols() != p) {
      throw ArgumentError("rubin_pool inputs have inconsistent arity");
    }
  }
  const double m = static_cast<double>(estimates.size());
  PooledEstimate out;
  out.coefficients = VectorXd::Zero(p);
  MatrixXd within = MatrixXd::Zero(p, p);
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    out.coefficients += estimates[k];
    within += covariances[k];
  }
  out.coefficients /= m;
  within /= m;
  if (estimates.size() == 1) {
    out.coefficients = estimates.front();
    out.covariance = covariances.front();
    return out;
  }
  MatrixXd between = MatrixXd::Zero(p, p);
  for (const auto& e : estimates) {
    const VectorXd d = e - out.coefficients;
    between += d * d.transpose();
  }
  between /= (m - 1.0);
  out.covariance = within + (1.0 + 1.0 / m) * between;
  return out;
}

namespace {

MatrixXd design_for(const Dataset& ds, const std::vector<std::string>& names, const IndexList& rows) {
  MatrixXd x(static_cast<Index>(rows.size()), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const Index c = ds.column_index(names[j]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!ds.observed(rows[i], c)) throw ContractError("predictor '" + names[j] + "' is missing in a scored row");
      x(static_cast<Index>(i), static_cast<Index>(j)) = ds.value(rows[i], c);
    }
  }
  return x;
}

IndexList iota_rows(Index n) {
  IndexList rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

Cpm cpm_from_fit(const LogisticFit& fit, std::vector<std::string> predictors) {
  return Cpm{fit.coefficients, fit.coefficient_covariance, std::move(predictors), fit.converged, fit.ridge_used};
}

}  // namespace

Cpm fit_cpm(const Dataset& ds) {
  const auto names = ds.predictor_names();
  const MatrixXd x = ds.predictor_matrix();
  return cpm_from_fit(fit_logistic(x, ds.outcome()), names);
}

PatternSubmodelFamily fit_pattern_family(const Dataset& ds, const PsmThresholds& thresholds) {
  PatternSubmodelFamily family;
  family.predictors = ds.predictor_names();
  family.thresholds = thresholds;
  const VectorXd y = ds.outcome();
  family.fallback = cpm_from_fit(fit_logistic(MatrixXd(ds.rows(), 0), y), {});

  std::map<MissingnessPattern, IndexList> groups;
  for (Index i = 0; i < ds.rows(); ++i) groups[pattern_of(ds, i)].push_back(i);

  for (const auto& [pattern, rows] : groups) {
    PatternEntry entry;
    entry.n_rows = static_cast<Index>(rows.size());
    for (Index r : rows) entry.n_events += y(r) == 1.0;
    const Index minority = std::min(entry.n_events, entry.n_rows - entry.n_events);
    if (entry.n_rows >= thresholds.min_rows && minority >= thresholds.min_events) {
      std::vector<std::string> observed;
      for (std::size_t j = 0; j < pattern.bits.size(); ++j) {
        if (pattern.bits[j]) observed.push_back(family.predictors[j]);
      }
      const MatrixXd x = design_for(ds, observed, rows);
      VectorXd yp(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) yp(static_cast<Index>(i)) = y(rows[i]);
      try {
        entry.model = cpm_from_fit(fit_logistic(x, yp), observed);
      } catch (const Error&) {
        entry.model.reset();
      }
    }
    family.entries.emplace(pattern, std::move(entry));
  }
  return family;
}

ModelBundle develop_cpm(const Dataset& ds, DevelopmentMethod method, Stream& rng, const DevelopmentOptions& options) {
  const VectorXd y = ds.outcome();
  ModelBundle bundle;
  bundle.method = method;
  for (Index c : ds.predictor_columns()) bundle.schema.push_back(ds.column(c));
  bundle.schema.push_back(ds.column(ds.outcome_column()));

  ImputationOptions base_opts;
  base_opts.m = options.m;
  base_opts.cycles = options.cycles;
  Stream summary_rng = rng.split("summaries");
  bundle.summaries = fit_package(ImputationStrategy::mean_mode, ds, base_opts, summary_rng);
  bundle.summaries.provenance.stage = "development";

  bundle.metadata["development_method"] = to_string(method);
  bundle.metadata["n_rows"] = std::to_string(ds.rows());
  bundle.metadata["n_events"] = std::to_string(static_cast<Index>(y.sum()));
  bundle.metadata["root_seed"] = std::to_string(rng.seed().root_seed);
  bundle.metadata["seed_path"] = rng.seed().path_string();

  switch (method) {
    case DevelopmentMethod::fully_observed: {
      if (!ds.predictors_complete()) {
        throw DevelopmentError("fully observed development needs data without missing predictor values");
      }
      bundle.model = fit_cpm(ds);
      break;
    }
    case DevelopmentMethod::cca: {
      const Dataset cc = complete_case_filter(ds);
      if (cc.rows() == 0) throw DevelopmentError("complete case development: no complete rows");
      bundle.metadata["n_complete_rows"] = std::to_string(cc.rows());
      bundle.model = fit_cpm(cc);
      break;
    }
    case DevelopmentMethod::mean_mode:
    case DevelopmentMethod::regression: {
      const auto strategy =
          method == DevelopmentMethod::mean_mode ? ImputationStrategy::mean_mode : ImputationStrategy::regression;
      Stream fit_rng = rng.split("package");
      ImputationPackage pkg = fit_package(strategy, ds, base_opts, fit_rng);
      pkg.provenance.stage = "development";
      Stream apply_rng = rng.split("apply");
      const CompletedData completed = apply_package(pkg, ds, apply_rng);
      bundle.model = fit_cpm(completed.datasets.front());
      bundle.package = std::move(pkg);
      break;
    }
    case DevelopmentMethod::mi_no_y:
    case DevelopmentMethod::mi_with_y: {
      ImputationOptions opts = base_opts;
      opts.include_outcome = method == DevelopmentMethod::mi_with_y;
      Stream fit_rng = rng.split("package");
      ImputationPackage pkg = fit_package(ImputationStrategy::multiple, ds, opts, fit_rng);
      pkg.provenance.stage = "development";
      Stream apply_rng = rng.split("apply");
      const CompletedData completed = apply_package(pkg, ds, apply_rng);
      std::vector<VectorXd> estimates;
      std::vector<MatrixXd> covariances;
      bool converged = true;
      double ridge = 0.0;
      for (const auto& d : completed.datasets) {
        const Cpm fit = fit_cpm(d);
        estimates.push_back(fit.coefficients);
        covariances.push_back(fit.covariance);
        converged = converged && fit.converged;
        ridge = std::max(ridge, fit.ridge_used);
      }
      PooledEstimate pooled = rubin_pool(estimates, covariances);
      bundle.model = Cpm{pooled.coefficients, pooled.covariance, ds.predictor_names(), converged, ridge};
      bundle.package = std::move(pkg);
      bundle.metadata["m"] = std::to_string(opts.m);
      bundle.metadata["cycles"] = std::to_string(opts.cycles);
      bundle.metadata["mi_binary_draws"] = "logistic-bernoulli";
      break;
    }
    case DevelopmentMethod::psm: {
      bundle.model = fit_pattern_family(ds, options.psm);
      bundle.metadata["psm_min_rows"] = std::to_string(options.psm.min_rows);
      bundle.metadata["psm_min_events"] = std::to_string(options.psm.min_events);
      break;
    }
  }
  return bundle;
}

CompletedData complete_independent(const Dataset& ds, const ValidationHandling& handling, Stream& rng,
                                   const HandlingOptions& options) {
  ImputationOptions opts;
  opts.m = options.m;
  opts.cycles = options.cycles;
  switch (handling.method) {
    case HandlingMethod::fully_observed: {
      if (!ds.predictors_complete()) {
        throw ContractError("fully observed handling applied to data with missing predictor values");
      }
      CompletedData out;
      out.datasets.push_back(ds);
      out.row_filter = iota_rows(ds.rows());
      out.source_mask = ds.mask();
      return out;
    }
    case HandlingMethod::cca: {
      Stream unused = rng.split("cca");
      const ImputationPackage pkg = fit_package(ImputationStrategy::cca, ds, opts, unused);
      return apply_package(pkg, ds, unused);
    }
    case HandlingMethod::psm:
      throw HandlingError("pattern sub-model handling depends on the developed bundle");
    default: break;
  }
  if (handling.mode != HandlingMode::refit) {
    throw HandlingError("handling '" + handling.label() + "' depends on the developed bundle");
  }
  ImputationStrategy strategy = ImputationStrategy::multiple;
  if (handling.method == HandlingMethod::mean_mode) strategy = ImputationStrategy::mean_mode;
  if (handling.method == HandlingMethod::regression) strategy = ImputationStrategy::regression;
  opts.include_outcome = handling.method == HandlingMethod::mi_with_y;
  if (opts.include_outcome && !ds.has_outcome()) {
    throw ContractError("multiple imputation with the outcome needs an outcome column in the data");
  }
  Stream fit_rng = rng.split("fit");
  ImputationPackage pkg = fit_package(strategy, ds, opts, fit_rng);
  pkg.provenance.stage = "validation";
  Stream apply_rng = rng.split("apply");
  return apply_package(pkg, ds, apply_rng);
}

CompletedData complete_for_handling(const ModelBundle& bundle, const Dataset& ds, const ValidationHandling& handling,
                                    Stream& rng, const HandlingOptions& options) {
  if (handling.mode != HandlingMode::transported || handling.method == HandlingMethod::psm) {
    return complete_independent(ds, handling, rng, options);
  }
  const ImputationPackage* pkg = nullptr;
  switch (handling.method) {
    case HandlingMethod::mean_mode: pkg = &bundle.summaries; break;
    case HandlingMethod::regression:
      if (bundle.package && bundle.package->strategy == ImputationStrategy::regression) pkg = &*bundle.package;
      break;
    case HandlingMethod::mi_no_y:
    case HandlingMethod::mi_with_y: {
      const bool with_y = handling.method == HandlingMethod::mi_with_y;
      if (bundle.package && bundle.package->strategy == ImputationStrategy::multiple &&
          bundle.package->options.include_outcome == with_y) {
        pkg = &*bundle.package;
      }
      break;
    }
    default: break;
  }
  if (!pkg) {
    throw HandlingError("bundle developed with " + to_string(bundle.method) + " carries no package for '" +
                        handling.label() + "'");
  }
  if (pkg->requires_outcome() && !ds.has_outcome()) {
    throw ContractError("multiple imputation with the outcome needs an outcome column in the data");
  }
  Stream apply_rng = rng.split("apply");
  return apply_package(*pkg, ds, apply_rng);
}

Prediction score_completed(const ModelBundle& bundle, const CompletedData& completed) {
  const Cpm& model = bundle.primary_model();
  Prediction out;
  out.rows = completed.row_filter;
  const Index n = static_cast<Index>(completed.row_filter.size());
  out.probabilities.resize(n, static_cast<Index>(completed.datasets.size()));
  const IndexList rows = iota_rows(n);
  for (std::size_t k = 0; k < completed.datasets.size(); ++k) {
    const MatrixXd x = design_for(completed.datasets[k], model.predictors, rows);
    out.probabilities.col(static_cast<Index>(k)) = predict_probability(model.coefficients, x);
  }
  return out;
}

Prediction predict_pattern_routed(const PatternSubmodelFamily& family, const Dataset& ds) {
  if (ds.predictor_names() != family.predictors) {
    throw ContractError("dataset predictors do not match the pattern sub-model family");
  }
  std::map<MissingnessPattern, IndexList> groups;
  for (Index i = 0; i < ds.rows(); ++i) groups[pattern_of(ds, i)].push_back(i);
  Prediction out;
  out.rows = iota_rows(ds.rows());
  out.probabilities.resize(ds.rows(), 1);
  for (const auto& [pattern, rows] : groups) {
    const Cpm& model = family.model_for(pattern);
    const MatrixXd x = design_for(ds, model.predictors, rows);
    const VectorXd p = predict_probability(model.coefficients, x);
    for (std::size_t i = 0; i < rows.size(); ++i) out.probabilities(rows[i], 0) = p(static_cast<Index>(i));
  }
  return out;
}

Prediction predict_bundle(const ModelBundle& bundle, const Dataset& ds, const ValidationHandling& handling,
                          Stream& rng, const HandlingOptions& options) {
  if (handling.method == HandlingMethod::psm) {
    const auto* family = std::get_if<PatternSubmodelFamily>(&bundle.model);
    if (!family) {
      throw HandlingError("pattern sub-model handling needs a bundle developed with psm, not " +
                          to_string(bundle.method));
    }
    return predict_pattern_routed(*family, ds);
  }
  return score_completed(bundle, complete_for_handling(bundle, ds, handling, rng, options));
}

// ---------------------------------------------------------------------------
// Bundle files

namespace {

using codec::json;

json cpm_to_json(const Cpm& cpm) {
  return json{{"coefficients", codec::to_json(cpm.coefficients)},
              {"covariance", codec::to_json(cpm.covariance)},
              {"predictors", cpm.predictors},
              {"converged", cpm.converged},
              {"ridge_used", cpm.ridge_used}};
}

Cpm cpm_from_json(const json& j) {
  Cpm cpm;
  cpm.coefficients = codec::vector_from(codec::field(j, "coefficients"));
  cpm.covariance = codec::matrix_from(codec::field(j, "covariance"));
  cpm.predictors = codec::field(j, "predictors").get<std::vector<std::string>>();
  cpm.converged = codec::field(j, "converged").get<bool>();
  cpm.ridge_used = codec::field(j, "ridge_used").get<double>();
  if (cpm.coefficients.size() != static_cast<Index>(cpm.predictors.size()) + 1) {
    throw DecodeError("model coefficient count does not match its predictors");
  }
  return cpm;
}

ModelBundle bundle_from_json(const json& doc) {
  using codec::field;
  const int version = field(doc, "format_version").get<int>();
  if (version != kBundleFormatVersion) {
    throw DecodeError("unsupported bundle format_version: expected " + std::to_string(kBundleFormatVersion) +
                      ", found " + std::to_string(version));
  }
  ModelBundle bundle;
  try {
    bundle.method = parse_development_method(field(doc, "development_method").get<std::string>());
  } catch (const ArgumentError& e) {
    throw DecodeError(e.what());
  }
  for (const auto& c : field(doc, "schema")) bundle.schema.push_back(codec::column_spec_from(c));
  const json& model = field(doc, "model");
  const auto type = field(model, "type").get<std::string>();
  if (type == "cpm") {
    bundle.model = cpm_from_json(model);
  } else if (type == "pattern_family") {
    PatternSubmodelFamily family;
    family.predictors = field(model, "predictors").get<std::vector<std::string>>();
    family.fallback = cpm_from_json(field(model, "fallback"));
    family.thresholds.min_rows = field(model, "min_rows").get<Index>();
    family.thresholds.min_events = field(model, "min_events").get<Index>();
    for (const auto& p : field(model, "patterns")) {
      PatternEntry entry;
      entry.n_rows = field(p, "n_rows").get<Index>();
      entry.n_events = field(p, "n_events").get<Index>();
      const json& m = field(p, "model");
      if (!m.is_null()) entry.model = cpm_from_json(m);
      family.entries.emplace(MissingnessPattern::from_string(field(p, "pattern").get<std::string>()), std::move(entry));
    }
    bundle.model = std::move(family);
  } else {
    throw DecodeError("unknown model type '" + type + "'");
  }
  const json& pkg = field(doc, "package");
  if (!pkg.is_null()) bundle.package = detail::package_from_json_checked(pkg);
  bundle.summaries = detail::package_from_json_checked(field(doc, "summaries"));
  for (const auto& [k, v] : field(doc, "metadata").items()) bundle.metadata[k] = v.get<std::string>();
  return bundle;
}

}  // namespace

std::string encode_bundle(const ModelBundle& bundle) {
  json model;
  if (const auto* cpm = std::get_if<Cpm>(&bundle.model)) {
    model = cpm_to_json(*cpm);
    model["type"] = "cpm";
  } else {
    const auto& family = std::get<PatternSubmodelFamily>(bundle.model);
    json patterns = json::array();
    for (const auto& [pattern, entry] : family.entries) {
      patterns.push_back(json{{"pattern", pattern.to_string()},
                              {"n_rows", entry.n_rows},
                              {"n_events", entry.n_events},
                              {"model", entry.model ? cpm_to_json(*entry.model) : json(nullptr)}});
    }
    model = json{{"type", "pattern_family"},
                 {"predictors", family.predictors},
                 {"fallback", cpm_to_json(family.fallback)},
                 {"min_rows", family.thresholds.min_rows},
                 {"min_events", family.thresholds.min_events},
                 {"patterns", patterns}};
  }
  json schema = json::array();
  for (const auto& c : bundle.schema) schema.push_back(codec::to_json(c));
  json doc{{"format_version", kBundleFormatVersion},
           {"development_method", to_string(bundle.method)},
           {"schema", schema},
           {"model", model},
           {"package", bundle.package ? detail::package_to_json(*bundle.package) : json(nullptr)},
           {"summaries", detail::package_to_json(bundle.summaries)},
           {"metadata", bundle.metadata}};
  return doc.dump(1);
}

ModelBundle decode_bundle(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const std::exception& e) {
    throw DecodeError(std::string("bundle is not valid JSON: ") + e.what());
  }
  try {
    return bundle_from_json(doc);
  } catch (const DecodeError&) {
    throw;
  } catch (const std::exception& e) {
    throw DecodeError(std::string("malformed bundle: ") + e.what());
  }
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << encode_bundle(bundle) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_bundle(ss.str());
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

}  // namespace mdcompat
