#include "mdcompat/datagen.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "mdcompat/error.hpp"
#include "mdcompat/glm.hpp"
#include "mdcompat/rng.hpp"

namespace mdcompat {

std::string to_string(X1Kind kind) { return kind == X1Kind::continuous ? "continuous" : "categorical"; }

X1Kind parse_x1_kind(std::string_view text) {
  if (text == "continuous") return X1Kind::continuous;
  if (text == "categorical" || text == "binary") return X1Kind::categorical;
  throw ConfigError("unknown X1 type '" + std::string(text) + "' (expected continuous or categorical)");
}

void ScenarioConfig::validate() const {
  auto open_unit = [](double p) { return p > 0.0 && p < 1.0; };
  if (!open_unit(target_prevalence)) throw ArgumentError("target prevalence must lie in (0, 1)");
  if (!(target_missing >= 0.0 && target_missing < 1.0)) throw ArgumentError("missing proportion must lie in [0, 1)");
  if (!(std::abs(rho) <= 1.0)) throw ArgumentError("rho must lie in [-1, 1]");
  if (n_dev < 1 || n_val < 1) throw ArgumentError("development and validation sizes must be positive");
  if (iterations < 1) throw ArgumentError("iterations must be positive");
}

char dag_label(const MissingnessEffects& beta, double target_missing) {
  if (target_missing <= 0.0) return 'a';
  const bool x1 = beta.x1 != 0.0;
  const bool x2 = beta.x2 != 0.0;
  const bool u = beta.u != 0.0;
  if (x1 && u) return 'f';
  if (x1) return 'd';
  if (u) return 'e';
  if (x2) return 'c';
  return 'b';
}

double calibrate_intercept(ConstVectorRef terms, double target) {
  if (!(target > 0.0 && target < 1.0)) throw CalibrationError("calibration target must lie in (0, 1)");
  if (terms.size() == 0) throw CalibrationError("calibration needs at least one row");
  const double n = static_cast<double>(terms.size());
  auto mean_prob = [&](double c) {
    double s = 0.0;
    for (Index i = 0; i < terms.size(); ++i) s += logistic(c + terms(i));
    return s / n;
  };
  double lo = -40.0;
  double hi = 40.0;
  const double f_lo = mean_prob(lo);
  const double f_hi = mean_prob(hi);
  if (!(f_lo <= target && target <= f_hi)) {
    throw CalibrationError("target " + format_double(target) + " is unattainable: mean probability spans [" +
                           format_double(f_lo) + ", " + format_double(f_hi) + "] over intercepts in [-40, 40]");
  }
  // Bisect to the resolution of doubles; the mean is monotone in c.
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_prob(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double c = 0.5 * (lo + hi);
  if (std::abs(mean_prob(c) - target) > 1e-8) {
    throw CalibrationError("bisection could not reach the target within 1e-8");
  }
  return c;
}

double dichotomize_threshold(double target_prev) {
  if (!(target_prev > 0.0 && target_prev < 1.0)) throw ArgumentError("dichotomization prevalence must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), 1.0 - target_prev);
}

VectorXd dichotomize(ConstVectorRef column, double target_prev) {
  const double z = dichotomize_threshold(target_prev);
  return (column.array() > z).cast<double>().matrix();
}

std::vector<ColumnSpec> simulation_columns(X1Kind kind) {
  return {
      {"X1", kind == X1Kind::continuous ? ColumnKind::continuous : ColumnKind::binary, ColumnRole::predictor},
      {"X2", ColumnKind::continuous, ColumnRole::predictor},
      {"U", ColumnKind::continuous, ColumnRole::latent},
      {"Y", ColumnKind::binary, ColumnRole::outcome},
  };
}

Dataset induce_missingness(const Dataset& ds, const MissingnessEffects& beta, double target_missing, Stream& rng) {
  const Index x1 = ds.column_index("X1");
  const Index x2 = ds.column_index("X2");
  const Index u = ds.column_index("U");
  for (Index c : {x1, x2, u}) {
    if (ds.missing_count(c) > 0) throw ContractError("induce_missingness needs X1, X2 and U fully observed");
  }
  if (!(target_missing >= 0.0 && target_missing < 1.0)) throw ArgumentError("missing proportion must lie in [0, 1)");
  MaskMatrix mask = ds.mask();
  if (target_missing == 0.0 || ds.rows() == 0) return ds.with_mask(std::move(mask));

  const VectorXd terms = beta.x1 * ds.values().col(x1) + beta.x2 * ds.values().col(x2) + beta.u * ds.values().col(u);
  const double b0 = calibrate_intercept(terms, 1.0 - target_missing);
  for (Index i = 0; i < ds.rows(); ++i) {
    const double p_observed = logistic(b0 + terms(i));
    mask(i, x1) = rng.uniform() < p_observed ? 1 : 0;
  }
  return ds.with_mask(std::move(mask));
}

Dataset generate_population(const ScenarioConfig& cfg, Index n, Stream& rng) {
  cfg.validate();
  Stream cov_rng = rng.split("covariates");
  Stream latent_rng = rng.split("latent");
  Stream outcome_rng = rng.split("outcome");

  MatrixXd values(n, 4);
  values.leftCols(2) = sample_bivariate_normal(n, cfg.rho, cov_rng);
  if (cfg.x1_kind == X1Kind::categorical) values.col(0) = dichotomize(values.col(0), kCategoricalX1Prevalence);
  for (Index i = 0; i < n; ++i) values(i, 2) = latent_rng.normal();

  const VectorXd terms = cfg.gamma1 * values.col(0) + cfg.gamma2 * values.col(1) + cfg.gamma3 * values.col(2);
  const double gamma0 = calibrate_intercept(terms, cfg.target_prevalence);
  for (Index i = 0; i < n; ++i) values(i, 3) = outcome_rng.uniform() < logistic(gamma0 + terms(i)) ? 1.0 : 0.0;
  return Dataset::fully_observed(simulation_columns(cfg.x1_kind), std::move(values));
}

namespace {

GeneratedCohort mask_cohort(Dataset full, const MissingnessEffects& beta, double target_missing, Stream& rng) {
  GeneratedCohort out;
  out.masked_data = induce_missingness(full, beta, target_missing, rng);
  out.full_data = std::move(full);
  const Index n = out.full_data.rows();
  if (n > 0) {
    out.realized_prevalence = out.full_data.values().col(out.full_data.outcome_column()).mean();
    const Index x1 = out.masked_data.column_index("X1");
    out.realized_missing = static_cast<double>(out.masked_data.missing_count(x1)) / static_cast<double>(n);
  }
  out.dag_label = dag_label(beta, target_missing);
  return out;
}

}  // namespace

GeneratedCohort generate_cohort(const ScenarioConfig& cfg, Stage stage, Stream& rng) {
  const bool dev = stage == Stage::development;
  Stream pop_rng = rng.split("population");
  Stream miss_rng = rng.split("missingness");
  Dataset full = generate_population(cfg, dev ? cfg.n_dev : cfg.n_val, pop_rng);
  return mask_cohort(std::move(full), dev ? cfg.beta_dev : cfg.beta_val, cfg.target_missing, miss_rng);
}

CohortPair generate_cohort_pair(const ScenarioConfig& cfg, Stream& rng) {
  Stream pop_rng = rng.split("population");
  Stream split_rng = rng.split("split");
  Stream dev_rng = rng.split("missing_dev");
  Stream val_rng = rng.split("missing_val");
  const Dataset pool = generate_population(cfg, cfg.n_dev + cfg.n_val, pop_rng);
  auto [dev, val] = random_split(pool, cfg.n_dev, split_rng);
  CohortPair out;
  out.population_prevalence = pool.values().col(pool.outcome_column()).mean();
  out.development = mask_cohort(std::move(dev), cfg.beta_dev, cfg.target_missing, dev_rng);
  out.validation = mask_cohort(std::move(val), cfg.beta_val, cfg.target_missing, val_rng);
  return out;
}

}  // namespace mdcompat
