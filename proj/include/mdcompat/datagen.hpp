#pragma once

#include <string>

#include "mdcompat/tabular.hpp"

namespace mdcompat {

class Stream;

enum class X1Kind { continuous, categorical };
enum class Stage { development, validation };

std::string to_string(X1Kind kind);
X1Kind parse_x1_kind(std::string_view text);

/// Log-odds effects of (X1, X2, U) on the probability that X1 is observed.
struct MissingnessEffects {
  double x1 = 0.0;
  double x2 = 0.0;
  double u = 0.0;

  bool operator==(const MissingnessEffects&) const = default;
};

/// One cell of the simulation grid.
struct ScenarioConfig {
  X1Kind x1_kind = X1Kind::continuous;
  double rho = 0.0;
  double gamma1 = 0.5;
  double gamma2 = 0.5;
  double gamma3 = 0.5;
  double target_prevalence = 0.2;
  MissingnessEffects beta_dev;
  MissingnessEffects beta_val;
  double target_missing = 0.5;
  Index n_dev = 5000;
  Index n_val = 5000;
  Index iterations = 200;
  std::string scenario_id;

  /// Checks probabilities and sizes; throws ArgumentError.
  void validate() const;
};

/// Prevalence of the dichotomized categorical X1.
inline constexpr double kCategoricalX1Prevalence = 0.3;

/// DAG label: 'a' (no missingness), 'b' MCAR, 'c' MAR,
/// 'd' MNAR-X, 'e' MNAR-Y, 'f' MNAR-XY.
char dag_label(const MissingnessEffects& beta, double target_missing);

/// Intercept c with mean(logistic(c + terms)) == target, by bisection on [-40, 40].
double calibrate_intercept(ConstVectorRef terms, double target);

double dichotomize_threshold(double target_prev);
/// 1 where the value exceeds the standard-normal (1 - target_prev) quantile.
VectorXd dichotomize(ConstVectorRef column, double target_prev);

/// Masks X1 row-wise with P(observed) = logistic(b0 + b1 X1 + b2 X2 + b3 U),
/// b0 calibrated so the mean observation probability is 1 - target_missing.
Dataset induce_missingness(const Dataset& ds, const MissingnessEffects& beta, double target_missing, Stream& rng);

struct GeneratedCohort {
  Dataset full_data;
  Dataset masked_data;
  double realized_prevalence = 0.0;
  double realized_missing = 0.0;
  char dag_label = 'a';
};

/// Columns X1, X2 (predictors), U (latent), Y (outcome).
std::vector<ColumnSpec> simulation_columns(X1Kind kind);

/// Fully observed target-population sample of n rows; gamma0 is calibrated on
/// this sample to the target prevalence.
Dataset generate_population(const ScenarioConfig& cfg, Index n, Stream& rng);

/// Standalone cohort of the stage's size.
GeneratedCohort generate_cohort(const ScenarioConfig& cfg, Stage stage, Stream& rng);

struct CohortPair {
  GeneratedCohort development;
  GeneratedCohort validation;
  double population_prevalence = 0.0;
};

/// One pool of n_dev + n_val rows, split at random, then missingness induced
/// separately per stage with that stage's effects.
CohortPair generate_cohort_pair(const ScenarioConfig& cfg, Stream& rng);

}  // namespace mdcompat
