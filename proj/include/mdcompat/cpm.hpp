#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mdcompat/impute.hpp"
#include "mdcompat/tabular.hpp"

namespace mdcompat {

class Stream;

enum class DevelopmentMethod { fully_observed, cca, mean_mode, regression, mi_no_y, mi_with_y, psm };

inline constexpr DevelopmentMethod kAllDevelopmentMethods[] = {
    DevelopmentMethod::fully_observed, DevelopmentMethod::cca,       DevelopmentMethod::mean_mode,
    DevelopmentMethod::regression,     DevelopmentMethod::mi_no_y,   DevelopmentMethod::mi_with_y,
    DevelopmentMethod::psm};

std::string to_string(DevelopmentMethod method);
DevelopmentMethod parse_development_method(std::string_view text);

/// Logistic prediction model over the named predictors.
struct Cpm {
  VectorXd coefficients;  // intercept, then one slope per predictor
  MatrixXd covariance;
  std::vector<std::string> predictors;
  bool converged = true;
  double ridge_used = 0.0;
};

struct PsmThresholds {
  Index min_rows = 25;
  /// Minimum count of each outcome class in the pattern.
  Index min_events = 5;
};

struct PatternEntry {
  /// Empty means the pattern routes to the family's fallback model.
  std::optional<Cpm> model;
  Index n_rows = 0;
  Index n_events = 0;
};

/// One sub-model per missingness pattern seen in training data.
struct PatternSubmodelFamily {
  std::vector<std::string> predictors;
  std::map<MissingnessPattern, PatternEntry> entries;
  /// Whole-cohort intercept-only model used for sparse or unseen patterns.
  Cpm fallback;
  PsmThresholds thresholds;

  const Cpm& model_for(const MissingnessPattern& pattern) const;
  /// Sub-model for the all-observed pattern (fallback if absent).
  const Cpm& full_model() const;
};

struct DevelopmentOptions {
  int m = kDefaultImputations;
  int cycles = kDefaultCycles;
  PsmThresholds psm;
};

struct ModelBundle {
  DevelopmentMethod method = DevelopmentMethod::fully_observed;
  std::variant<Cpm, PatternSubmodelFamily> model;
  /// Development-time package for mean_mode, regression and the MI methods.
  std::optional<ImputationPackage> package;
  /// Development-data means/modes, kept for every method so that mean/mode
  /// handling at validation can always use the transported summary values.
  ImputationPackage summaries;
  std::vector<ColumnSpec> schema;  // predictors then outcome
  std::map<std::string, std::string> metadata;

  bool is_family() const { return std::holds_alternative<PatternSubmodelFamily>(model); }
  /// The model scoring completed data: the Cpm, or the family's all-observed sub-model.
  const Cpm& primary_model() const;
};

struct PooledEstimate {
  VectorXd coefficients;
  MatrixXd covariance;
};

/// Rubin's rules: mean of estimates, W + (1 + 1/m) B.
PooledEstimate rubin_pool(const std::vector<VectorXd>& estimates, const std::vector<MatrixXd>& covariances);

/// Fits the logistic model on the predictor columns of a complete dataset.
Cpm fit_cpm(const Dataset& ds);

PatternSubmodelFamily fit_pattern_family(const Dataset& ds, const PsmThresholds& thresholds = {});

ModelBundle develop_cpm(const Dataset& ds, DevelopmentMethod method, Stream& rng,
                        const DevelopmentOptions& options = {});

// ---------------------------------------------------------------------------
// Validation handling

enum class HandlingMethod { fully_observed, cca, mean_mode, regression, mi_no_y, mi_with_y, psm };
enum class HandlingMode { none, transported, refit };

std::string to_string(HandlingMethod method);
std::string to_string(HandlingMode mode);
HandlingMethod parse_handling_method(std::string_view text);
HandlingMode parse_handling_mode(std::string_view text);

struct ValidationHandling {
  HandlingMethod method = HandlingMethod::fully_observed;
  HandlingMode mode = HandlingMode::none;

  /// "method" or "method:mode".
  std::string label() const;
  static ValidationHandling parse(std::string_view text);

  auto operator<=>(const ValidationHandling&) const = default;
};

/// Whether the validation handling may be paired with the development method.
bool admissible(DevelopmentMethod dev, const ValidationHandling& handling);
/// Admitted handlings for a development method in canonical order.
std::vector<ValidationHandling> admitted_handlings(DevelopmentMethod dev, bool include_fully_observed);

struct HandlingOptions {
  int m = kDefaultImputations;
  int cycles = kDefaultCycles;
};

/// Completes `ds` for a handling that does not depend on the bundle (refit
/// imputation, CCA, the fully observed copy). Shareable across bundles.
CompletedData complete_independent(const Dataset& ds, const ValidationHandling& handling, Stream& rng,
                                   const HandlingOptions& options = {});

/// Completes `ds` as the handling demands, using the bundle's transported
/// packages where the mode is `transported`.
CompletedData complete_for_handling(const ModelBundle& bundle, const Dataset& ds, const ValidationHandling& handling,
                                    Stream& rng, const HandlingOptions& options = {});

struct Prediction {
  MatrixXd probabilities;  // rows x k
  IndexList rows;          // positions of scored rows in the input
};

/// Scores completed data with the bundle's primary model.
Prediction score_completed(const ModelBundle& bundle, const CompletedData& completed);

/// Scores each row with the sub-model of its own missingness pattern.
Prediction predict_pattern_routed(const PatternSubmodelFamily& family, const Dataset& ds);

Prediction predict_bundle(const ModelBundle& bundle, const Dataset& ds, const ValidationHandling& handling,
                          Stream& rng, const HandlingOptions& options = {});

inline constexpr int kBundleFormatVersion = 1;

std::string encode_bundle(const ModelBundle& bundle);
ModelBundle decode_bundle(std::string_view bytes);
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace mdcompat
