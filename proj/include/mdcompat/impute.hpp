#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mdcompat/glm.hpp"
#include "mdcompat/tabular.hpp"

namespace mdcompat {

class Stream;

enum class ImputationStrategy { cca, mean_mode, regression, multiple };

std::string to_string(ImputationStrategy s);
ImputationStrategy parse_imputation_strategy(std::string_view text);

struct ImputationOptions {
  bool include_outcome = false;
  int m = 5;
  /// Chained-equation cycles when more than one variable is incomplete.
  int cycles = 10;
  /// When false, multiple imputation uses point estimates without noise.
  bool posterior_draws = true;

  bool operator==(const ImputationOptions&) const = default;
};

inline constexpr int kDefaultImputations = 5;
inline constexpr int kDefaultCycles = 10;
inline constexpr int kPackageFormatVersion = 1;

/// Imputation model for one predictor, regressed on `regressors` (column names).
struct VariableModel {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<std::string> regressors;
  std::variant<LinearFit, LogisticFit> fit;
};

struct PackageProvenance {
  std::string stage;
  std::uint64_t root_seed = 0;
  std::string seed_path;
};

/// Fitted, transportable missing-data handler.
struct ImputationPackage {
  ImputationStrategy strategy = ImputationStrategy::cca;
  ImputationOptions options;
  std::vector<std::string> predictors;
  std::string outcome;  // set when options.include_outcome
  /// Observed means/modes, one per predictor. Used as fill values by
  /// mean_mode and as starting values by the iterative strategies.
  std::vector<ColumnSummary> summaries;
  std::vector<VariableModel> models;
  PackageProvenance provenance;

  const VariableModel* model_for(std::string_view name) const;
  bool requires_outcome() const {
    return strategy == ImputationStrategy::multiple && options.include_outcome;
  }
};

struct CompletedData {
  std::vector<Dataset> datasets;
  /// Positions in the input of the retained rows (all rows except under CCA).
  IndexList row_filter;
  MaskMatrix source_mask;
};

/// Fits a package on `ds`. `rng` drives the chained-equation draws of the
/// multiple strategy and is otherwise unused.
ImputationPackage fit_package(ImputationStrategy strategy, const Dataset& ds, const ImputationOptions& options,
                              Stream& rng);

CompletedData apply_package(const ImputationPackage& pkg, const Dataset& ds, Stream& rng);

std::string encode_package(const ImputationPackage& pkg);
ImputationPackage decode_package(std::string_view bytes);

}  // namespace mdcompat
