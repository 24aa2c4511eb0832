#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mdcompat/compat.hpp"

namespace mdcompat {

struct BootstrapPlan {
  Index b = 100;
  std::vector<ColumnSpec> predictors;
  std::string outcome;
  std::vector<DevelopmentMethod> dev_methods = {DevelopmentMethod::cca,     DevelopmentMethod::mean_mode,
                                                DevelopmentMethod::regression, DevelopmentMethod::mi_no_y,
                                                DevelopmentMethod::mi_with_y, DevelopmentMethod::psm};
  std::vector<EstimandId> estimands = {EstimandId::e_mean, EstimandId::e_ri, EstimandId::e_mi, EstimandId::e_psm};
  std::uint64_t root_seed = 0;
  int m = kDefaultImputations;
  int cycles = kDefaultCycles;
  /// false reuses the original rows as every replicate (a test hook).
  bool resample = true;

  /// Checks b >= 1, a model specification, and no E_all.
  void validate() const;
  /// Predictors then the outcome, as CSV column specs.
  std::vector<ColumnSpec> columns() const;
};

/// `key = value` lines (b, outcome, dev_methods, estimands, seed, m, cycles,
/// resample) and a `[predictors]` section of `name = continuous|binary` lines.
BootstrapPlan parse_plan(std::string_view text, const std::string& source = "plan");
BootstrapPlan load_plan(const std::filesystem::path& path);
std::string format_plan(const BootstrapPlan& plan);

struct BootstrapResult {
  std::vector<CellResult> cells;
  std::vector<BiasTable> bias;
  Index failed_replicates = 0;
};

/// Develops every method on each replicate and validates on the original rows.
BootstrapResult bootstrap_run(const Dataset& ds, const BootstrapPlan& plan, int workers = 1,
                              const std::function<void(Index)>& on_replicate = {});

/// results.csv, bias_<E>.csv and heatmaps/bias_<E>.svg under out_dir.
void summarize(const BootstrapResult& result, const std::filesystem::path& out_dir);

}  // namespace mdcompat
