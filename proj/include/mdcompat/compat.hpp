#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mdcompat/cpm.hpp"
#include "mdcompat/datagen.hpp"
#include "mdcompat/metrics.hpp"

namespace mdcompat {

enum class EstimandId { e_all, e_mean, e_ri, e_mi, e_psm };

inline constexpr std::array<EstimandId, 5> kAllEstimands = {EstimandId::e_all, EstimandId::e_mean, EstimandId::e_ri,
                                                            EstimandId::e_mi, EstimandId::e_psm};

/// "E_all", "E_mean", "E_RI", "E_MI", "E_PSM".
std::string to_string(EstimandId id);
EstimandId parse_estimand(std::string_view text);

/// The validation handling that defines the estimand for bundles developed
/// with `dev`; empty when the estimand does not apply (E_PSM off psm bundles).
std::optional<ValidationHandling> estimand_handling(EstimandId id, DevelopmentMethod dev);

/// Value lists per grid parameter; the grid is their Cartesian product.
struct GridSpec {
  std::vector<X1Kind> x1_type = {X1Kind::continuous};
  std::vector<double> missing_prop = {0.5};
  std::vector<double> beta1_dev = {0.0};
  std::vector<double> beta2_dev = {0.0};
  std::vector<double> beta3_dev = {0.0};
  std::vector<double> beta1_val = {0.0};
  std::vector<double> beta2_val = {0.0};
  std::vector<double> beta3_val = {0.0};
  std::vector<double> rho = {0.0};
  std::vector<double> gamma1 = {0.5};
  std::vector<double> gamma3 = {0.5};
  std::vector<Index> n_dev = {5000};
  std::vector<Index> n_val = {5000};
  std::vector<Index> iterations = {200};

  std::size_t size() const;
};

/// Stable 16-hex-digit hash of the scenario's parameter tuple.
std::string scenario_hash(const ScenarioConfig& cfg);

/// Cartesian product in a fixed nested order, each with scenario_id set.
std::vector<ScenarioConfig> enumerate_scenarios(const GridSpec& grid);
/// Concatenation of several sub-grids; duplicate scenarios are kept once.
std::vector<ScenarioConfig> enumerate_scenarios(const std::vector<GridSpec>& grids);

struct CellResult {
  std::string scenario_id;
  Index iteration = 0;
  DevelopmentMethod dev = DevelopmentMethod::fully_observed;
  ValidationHandling handling;
  std::optional<PerfReport> report;
  /// "ok" or "failed: <reason>".
  std::string status = "ok";
  std::shared_ptr<const ScenarioConfig> scenario;

  bool ok() const { return report.has_value(); }
};

struct RunOptions {
  std::uint64_t root_seed = 0;
  int workers = 1;
  std::vector<DevelopmentMethod> methods{std::begin(kAllDevelopmentMethods), std::end(kAllDevelopmentMethods)};
  DevelopmentOptions development;
  HandlingOptions handling;
  Pooling pooling = Pooling::average;
};

/// Develops every bundle on `dev_data` and validates each under its admitted
/// handlings on `val_data`. `dev_full` / `val_full` are the pre-missingness
/// copies; without them the fully observed method and handling are skipped.
/// Failures become failed rows.
std::vector<CellResult> develop_and_validate(const Dataset& dev_data, const Dataset* dev_full, const Dataset& val_data,
                                             const Dataset* val_full, const Stream& rng, const RunOptions& options,
                                             const std::string& scenario_id, Index iteration,
                                             std::shared_ptr<const ScenarioConfig> scenario = nullptr);

/// One simulation iteration: generates the cohorts under stream
/// (root_seed, scenario_id, "iter<i>") and runs develop_and_validate.
std::vector<CellResult> run_iteration(const ScenarioConfig& cfg, Index iteration, const RunOptions& options);

/// Receives each scenario's cells (all iterations, iteration order) in
/// scenario order, whatever order the workers finish in.
using ScenarioSink = std::function<void(const ScenarioConfig&, std::vector<CellResult>&&)>;

void run_grid(const std::vector<ScenarioConfig>& scenarios, const RunOptions& options, const ScenarioSink& sink);
std::vector<CellResult> run_grid(const std::vector<ScenarioConfig>& scenarios, const RunOptions& options);

struct BiasKey {
  std::string scenario_id;
  DevelopmentMethod dev = DevelopmentMethod::fully_observed;
  ValidationHandling handling;
  Metric metric = Metric::auc;

  auto operator<=>(const BiasKey&) const = default;
};

struct BiasCell {
  double mean_bias = 0.0;
  /// sd / sqrt(n_ok); NaN when n_ok < 2.
  double mc_se = 0.0;
  Index n_ok = 0;
  Index n_failed = 0;
};

struct BiasTable {
  /// Estimand name, or a comparison label for degradation tables.
  std::string label;
  std::map<BiasKey, BiasCell> cells;

  std::vector<std::string> scenario_ids() const;
  const BiasCell* find(const std::string& scenario_id, DevelopmentMethod dev, const ValidationHandling& handling,
                       Metric metric) const;
};

/// bias(handling) = perf(estimand-matched handling) - perf(handling), per
/// scenario, development method and metric, averaged over iterations.
BiasTable compute_bias(const std::vector<CellResult>& cells, EstimandId estimand);

/// perf(reference development method) - perf(development method) under the
/// same validation handling, paired by iteration.
BiasTable compute_degradation(const std::vector<CellResult>& cells, DevelopmentMethod reference);

/// Merges tables with the same label (e.g. computed per scenario).
void merge_into(BiasTable& into, const BiasTable& from);

// ---------------------------------------------------------------------------
// Result files

std::string results_csv_header();
/// One row per cell per metric.
std::string format_result_rows(const std::vector<CellResult>& cells);
std::string bias_csv_header();
std::string format_bias_rows(const BiasTable& table);

void write_results_csv(const std::vector<CellResult>& cells, const std::filesystem::path& path);
void write_bias_csv(const BiasTable& table, const std::filesystem::path& path);

/// Reads results.csv back into cells; scenario parameters are rebuilt from
/// the columns (sizes are not recorded there).
std::vector<CellResult> read_results_csv(const std::filesystem::path& path);
BiasTable read_bias_csv(const std::filesystem::path& path);

/// SVG grid of development methods x validation handlings, coloured by mean
/// bias on a diverging scale centred at 0, annotated "mean ± se".
std::string render_heatmap_svg(const BiasTable& table, Metric metric, const std::string& scenario_id = {});
void render_heatmap(const BiasTable& table, Metric metric, const std::filesystem::path& path,
                    const std::string& scenario_id = {});
/// All four metrics side by side.
std::string render_panel_svg(const BiasTable& table, const std::string& scenario_id = {});
void render_panel(const BiasTable& table, const std::filesystem::path& path, const std::string& scenario_id = {});

}  // namespace mdcompat
