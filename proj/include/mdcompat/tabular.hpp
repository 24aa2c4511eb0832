#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdcompat/types.hpp"

namespace mdcompat {

class Stream;

enum class ColumnKind { continuous, binary };
enum class ColumnRole { predictor, outcome, latent, auxiliary };

std::string to_string(ColumnKind kind);
std::string to_string(ColumnRole role);
ColumnKind parse_column_kind(std::string_view text);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  ColumnRole role = ColumnRole::predictor;

  bool operator==(const ColumnSpec&) const = default;
};

/// Observed/missing flags over the predictor columns of a row, in column order.
struct MissingnessPattern {
  std::vector<std::uint8_t> bits;

  bool all_observed() const;
  Index observed_count() const;
  /// "1" for observed, "0" for missing, e.g. "10".
  std::string to_string() const;
  static MissingnessPattern from_string(std::string_view text);

  auto operator<=>(const MissingnessPattern&) const = default;
};

/// Column-typed table with an explicit observed-indicator mask.
///
/// The value stored under a masked cell is unspecified and must not be read;
/// simulated cohorts keep the pre-missingness value there so that full and
/// masked copies share storage layout. Rows carry provenance indices back to
/// the source table so that filtered and resampled data stay traceable.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<ColumnSpec> columns, MatrixXd values, MaskMatrix mask,
          IndexList provenance = {});

  static Dataset fully_observed(std::vector<ColumnSpec> columns, MatrixXd values);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const ColumnSpec& column(Index c) const { return columns_.at(static_cast<std::size_t>(c)); }
  const MatrixXd& values() const { return values_; }
  const MaskMatrix& mask() const { return mask_; }
  const IndexList& provenance() const { return provenance_; }

  bool observed(Index row, Index col) const { return mask_(row, col) != 0; }
  double value(Index row, Index col) const { return values_(row, col); }

  std::optional<Index> find_column(std::string_view name) const;
  Index column_index(std::string_view name) const;

  IndexList predictor_columns() const;
  std::vector<std::string> predictor_names() const;
  bool has_outcome() const;
  /// Throws unless exactly one outcome column exists.
  Index outcome_column() const;
  /// Outcome vector; throws ValidationError if any outcome cell is masked.
  VectorXd outcome() const;

  bool predictors_complete() const;
  Index missing_count(Index col) const;

  /// Predictor columns as a dense matrix; throws if any predictor cell is masked.
  MatrixXd predictor_matrix() const;

  Dataset select_rows(std::span<const Index> rows) const;
  Dataset with_mask(MaskMatrix mask) const;
  Dataset with_values(MatrixXd values, MaskMatrix mask) const;

 private:
  std::vector<ColumnSpec> columns_;
  MatrixXd values_;
  MaskMatrix mask_;
  IndexList provenance_;
};

/// Loads a CSV whose header contains every spec name; extra file columns are
/// ignored and the result follows spec order. An empty field marks a missing cell.
Dataset load_csv(const std::filesystem::path& path, const std::vector<ColumnSpec>& specs);
Dataset parse_csv(std::string_view text, const std::vector<ColumnSpec>& specs);

/// Header names of a CSV file.
std::vector<std::string> read_csv_header(const std::filesystem::path& path);

void save_csv(const Dataset& ds, const std::filesystem::path& path);
std::string format_csv(const Dataset& ds);

MissingnessPattern pattern_of(const Dataset& ds, Index row);

Dataset complete_case_filter(const Dataset& ds);

struct ColumnSummary {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  /// Mean (continuous) or mode (binary) of the observed cells.
  double value = 0.0;
  Index observed_count = 0;
};

/// Summaries of every predictor column over observed cells.
std::vector<ColumnSummary> column_summaries(const Dataset& ds);
ColumnSummary summarize_column(const Dataset& ds, Index col);

std::pair<Dataset, Dataset> random_split(const Dataset& ds, Index n_first, Stream& rng);

std::string format_double(double v);

}  // namespace mdcompat
