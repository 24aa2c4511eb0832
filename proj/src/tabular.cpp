#include "mdcompat/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mdcompat/error.hpp"
#include "mdcompat/rng.hpp"

namespace mdcompat {

std::string to_string(ColumnKind kind) {
  return kind == ColumnKind::continuous ? "continuous" : "binary";
}

std::string to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::predictor: return "predictor";
    case ColumnRole::outcome: return "outcome";
    case ColumnRole::latent: return "latent";
    case ColumnRole::auxiliary: return "auxiliary";
  }
  return "predictor";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "continuous") return ColumnKind::continuous;
  if (text == "binary" || text == "categorical") return ColumnKind::binary;
  throw ParseError("unknown column kind '" + std::string(text) + "' (expected continuous or binary)");
}

bool MissingnessPattern::all_observed() const {
  return std::all_of(bits.begin(), bits.end(), [](auto b) { return b != 0; });
}

Index MissingnessPattern::observed_count() const {
  return static_cast<Index>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

std::string MissingnessPattern::to_string() const {
  std::string out;
  out.reserve(bits.size());
  for (auto b : bits) out += b ? '1' : '0';
  return out;
}

MissingnessPattern MissingnessPattern::from_string(std::string_view text) {
  MissingnessPattern out;
  for (char ch : text) {
    if (ch != '0' && ch != '1') throw ParseError("invalid missingness pattern '" + std::string(text) + "'");
    out.bits.push_back(ch == '1' ? 1 : 0);
  }
  return out;
}

Dataset::Dataset(std::vector<ColumnSpec> columns, MatrixXd values, MaskMatrix mask, IndexList provenance)
    : columns_(std::move(columns)), values_(std::move(values)), mask_(std::move(mask)),
      provenance_(std::move(provenance)) {
  if (values_.cols() != static_cast<Index>(columns_.size())) {
    throw ValidationError("value matrix has " + std::to_string(values_.cols()) + " columns but " +
                          std::to_string(columns_.size()) + " column specs were given");
  }
  if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols()) {
    throw ValidationError("mask and value matrices differ in shape");
  }
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (!seen.insert(c.name).second) throw ValidationError("duplicate column name '" + c.name + "'");
  }
  if (provenance_.empty()) {
    provenance_.resize(static_cast<std::size_t>(values_.rows()));
    std::iota(provenance_.begin(), provenance_.end(), Index{0});
  } else if (static_cast<Index>(provenance_.size()) != values_.rows()) {
    throw ValidationError("provenance length does not match row count");
  }
}

Dataset Dataset::fully_observed(std::vector<ColumnSpec> columns, MatrixXd values) {
  MaskMatrix mask = MaskMatrix::Ones(values.rows(), values.cols());
  return Dataset(std::move(columns), std::move(values), std::move(mask));
}

std::optional<Index> Dataset::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return static_cast<Index>(i);
  }
  return std::nullopt;
}

Index Dataset::column_index(std::string_view name) const {
  if (auto idx = find_column(name)) return *idx;
  throw SchemaError("no column named '" + std::string(name) + "'");
}

IndexList Dataset::predictor_columns() const {
  IndexList out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].role == ColumnRole::predictor) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<std::string> Dataset::predictor_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.role == ColumnRole::predictor) out.push_back(c.name);
  }
  return out;
}

bool Dataset::has_outcome() const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [](const ColumnSpec& c) { return c.role == ColumnRole::outcome; });
}

Index Dataset::outcome_column() const {
  std::optional<Index> found;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].role != ColumnRole::outcome) continue;
    if (found) throw SchemaError("dataset has more than one outcome column");
    found = static_cast<Index>(i);
  }
  if (!found) throw SchemaError("dataset has no outcome column");
  return *found;
}

VectorXd Dataset::outcome() const {
  const Index c = outcome_column();
  if (missing_count(c) > 0) {
    throw ValidationError("outcome column '" + columns_[static_cast<std::size_t>(c)].name +
                          "' has missing values");
  }
  return values_.col(c);
}

bool Dataset::predictors_complete() const {
  for (Index c : predictor_columns()) {
    if (missing_count(c) > 0) return false;
  }
  return true;
}

Index Dataset::missing_count(Index col) const {
  return rows() - mask_.col(col).cast<Index>().sum();
}

MatrixXd Dataset::predictor_matrix() const {
  const IndexList cols = predictor_columns();
  MatrixXd out(rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (missing_count(cols[j]) > 0) {
      throw ContractError("predictor '" + columns_[static_cast<std::size_t>(cols[j])].name +
                          "' has missing values");
    }
    out.col(static_cast<Index>(j)) = values_.col(cols[j]);
  }
  return out;
}

Dataset Dataset::select_rows(std::span<const Index> rows) const {
  MatrixXd v(static_cast<Index>(rows.size()), cols());
  MaskMatrix m(static_cast<Index>(rows.size()), cols());
  IndexList prov(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= this->rows()) throw IndexError("row index " + std::to_string(r) + " out of range");
    v.row(static_cast<Index>(i)) = values_.row(r);
    m.row(static_cast<Index>(i)) = mask_.row(r);
    prov[i] = provenance_[static_cast<std::size_t>(r)];
  }
  return Dataset(columns_, std::move(v), std::move(m), std::move(prov));
}

Dataset Dataset::with_mask(MaskMatrix mask) const {
  return Dataset(columns_, values_, std::move(mask), provenance_);
}

Dataset Dataset::with_values(MatrixXd values, MaskMatrix mask) const {
  return Dataset(columns_, std::move(values), std::move(mask), provenance_);
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = end + 1;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> read_csv_header(const std::filesystem::path& path) {
  const auto lines = lines_of(read_file(path));
  if (lines.empty()) throw ParseError("'" + path.string() + "' is empty; expected a header row");
  std::vector<std::string> out;
  for (auto& f : split_csv_line(lines.front())) out.emplace_back(trim(f));
  return out;
}

Dataset parse_csv(std::string_view text, const std::vector<ColumnSpec>& specs) {
  auto lines = lines_of(text);
  if (lines.empty()) throw ParseError("CSV input is empty; expected a header row");
  std::vector<std::string> header;
  for (auto& f : split_csv_line(lines.front())) header.emplace_back(trim(f));

  std::vector<std::size_t> source(specs.size());
  for (std::size_t j = 0; j < specs.size(); ++j) {
    auto it = std::find(header.begin(), header.end(), specs[j].name);
    if (it == header.end()) throw SchemaError("CSV header has no column named '" + specs[j].name + "'");
    source[j] = static_cast<std::size_t>(it - header.begin());
  }

  // Trailing blank lines are tolerated; blank lines in the middle are not.
  while (lines.size() > 1 && trim(lines.back()).empty()) lines.pop_back();
  const Index n = static_cast<Index>(lines.size()) - 1;
  const Index p = static_cast<Index>(specs.size());
  MatrixXd values = MatrixXd::Zero(n, p);
  MaskMatrix mask = MaskMatrix::Ones(n, p);

  for (Index i = 0; i < n; ++i) {
    const auto fields = split_csv_line(lines[static_cast<std::size_t>(i + 1)]);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(header.size()));
    }
    for (Index j = 0; j < p; ++j) {
      const auto& spec = specs[static_cast<std::size_t>(j)];
      std::string_view cell = trim(fields[source[static_cast<std::size_t>(j)]]);
      if (cell.empty()) {
        if (spec.role == ColumnRole::outcome) {
          throw ValidationError("missing outcome value in row " + std::to_string(i + 1) + ", column '" +
                                spec.name + "'");
        }
        mask(i, j) = 0;
        continue;
      }
      double v = 0.0;
      const char* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ParseError("cannot parse '" + std::string(cell) + "' as a number in row " + std::to_string(i + 1) +
                         ", column '" + spec.name + "'");
      }
      if (spec.kind == ColumnKind::binary && v != 0.0 && v != 1.0) {
        throw ValidationError("binary column '" + spec.name + "' holds " + std::string(cell) + " in row " +
                              std::to_string(i + 1) + " (expected 0 or 1)");
      }
      values(i, j) = v;
    }
  }
  return Dataset(specs, std::move(values), std::move(mask));
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<ColumnSpec>& specs) {
  try {
    return parse_csv(read_file(path), specs);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  // Shortest representation that reads back to the same double.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_csv(const Dataset& ds) {
  std::string out;
  for (Index j = 0; j < ds.cols(); ++j) {
    if (j) out += ',';
    out += ds.column(j).name;
  }
  out += '\n';
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index j = 0; j < ds.cols(); ++j) {
      if (j) out += ',';
      if (ds.observed(i, j)) out += format_double(ds.value(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << format_csv(ds);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

MissingnessPattern pattern_of(const Dataset& ds, Index row) {
  if (row < 0 || row >= ds.rows()) {
    throw IndexError("row " + std::to_string(row) + " out of range [0, " + std::to_string(ds.rows()) + ")");
  }
  MissingnessPattern out;
  for (Index c : ds.predictor_columns()) out.bits.push_back(ds.observed(row, c) ? 1 : 0);
  return out;
}

Dataset complete_case_filter(const Dataset& ds) {
  const IndexList cols = ds.predictor_columns();
  IndexList keep;
  keep.reserve(static_cast<std::size_t>(ds.rows()));
  for (Index i = 0; i < ds.rows(); ++i) {
    bool complete = true;
    for (Index c : cols) complete = complete && ds.observed(i, c);
    if (complete) keep.push_back(i);
  }
  return ds.select_rows(keep);
}

ColumnSummary summarize_column(const Dataset& ds, Index col) {
  const ColumnSpec& spec = ds.column(col);
  ColumnSummary s{spec.name, spec.kind, 0.0, 0};
  double sum = 0.0;
  Index ones = 0;
  for (Index i = 0; i < ds.rows(); ++i) {
    if (!ds.observed(i, col)) continue;
    ++s.observed_count;
    sum += ds.value(i, col);
    if (ds.value(i, col) == 1.0) ++ones;
  }
  if (s.observed_count == 0) throw SummaryError("column '" + spec.name + "' has no observed values");
  if (spec.kind == ColumnKind::binary) {
    s.value = (2 * ones > s.observed_count) ? 1.0 : 0.0;
  } else {
    s.value = sum / static_cast<double>(s.observed_count);
  }
  return s;
}

std::vector<ColumnSummary> column_summaries(const Dataset& ds) {
  std::vector<ColumnSummary> out;
  for (Index c : ds.predictor_columns()) out.push_back(summarize_column(ds, c));
  return out;
}

std::pair<Dataset, Dataset> random_split(const Dataset& ds, Index n_first, Stream& rng) {
  if (n_first < 0 || n_first > ds.rows()) {
    throw ArgumentError("cannot take " + std::to_string(n_first) + " rows from a dataset of " +
                        std::to_string(ds.rows()));
  }
  IndexList order(static_cast<std::size_t>(ds.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  // Fisher-Yates with our own index draws so the partition does not depend on
  // the standard library's shuffle implementation.
  for (Index i = ds.rows() - 1; i > 0; --i) {
    const Index j = rng.uniform_index(i + 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  IndexList first(order.begin(), order.begin() + n_first);
  IndexList second(order.begin() + n_first, order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {ds.select_rows(first), ds.select_rows(second)};
}

}  // namespace mdcompat
