#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mdcompat/compat.hpp"
#include "mdcompat/error.hpp"

namespace mdcompat {

namespace {

std::string num(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

// Keeps the CSVs free of quoting: failure reasons lose commas and newlines.
std::string clean_status(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_num(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.empty() || lines.front() + "\n" != header) {
    throw SchemaError(path.string() + ": unexpected header");
  }
  return lines;
}

}  // namespace

std::string results_csv_header() {
  return "scenario_id,iteration,x1_kind,rho,gamma1,gamma3,miss_prop,b1_dev,b2_dev,b3_dev,b1_val,b2_val,b3_val,"
         "dag_dev,dag_val,dev_method,val_method,val_mode,metric,value,status\n";
}

std::string format_result_rows(const std::vector<CellResult>& cells) {
  std::string out;
  for (const auto& c : cells) {
    std::string prefix = c.scenario_id + ',' + std::to_string(c.iteration) + ',';
    if (c.scenario) {
      const ScenarioConfig& s = *c.scenario;
      prefix += to_string(s.x1_kind);
      for (double v : {s.rho, s.gamma1, s.gamma3, s.target_missing, s.beta_dev.x1, s.beta_dev.x2, s.beta_dev.u,
                       s.beta_val.x1, s.beta_val.x2, s.beta_val.u}) {
        prefix += ',' + num(v);
      }
      prefix += ',';
      prefix += dag_label(s.beta_dev, s.target_missing);
      prefix += ',';
      prefix += dag_label(s.beta_val, s.target_missing);
    } else {
      prefix += "NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA";
    }
    prefix += ',' + to_string(c.dev) + ',' + to_string(c.handling.method) + ',' + to_string(c.handling.mode) + ',';
    const std::string status = clean_status(c.status);
    for (auto m : kAllMetrics) {
      out += prefix + to_string(m) + ',' + (c.report ? num(c.report->get(m)) : std::string("NA")) + ',' + status + '\n';
    }
  }
  return out;
}

std::string bias_csv_header() {
  return "scenario_id,estimand,dev_method,val_method,val_mode,metric,mean_bias,mc_se,n_ok,n_failed\n";
}

std::string format_bias_rows(const BiasTable& table) {
  std::string out;
  for (const auto& [k, v] : table.cells) {
    out += k.scenario_id + ',' + table.label + ',' + to_string(k.dev) + ',' + to_string(k.handling.method) + ',' +
           to_string(k.handling.mode) + ',' + to_string(k.metric) + ',' + num(v.mean_bias) + ',' + num(v.mc_se) + ',' +
           std::to_string(v.n_ok) + ',' + std::to_string(v.n_failed) + '\n';
  }
  return out;
}

void write_results_csv(const std::vector<CellResult>& cells, const std::filesystem::path& path) {
  write_file(path, results_csv_header() + format_result_rows(cells));
}

void write_bias_csv(const BiasTable& table, const std::filesystem::path& path) {
  write_file(path, bias_csv_header() + format_bias_rows(table));
}

std::vector<CellResult> read_results_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path, results_csv_header());
  std::vector<CellResult> out;
  std::map<std::string, std::shared_ptr<const ScenarioConfig>> scenarios;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto f = split(lines[ln]);
    if (f.size() != 21) throw ParseError(path.string() + ":" + std::to_string(ln + 1) + ": expected 21 fields");
    try {
      const Index iteration = std::stoll(f[1]);
      const auto dev = parse_development_method(f[15]);
      const ValidationHandling h{parse_handling_method(f[16]), parse_handling_mode(f[17])};
      const Metric metric = parse_metric(f[18]);
      const bool same = !out.empty() && out.back().scenario_id == f[0] && out.back().iteration == iteration &&
                        out.back().dev == dev && out.back().handling == h;
      if (!same) {
        CellResult c;
        c.scenario_id = f[0];
        c.iteration = iteration;
        c.dev = dev;
        c.handling = h;
        c.status = f[20];
        if (c.status == "ok") c.report = PerfReport{};
        if (f[2] != "NA") {
          auto& sc = scenarios[f[0]];
          if (!sc) {
            ScenarioConfig s;
            s.x1_kind = parse_x1_kind(f[2]);
            s.rho = parse_num(f[3], path, ln + 1);
            s.gamma1 = parse_num(f[4], path, ln + 1);
            s.gamma3 = parse_num(f[5], path, ln + 1);
            s.target_missing = parse_num(f[6], path, ln + 1);
            s.beta_dev = {parse_num(f[7], path, ln + 1), parse_num(f[8], path, ln + 1), parse_num(f[9], path, ln + 1)};
            s.beta_val = {parse_num(f[10], path, ln + 1), parse_num(f[11], path, ln + 1),
                          parse_num(f[12], path, ln + 1)};
            s.scenario_id = f[0];
            sc = std::make_shared<const ScenarioConfig>(s);
          }
          c.scenario = sc;
        }
        out.push_back(std::move(c));
      }
      if (out.back().report) {
        PerfReport& r = *out.back().report;
        const double v = parse_num(f[19], path, ln + 1);
        switch (metric) {
          case Metric::auc: r.auc = v; break;
          case Metric::brier: r.brier = v; break;
          case Metric::cal_intercept: r.cal_intercept = v; break;
          case Metric::cal_slope: r.cal_slope = v; break;
        }
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(ln + 1) + ": " + e.what());
    }
  }
  return out;
}

BiasTable read_bias_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path, bias_csv_header());
  BiasTable table;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto f = split(lines[ln]);
    if (f.size() != 10) throw ParseError(path.string() + ":" + std::to_string(ln + 1) + ": expected 10 fields");
    try {
      if (table.label.empty()) table.label = f[1];
      BiasKey key{f[0], parse_development_method(f[2]),
                  ValidationHandling{parse_handling_method(f[3]), parse_handling_mode(f[4])}, parse_metric(f[5])};
      BiasCell cell{parse_num(f[6], path, ln + 1), parse_num(f[7], path, ln + 1), std::stoll(f[8]), std::stoll(f[9])};
      table.cells.insert_or_assign(std::move(key), cell);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(ln + 1) + ": " + e.what());
    }
  }
  return table;
}

void render_heatmap(const BiasTable& table, Metric metric, const std::filesystem::path& path,
                    const std::string& scenario_id) {
  write_file(path, render_heatmap_svg(table, metric, scenario_id));
}

void render_panel(const BiasTable& table, const std::filesystem::path& path, const std::string& scenario_id) {
  write_file(path, render_panel_svg(table, scenario_id));
}

}  // namespace mdcompat
