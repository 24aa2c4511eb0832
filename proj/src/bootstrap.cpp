#include "mdcompat/bootstrap.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mdcompat/error.hpp"
#include "mdcompat/rng.hpp"

namespace mdcompat {

void BootstrapPlan::validate() const {
  if (b < 1) throw ArgumentError("bootstrap count b must be at least 1");
  if (predictors.empty()) throw ArgumentError("bootstrap plan lists no predictors");
  if (outcome.empty()) throw ArgumentError("bootstrap plan names no outcome");
  if (dev_methods.empty()) throw ArgumentError("bootstrap plan lists no development methods");
  for (auto e : estimands) {
    if (e == EstimandId::e_all) {
      throw ArgumentError("E_all needs fully observed data and is not available in the bootstrap harness");
    }
  }
  if (m < 1 || cycles < 1) throw ArgumentError("m and cycles must be positive");
}

std::vector<ColumnSpec> BootstrapPlan::columns() const {
  std::vector<ColumnSpec> out = predictors;
  for (auto& c : out) c.role = ColumnRole::predictor;
  out.push_back(ColumnSpec{outcome, ColumnKind::binary, ColumnRole::outcome});
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T number(const std::string& text, const std::string& where) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(where + ": '" + text + "' is not a valid number");
  }
  return v;
}

}  // namespace

BootstrapPlan parse_plan(std::string_view text, const std::string& source) {
  BootstrapPlan plan;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t ln = 0;
  bool in_predictors = false;
  while (std::getline(in, line)) {
    ++ln;
    const std::string where = source + ":" + std::to_string(ln);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[predictors]") throw ConfigError(where + ": unknown section " + line + " (expected [predictors])");
      in_predictors = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (in_predictors) {
        plan.predictors.push_back(ColumnSpec{key, parse_column_kind(value), ColumnRole::predictor});
      } else if (key == "b") {
        plan.b = number<Index>(value, where);
      } else if (key == "outcome") {
        plan.outcome = value;
      } else if (key == "dev_methods") {
        plan.dev_methods.clear();
        for (const auto& s : split_list(value)) plan.dev_methods.push_back(parse_development_method(s));
      } else if (key == "estimands") {
        plan.estimands.clear();
        for (const auto& s : split_list(value)) plan.estimands.push_back(parse_estimand(s));
      } else if (key == "seed") {
        plan.root_seed = number<std::uint64_t>(value, where);
      } else if (key == "m") {
        plan.m = number<int>(value, where);
      } else if (key == "cycles") {
        plan.cycles = number<int>(value, where);
      } else if (key == "resample") {
        if (value != "true" && value != "false") throw ConfigError(where + ": resample must be true or false");
        plan.resample = value == "true";
      } else {
        throw ConfigError(where + ": unknown key '" + key +
                          "' (valid keys: b, outcome, dev_methods, estimands, seed, m, cycles, resample)");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return plan;
}

BootstrapPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open plan file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str(), path.string());
}

std::string format_plan(const BootstrapPlan& plan) {
  std::string out = "b = " + std::to_string(plan.b) + "\noutcome = " + plan.outcome + "\ndev_methods = ";
  for (std::size_t i = 0; i < plan.dev_methods.size(); ++i) out += (i ? ", " : "") + to_string(plan.dev_methods[i]);
  out += "\nestimands = ";
  for (std::size_t i = 0; i < plan.estimands.size(); ++i) out += (i ? ", " : "") + to_string(plan.estimands[i]);
  out += "\nseed = " + std::to_string(plan.root_seed) + "\nm = " + std::to_string(plan.m) +
         "\ncycles = " + std::to_string(plan.cycles) + "\nresample = " + (plan.resample ? "true" : "false") +
         "\n[predictors]\n";
  for (const auto& p : plan.predictors) out += p.name + " = " + to_string(p.kind) + "\n";
  return out;
}

BootstrapResult bootstrap_run(const Dataset& ds, const BootstrapPlan& plan, int workers,
                              const std::function<void(Index)>& on_replicate) {
  plan.validate();
  if (!ds.has_outcome()) throw ContractError("bootstrap data has no outcome column");
  (void)ds.outcome();  // throws if any outcome is missing
  for (Index c : ds.predictor_columns()) {
    if (ds.missing_count(c) == ds.rows()) {
      throw ValidationError("predictor '" + ds.column(c).name + "' has no observed values");
    }
  }

  RunOptions options;
  options.root_seed = plan.root_seed;
  options.methods = plan.dev_methods;
  options.development.m = plan.m;
  options.development.cycles = plan.cycles;
  options.handling.m = plan.m;
  options.handling.cycles = plan.cycles;

  std::vector<std::vector<CellResult>> per_rep(static_cast<std::size_t>(plan.b));
  std::vector<char> failed(static_cast<std::size_t>(plan.b), 0);
  std::atomic<Index> next{0};
  std::mutex mu;
  std::exception_ptr error;

  auto run_one = [&](Index r) {
    const Stream rng(SeedSpec{plan.root_seed, {"bootstrap", "rep" + std::to_string(r)}});
    Dataset rep = ds;
    if (plan.resample) {
      Stream pick = rng.split("resample");
      IndexList rows(static_cast<std::size_t>(ds.rows()));
      for (auto& row : rows) row = pick.uniform_index(ds.rows());
      rep = ds.select_rows(rows);
    }
    const VectorXd y = rep.outcome();
    const double events = y.sum();
    if (events == 0.0 || events == static_cast<double>(y.size())) {
      std::vector<CellResult> cells;
      for (auto method : plan.dev_methods) {
        for (const auto& h : admitted_handlings(method, false)) {
          CellResult c;
          c.scenario_id = "bootstrap";
          c.iteration = r;
          c.dev = method;
          c.handling = h;
          c.status = "failed: degenerate replicate: single-class outcome";
          cells.push_back(std::move(c));
        }
      }
      failed[static_cast<std::size_t>(r)] = 1;
      return cells;
    }
    const Dataset* dev_full = rep.predictors_complete() ? &rep : nullptr;
    return develop_and_validate(rep, dev_full, ds, nullptr, rng, options, "bootstrap", r);
  };

  auto worker = [&]() {
    for (;;) {
      const Index r = next.fetch_add(1);
      if (r >= plan.b) return;
      try {
        auto cells = run_one(r);
        std::lock_guard lock(mu);
        per_rep[static_cast<std::size_t>(r)] = std::move(cells);
        if (on_replicate) on_replicate(r);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  BootstrapResult result;
  for (std::size_t r = 0; r < per_rep.size(); ++r) {
    std::move(per_rep[r].begin(), per_rep[r].end(), std::back_inserter(result.cells));
    result.failed_replicates += failed[r];
  }
  for (auto e : plan.estimands) result.bias.push_back(compute_bias(result.cells, e));
  return result;
}

void summarize(const BootstrapResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_results_csv(result.cells, out_dir / "results.csv");
  for (const auto& table : result.bias) {
    write_bias_csv(table, out_dir / ("bias_" + table.label + ".csv"));
    if (!table.cells.empty()) render_panel(table, out_dir / "heatmaps" / ("bias_" + table.label + ".svg"));
  }
}

}  // namespace mdcompat
