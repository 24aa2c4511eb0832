#include "mdcompat/compat.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "mdcompat/error.hpp"
#include "mdcompat/rng.hpp"

namespace mdcompat {

std::string to_string(EstimandId id) {
  switch (id) {
    case EstimandId::e_all: return "E_all";
    case EstimandId::e_mean: return "E_mean";
    case EstimandId::e_ri: return "E_RI";
    case EstimandId::e_mi: return "E_MI";
    case EstimandId::e_psm: return "E_PSM";
  }
  return "E_all";
}

EstimandId parse_estimand(std::string_view text) {
  for (auto e : kAllEstimands) {
    if (to_string(e) == text) return e;
  }
  throw ArgumentError("unknown estimand '" + std::string(text) + "' (expected E_all, E_mean, E_RI, E_MI or E_PSM)");
}

std::optional<ValidationHandling> estimand_handling(EstimandId id, DevelopmentMethod dev) {
  using HM = HandlingMethod;
  using Md = HandlingMode;
  switch (id) {
    case EstimandId::e_all: return ValidationHandling{HM::fully_observed, Md::none};
    case EstimandId::e_mean: return ValidationHandling{HM::mean_mode, Md::transported};
    case EstimandId::e_ri:
      return ValidationHandling{HM::regression,
                                dev == DevelopmentMethod::regression ? Md::transported : Md::refit};
    case EstimandId::e_mi: return ValidationHandling{HM::mi_no_y, Md::refit};
    case EstimandId::e_psm:
      if (dev != DevelopmentMethod::psm) return std::nullopt;
      return ValidationHandling{HM::psm, Md::transported};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Grid

std::size_t GridSpec::size() const {
  return x1_type.size() * missing_prop.size() * beta1_dev.size() * beta2_dev.size() * beta3_dev.size() *
         beta1_val.size() * beta2_val.size() * beta3_val.size() * rho.size() * gamma1.size() * gamma3.size() *
         n_dev.size() * n_val.size() * iterations.size();
}

std::string scenario_hash(const ScenarioConfig& c) {
  // FNV-1a over a canonical text rendering of the parameter tuple.
  std::string key = to_string(c.x1_kind);
  for (double v : {c.target_missing, c.beta_dev.x1, c.beta_dev.x2, c.beta_dev.u, c.beta_val.x1, c.beta_val.x2,
                   c.beta_val.u, c.rho, c.gamma1, c.gamma2, c.gamma3, c.target_prevalence}) {
    key += '|';
    key += format_double(v);
  }
  for (Index v : {c.n_dev, c.n_val, c.iterations}) {
    key += '|';
    key += std::to_string(v);
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<ScenarioConfig> enumerate_scenarios(const GridSpec& g) {
  std::vector<ScenarioConfig> out;
  out.reserve(g.size());
  for (auto x1 : g.x1_type)
    for (double miss : g.missing_prop)
      for (double b1d : g.beta1_dev)
        for (double b2d : g.beta2_dev)
          for (double b3d : g.beta3_dev)
            for (double b1v : g.beta1_val)
              for (double b2v : g.beta2_val)
                for (double b3v : g.beta3_val)
                  for (double rho : g.rho)
                    for (double g1 : g.gamma1)
                      for (double g3 : g.gamma3)
                        for (Index nd : g.n_dev)
                          for (Index nv : g.n_val)
                            for (Index it : g.iterations) {
                              ScenarioConfig c;
                              c.x1_kind = x1;
                              c.target_missing = miss;
                              c.beta_dev = {b1d, b2d, b3d};
                              c.beta_val = {b1v, b2v, b3v};
                              c.rho = rho;
                              c.gamma1 = g1;
                              c.gamma3 = g3;
                              c.n_dev = nd;
                              c.n_val = nv;
                              c.iterations = it;
                              c.validate();
                              c.scenario_id = scenario_hash(c);
                              out.push_back(std::move(c));
                            }
  return out;
}

std::vector<ScenarioConfig> enumerate_scenarios(const std::vector<GridSpec>& grids) {
  std::vector<ScenarioConfig> out;
  std::set<std::string> seen;
  for (const auto& g : grids) {
    for (auto& c : enumerate_scenarios(g)) {
      if (seen.insert(c.scenario_id).second) out.push_back(std::move(c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string failure(std::string_view stage, const std::exception& e) {
  return "failed: " + std::string(stage) + ": " + e.what();
}

struct Completion {
  std::optional<CompletedData> data;
  std::string error;
};

VectorXd select(const VectorXd& y, const IndexList& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
  return out;
}

}  // namespace

std::vector<CellResult> develop_and_validate(const Dataset& dev_data, const Dataset* dev_full, const Dataset& val_data,
                                             const Dataset* val_full, const Stream& rng, const RunOptions& options,
                                             const std::string& scenario_id, Index iteration,
                                             std::shared_ptr<const ScenarioConfig> scenario) {
  const Stream dev_rng = rng.split("develop");
  const Stream val_rng = rng.split("validate");

  struct Developed {
    DevelopmentMethod method;
    std::optional<ModelBundle> bundle;
    std::string error;
  };
  std::vector<Developed> developed;
  for (auto method : options.methods) {
    const bool fully = method == DevelopmentMethod::fully_observed;
    if (fully && !dev_full) continue;
    Developed d{method, std::nullopt, {}};
    try {
      Stream r = dev_rng.split(to_string(method));
      d.bundle = develop_cpm(fully ? *dev_full : dev_data, method, r, options.development);
    } catch (const Error& e) {
      d.error = failure("development", e);
    }
    developed.push_back(std::move(d));
  }

  const VectorXd y = val_data.outcome();
  std::map<ValidationHandling, Completion> shared;
  auto shared_completion = [&](const ValidationHandling& h) -> const Completion& {
    auto it = shared.find(h);
    if (it != shared.end()) return it->second;
    Completion c;
    try {
      Stream r = val_rng.split(h.label());
      const Dataset& src = h.method == HandlingMethod::fully_observed ? *val_full : val_data;
      c.data = complete_independent(src, h, r, options.handling);
    } catch (const Error& e) {
      c.error = failure("validation", e);
    }
    return shared.emplace(h, std::move(c)).first->second;
  };

  std::vector<CellResult> out;
  for (const auto& d : developed) {
    for (const auto& h : admitted_handlings(d.method, val_full != nullptr)) {
      CellResult cell;
      cell.scenario_id = scenario_id;
      cell.iteration = iteration;
      cell.dev = d.method;
      cell.handling = h;
      cell.scenario = scenario;
      if (!d.bundle) {
        cell.status = d.error;
        out.push_back(std::move(cell));
        continue;
      }
      try {
        Prediction pred;
        if (h.method == HandlingMethod::psm) {
          pred = predict_pattern_routed(std::get<PatternSubmodelFamily>(d.bundle->model), val_data);
        } else if (h.mode == HandlingMode::transported) {
          Stream r = val_rng.split(to_string(d.method)).split(h.label());
          pred = score_completed(*d.bundle, complete_for_handling(*d.bundle, val_data, h, r, options.handling));
        } else {
          const Completion& c = shared_completion(h);
          if (!c.data) throw HandlingError(c.error);
          pred = score_completed(*d.bundle, *c.data);
        }
        cell.report = evaluate(pred.probabilities, select(y, pred.rows), options.pooling);
      } catch (const HandlingError& e) {
        cell.status = std::string(e.what()).rfind("failed: ", 0) == 0 ? e.what() : failure("validation", e);
      } catch (const Error& e) {
        cell.status = failure("validation", e);
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<CellResult> run_iteration(const ScenarioConfig& cfg, Index iteration, const RunOptions& options) {
  cfg.validate();
  auto scenario = std::make_shared<const ScenarioConfig>(cfg);
  const std::string id = cfg.scenario_id.empty() ? scenario_hash(cfg) : cfg.scenario_id;
  const Stream rng(SeedSpec{options.root_seed, {id, "iter" + std::to_string(iteration)}});
  CohortPair pair;
  try {
    Stream data_rng = rng.split("data");
    pair = generate_cohort_pair(cfg, data_rng);
  } catch (const Error& e) {
    std::vector<CellResult> out;
    for (auto method : options.methods) {
      for (const auto& h : admitted_handlings(method, true)) {
        CellResult cell;
        cell.scenario_id = id;
        cell.iteration = iteration;
        cell.dev = method;
        cell.handling = h;
        cell.status = failure("data generation", e);
        cell.scenario = scenario;
        out.push_back(std::move(cell));
      }
    }
    return out;
  }
  return develop_and_validate(pair.development.masked_data, &pair.development.full_data, pair.validation.masked_data,
                              &pair.validation.full_data, rng, options, id, iteration, scenario);
}

void run_grid(const std::vector<ScenarioConfig>& scenarios, const RunOptions& options, const ScenarioSink& sink) {
  struct Task {
    std::size_t scenario;
    Index iteration;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (Index i = 0; i < scenarios[s].iterations; ++i) tasks.push_back({s, i});
  }
  std::vector<std::vector<std::vector<CellResult>>> pending(scenarios.size());
  std::vector<Index> remaining(scenarios.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    pending[s].resize(static_cast<std::size_t>(scenarios[s].iterations));
    remaining[s] = scenarios[s].iterations;
  }

  std::mutex mu;
  std::size_t next_flush = 0;
  std::atomic<std::size_t> next_task{0};
  std::exception_ptr first_error;

  // Completed scenarios are handed to the sink strictly in scenario order.
  auto flush_ready = [&]() {
    while (next_flush < scenarios.size() && remaining[next_flush] == 0) {
      std::vector<CellResult> cells;
      for (auto& it : pending[next_flush]) {
        std::move(it.begin(), it.end(), std::back_inserter(cells));
        it.clear();
        it.shrink_to_fit();
      }
      sink(scenarios[next_flush], std::move(cells));
      ++next_flush;
    }
  };

  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next_task.fetch_add(1);
      if (t >= tasks.size()) return;
      {
        std::lock_guard lock(mu);
        if (first_error) return;
      }
      try {
        auto cells = run_iteration(scenarios[tasks[t].scenario], tasks[t].iteration, options);
        std::lock_guard lock(mu);
        pending[tasks[t].scenario][static_cast<std::size_t>(tasks[t].iteration)] = std::move(cells);
        --remaining[tasks[t].scenario];
        flush_ready();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  std::lock_guard lock(mu);
  flush_ready();
}

std::vector<CellResult> run_grid(const std::vector<ScenarioConfig>& scenarios, const RunOptions& options) {
  std::vector<CellResult> out;
  run_grid(scenarios, options, [&](const ScenarioConfig&, std::vector<CellResult>&& cells) {
    std::move(cells.begin(), cells.end(), std::back_inserter(out));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Bias

std::vector<std::string> BiasTable::scenario_ids() const {
  std::vector<std::string> ids;
  for (const auto& [key, cell] : cells) {
    if (ids.empty() || ids.back() != key.scenario_id) ids.push_back(key.scenario_id);
  }
  return ids;
}

const BiasCell* BiasTable::find(const std::string& scenario_id, DevelopmentMethod dev,
                                const ValidationHandling& handling, Metric metric) const {
  auto it = cells.find(BiasKey{scenario_id, dev, handling, metric});
  return it == cells.end() ? nullptr : &it->second;
}

namespace {

struct Accumulator {
  std::vector<double> values;
  Index failed = 0;
};

BiasCell summarize(const Accumulator& acc) {
  BiasCell cell;
  cell.n_ok = static_cast<Index>(acc.values.size());
  cell.n_failed = acc.failed;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (acc.values.empty()) {
    cell.mean_bias = nan;
    cell.mc_se = nan;
    return cell;
  }
  double sum = 0.0;
  for (double v : acc.values) sum += v;
  const double n = static_cast<double>(acc.values.size());
  cell.mean_bias = sum / n;
  if (acc.values.size() < 2) {
    cell.mc_se = nan;
    return cell;
  }
  double ss = 0.0;
  for (double v : acc.values) ss += (v - cell.mean_bias) * (v - cell.mean_bias);
  cell.mc_se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return cell;
}

BiasTable finish(std::string label, const std::map<BiasKey, Accumulator>& acc) {
  BiasTable table;
  table.label = std::move(label);
  for (const auto& [key, a] : acc) table.cells.emplace(key, summarize(a));
  return table;
}

}  // namespace

BiasTable compute_bias(const std::vector<CellResult>& cells, EstimandId estimand) {
  using GroupKey = std::tuple<std::string, Index, DevelopmentMethod>;
  std::map<GroupKey, std::map<ValidationHandling, const CellResult*>> groups;
  for (const auto& c : cells) groups[{c.scenario_id, c.iteration, c.dev}][c.handling] = &c;

  std::map<BiasKey, Accumulator> acc;
  for (const auto& [gkey, by_handling] : groups) {
    const auto& [scenario_id, iteration, dev] = gkey;
    const auto matched = estimand_handling(estimand, dev);
    if (!matched) continue;
    auto mit = by_handling.find(*matched);
    if (mit == by_handling.end()) {
      throw BiasError("no estimand-matched cell for " + to_string(estimand) + ": scenario " + scenario_id +
                      ", iteration " + std::to_string(iteration) + ", development " + to_string(dev) +
                      ", handling " + matched->label());
    }
    const CellResult& ref = *mit->second;
    for (const auto& [h, cell] : by_handling) {
      for (auto metric : kAllMetrics) {
        Accumulator& a = acc[BiasKey{scenario_id, dev, h, metric}];
        if (ref.ok() && cell->ok()) {
          a.values.push_back(ref.report->get(metric) - cell->report->get(metric));
        } else {
          ++a.failed;
        }
      }
    }
  }
  return finish(to_string(estimand), acc);
}

BiasTable compute_degradation(const std::vector<CellResult>& cells, DevelopmentMethod reference) {
  using GroupKey = std::tuple<std::string, Index, ValidationHandling>;
  std::map<GroupKey, std::map<DevelopmentMethod, const CellResult*>> groups;
  for (const auto& c : cells) groups[{c.scenario_id, c.iteration, c.handling}][c.dev] = &c;

  std::map<BiasKey, Accumulator> acc;
  for (const auto& [gkey, by_dev] : groups) {
    const auto& [scenario_id, iteration, handling] = gkey;
    auto rit = by_dev.find(reference);
    const CellResult* ref = rit == by_dev.end() ? nullptr : rit->second;
    for (const auto& [dev, cell] : by_dev) {
      for (auto metric : kAllMetrics) {
        Accumulator& a = acc[BiasKey{scenario_id, dev, handling, metric}];
        if (ref && ref->ok() && cell->ok()) {
          a.values.push_back(ref->report->get(metric) - cell->report->get(metric));
        } else {
          ++a.failed;
        }
      }
    }
  }
  return finish("degradation_vs_" + to_string(reference), acc);
}

void merge_into(BiasTable& into, const BiasTable& from) {
  if (into.label.empty()) into.label = from.label;
  if (into.label != from.label) throw ArgumentError("cannot merge bias tables '" + into.label + "' and '" + from.label + "'");
  for (const auto& [k, v] : from.cells) into.cells.insert_or_assign(k, v);
}

}  // namespace mdcompat
