#include <doctest.h>

#include <cmath>
#include <regex>
#include <set>

#include "mdcompat/compat.hpp"
#include "mdcompat/config.hpp"
#include "mdcompat/error.hpp"
#include "support.hpp"
#include "svg_check.hpp"

using namespace mdcompat;
using mdtest::TempDir;

namespace {

ScenarioConfig small(double missing = 0.5) {
  ScenarioConfig cfg;
  cfg.n_dev = 1500;
  cfg.n_val = 1500;
  cfg.iterations = 2;
  cfg.target_missing = missing;
  cfg.scenario_id = scenario_hash(cfg);
  return cfg;
}

std::vector<CellResult> two_iterations(const ScenarioConfig& cfg, std::uint64_t seed) {
  RunOptions opt;
  opt.root_seed = seed;
  auto cells = run_iteration(cfg, 0, opt);
  auto more = run_iteration(cfg, 1, opt);
  cells.insert(cells.end(), more.begin(), more.end());
  return cells;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::vector<std::string> fills(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re("class=\"cell\"");
  const std::regex fill_re("fill=\"(#[0-9a-f]{6})\"[^>]*class=\"cell\"");
  for (std::sregex_iterator it(svg.begin(), svg.end(), fill_re), end; it != end; ++it) out.push_back((*it)[1]);
  return out;
}

}  // namespace

TEST_SUITE("compat") {

TEST_CASE("grid sizes") {
  const auto full_grid = enumerate_scenarios(preset_grids("paper"));
  CHECK(full_grid.size() == 3072);
  std::set<std::string> ids;
  for (const auto& s : full_grid) ids.insert(s.scenario_id);
  CHECK(ids.size() == 3072);

  auto continuous = preset_grids("paper");
  for (auto& g : continuous) g.x1_type = {X1Kind::continuous};
  CHECK(enumerate_scenarios(continuous).size() == 1536);

  CHECK(enumerate_scenarios(GridSpec{}).size() == 1);
  CHECK(enumerate_scenarios(preset_grids("desk")).size() == 6);
}

TEST_CASE("scenario ids are stable hashes of the parameters") {
  ScenarioConfig a, b;
  CHECK(scenario_hash(a) == scenario_hash(b));
  CHECK(scenario_hash(a).size() == 16);
  b.rho = 0.75;
  CHECK(scenario_hash(a) != scenario_hash(b));
  const auto s1 = enumerate_scenarios(preset_grids("desk"));
  const auto s2 = enumerate_scenarios(preset_grids("desk"));
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].scenario_id == s2[i].scenario_id);
}

TEST_CASE("estimand-matched handlings") {
  using DM = DevelopmentMethod;
  CHECK(estimand_handling(EstimandId::e_all, DM::cca)->label() == "fully_observed");
  CHECK(estimand_handling(EstimandId::e_mean, DM::psm)->label() == "mean_mode:transported");
  CHECK(estimand_handling(EstimandId::e_ri, DM::regression)->label() == "regression:transported");
  CHECK(estimand_handling(EstimandId::e_ri, DM::cca)->label() == "regression:refit");
  CHECK(estimand_handling(EstimandId::e_mi, DM::mi_no_y)->label() == "mi_no_y:refit");
  CHECK(estimand_handling(EstimandId::e_psm, DM::psm)->label() == "psm:transported");
  CHECK_FALSE(estimand_handling(EstimandId::e_psm, DM::cca).has_value());
  for (auto e : kAllEstimands) CHECK(parse_estimand(to_string(e)) == e);
}

TEST_CASE("an iteration runs the full method matrix") {
  const auto cfg = small();
  const auto cells = two_iterations(cfg, 7);
  // 7 bundles x 6 shared handlings, plus one transported handling each for
  // regression, mi_no_y, mi_with_y and psm; two iterations.
  CHECK(cells.size() == 2 * (7 * 6 + 4));
  bool found = false;
  for (const auto& c : cells) {
    CHECK(c.ok());
    if (c.dev == DevelopmentMethod::mi_with_y && c.handling.label() == "mi_with_y:refit") found = true;
  }
  CHECK(found);
  CHECK(count_lines(format_result_rows(cells)) == cells.size() * 4);
}

TEST_CASE("estimand-matched bias is exactly zero") {
  const auto cells = two_iterations(small(), 8);
  for (auto e : kAllEstimands) {
    const auto table = compute_bias(cells, e);
    Index checked = 0;
    for (auto dev : kAllDevelopmentMethods) {
      const auto h = estimand_handling(e, dev);
      if (!h) continue;
      for (auto m : kAllMetrics) {
        const BiasCell* cell = table.find(small().scenario_id, dev, *h, m);
        REQUIRE(cell != nullptr);
        CHECK(cell->mean_bias == 0.0);
        CHECK(cell->mc_se == 0.0);
        CHECK(cell->n_ok == 2);
        ++checked;
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("without missingness every handling matches the fully observed copy") {
  const auto cells = two_iterations(small(0.0), 9);
  const auto table = compute_bias(cells, EstimandId::e_all);
  for (const auto& [key, cell] : table.cells) CHECK(std::abs(cell.mean_bias) < 1e-12);
  // Bundles also agree across development methods.
  const auto deg = compute_degradation(cells, DevelopmentMethod::fully_observed);
  for (const auto& [key, cell] : deg.cells) {
    if (cell.n_ok > 0) CHECK(std::abs(cell.mean_bias) < 1e-8);
  }
}

TEST_CASE("bias sign: a better handling has negative AUC bias") {
  CellResult ref, better;
  ref.scenario_id = better.scenario_id = "s";
  ref.dev = better.dev = DevelopmentMethod::cca;
  ref.handling = ValidationHandling::parse("fully_observed");
  better.handling = ValidationHandling::parse("cca");
  PerfReport r1, r2;
  r1.auc = 0.70;
  r2.auc = 0.75;
  ref.report = r1;
  better.report = r2;
  const auto table = compute_bias({ref, better}, EstimandId::e_all);
  CHECK(table.find("s", DevelopmentMethod::cca, better.handling, Metric::auc)->mean_bias < 0.0);
  CHECK(std::isnan(table.find("s", DevelopmentMethod::cca, better.handling, Metric::auc)->mc_se));

  CHECK_THROWS_AS(compute_bias({better}, EstimandId::e_all), BiasError);
}

TEST_CASE("failed cells are counted, not averaged") {
  CellResult ref, bad;
  ref.scenario_id = bad.scenario_id = "s";
  ref.handling = ValidationHandling::parse("fully_observed");
  bad.handling = ValidationHandling::parse("cca");
  ref.report = PerfReport{};
  bad.status = "failed: validate: boom";
  const auto table = compute_bias({ref, bad}, EstimandId::e_all);
  const auto* cell = table.find("s", DevelopmentMethod::fully_observed, bad.handling, Metric::brier);
  CHECK(cell->n_ok == 0);
  CHECK(cell->n_failed == 1);
  CHECK(std::isnan(cell->mean_bias));
}

TEST_CASE("runs are deterministic and order independent") {
  const auto cfg = small();
  RunOptions opt;
  opt.root_seed = 11;
  const auto a = format_result_rows(run_iteration(cfg, 1, opt));
  const auto b = format_result_rows(run_iteration(cfg, 1, opt));
  CHECK(a == b);

  auto grid = preset_grids("desk");
  for (auto& g : grid) {
    g.n_dev = {800};
    g.n_val = {800};
    g.iterations = {1};
  }
  auto scenarios = enumerate_scenarios(grid);
  scenarios.resize(3);
  opt.workers = 2;
  const auto forward = run_grid(scenarios, opt);
  std::vector<ScenarioConfig> reversed(scenarios.rbegin(), scenarios.rend());
  const auto backward = run_grid(reversed, opt);
  std::map<std::string, std::string> f, g;
  for (const auto& s : scenarios) {
    std::vector<CellResult> fa, ba;
    for (const auto& c : forward) if (c.scenario_id == s.scenario_id) fa.push_back(c);
    for (const auto& c : backward) if (c.scenario_id == s.scenario_id) ba.push_back(c);
    CHECK(format_result_rows(fa) == format_result_rows(ba));
    CHECK(!fa.empty());
  }
}

TEST_CASE("result files") {
  TempDir dir;
  write_results_csv({}, dir / "results.csv");
  CHECK(mdtest::read_file(dir / "results.csv") == results_csv_header());
  write_bias_csv(BiasTable{"E_all", {}}, dir / "bias.csv");
  CHECK(mdtest::read_file(dir / "bias.csv") == bias_csv_header());
  CHECK(results_csv_header() ==
        "scenario_id,iteration,x1_kind,rho,gamma1,gamma3,miss_prop,b1_dev,b2_dev,b3_dev,b1_val,b2_val,b3_val,"
        "dag_dev,dag_val,dev_method,val_method,val_mode,metric,value,status\n");

  const auto cells = two_iterations(small(), 12);
  write_results_csv(cells, dir / "r.csv");
  CHECK(count_lines(mdtest::read_file(dir / "r.csv")) == 1 + cells.size() * 4);
  const auto back = read_results_csv(dir / "r.csv");
  REQUIRE(back.size() == cells.size());
  for (auto e : {EstimandId::e_all, EstimandId::e_mi}) {
    const auto t1 = compute_bias(cells, e);
    const auto t2 = compute_bias(back, e);
    CHECK(format_bias_rows(t1) == format_bias_rows(t2));
    write_bias_csv(t1, dir / "b.csv");
    CHECK(format_bias_rows(read_bias_csv(dir / "b.csv")) == format_bias_rows(t1));
  }
}

TEST_CASE("heatmaps") {
  BiasTable table{"E_all", {}};
  const auto hs = admitted_handlings(DevelopmentMethod::cca, true);
  for (auto dev : {DevelopmentMethod::cca, DevelopmentMethod::mean_mode}) {
    for (const auto& h : hs) {
      for (auto m : kAllMetrics) table.cells[BiasKey{"s", dev, h, m}] = BiasCell{0.0, 0.0, 10, 0};
    }
  }
  const std::string zero = render_heatmap_svg(table, Metric::auc);
  CHECK(mdtest::well_formed_xml(zero));
  const auto zf = fills(zero);
  CHECK(zf.size() == 2 * hs.size());
  for (const auto& f : zf) CHECK(f == "#ffffff");

  table.cells[BiasKey{"s", DevelopmentMethod::mean_mode, hs[2], Metric::auc}].mean_bias = 0.03;
  const std::string one = render_heatmap_svg(table, Metric::auc);
  CHECK(mdtest::well_formed_xml(one));
  int off = 0;
  for (const auto& f : fills(one)) off += f != "#ffffff";
  CHECK(off == 1);
  CHECK(one.find("0.03 ± 0") != std::string::npos);

  const std::string panel = render_panel_svg(table);
  CHECK(mdtest::well_formed_xml(panel));
  CHECK(fills(panel).size() == 4 * 2 * hs.size());

  CHECK_THROWS_AS(render_heatmap_svg(BiasTable{"E_all", {}}, Metric::auc), ArgumentError);
  table.cells[BiasKey{"t", DevelopmentMethod::cca, hs[0], Metric::auc}] = BiasCell{};
  CHECK_THROWS_AS(render_heatmap_svg(table, Metric::auc), ArgumentError);
  CHECK(mdtest::well_formed_xml(render_heatmap_svg(table, Metric::auc, "t")));
}

}
