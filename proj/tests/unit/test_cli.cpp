#include <doctest.h>

#include <sstream>

#include "mdcompat/cli.hpp"
#include "mdcompat/tabular.hpp"
#include "support.hpp"

using namespace mdcompat;
using mdtest::TempDir;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mdcompat");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kTinyGrid =
    "n_dev = 600\n"
    "n_val = 600\n"
    "iterations = 2\n"
    "rho = 0, 0.75\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("dry run prints the scenario count and writes nothing") {
  TempDir dir;
  const auto r = cli({"--dry-run", "--out", (dir / "o").string(), "simulate", "--preset", "paper"});
  CHECK(r.code == 0);
  CHECK(r.out.find("3072 scenarios") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "o"));
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({"simulate"}).code == 2);
  CHECK(cli({"nonsense"}).code == 2);
  CHECK(cli({"simulate", "--preset", "paper", "--pooling", "median"}).code == 2);
  TempDir dir;
  mdtest::write_file(dir / "g.ini", "rho = 0\nbeta4_val = 1\n");
  const auto r = cli({"simulate", "--grid", (dir / "g.ini").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("valid keys") != std::string::npos);
  CHECK(cli({"--version"}).code == 0);
}

TEST_CASE("simulate writes reproducible outputs") {
  TempDir dir;
  mdtest::write_file(dir / "g.ini", kTinyGrid);
  const auto a = cli({"--seed", "3", "--workers", "1", "--out", (dir / "a").string(), "simulate", "--grid",
                      (dir / "g.ini").string(), "--quiet"});
  REQUIRE(a.code == 0);
  const auto b = cli({"--seed", "3", "--workers", "2", "--out", (dir / "b").string(), "simulate", "--grid",
                      (dir / "g.ini").string(), "--quiet"});
  REQUIRE(b.code == 0);
  for (const char* f : {"results.csv", "bias_E_all.csv", "bias_E_mean.csv", "bias_E_RI.csv", "bias_E_MI.csv",
                        "bias_E_PSM.csv", "degradation_fully_observed.csv"}) {
    const auto fa = mdtest::read_file(dir / "a" / f);
    CHECK(!fa.empty());
    CHECK(fa == mdtest::read_file(dir / "b" / f));
  }
  CHECK(std::filesystem::exists(dir / "a" / "run_metadata.json"));
  CHECK(std::filesystem::is_directory(dir / "a" / "heatmaps"));

  const auto rep = cli({"--out", (dir / "r").string(), "report", "--results", (dir / "a" / "results.csv").string(),
                        "--estimand", "E_mean"});
  CHECK(rep.code == 0);
  CHECK(mdtest::read_file(dir / "r" / "bias_E_mean.csv") == mdtest::read_file(dir / "a" / "bias_E_mean.csv"));
}

TEST_CASE("develop, validate and impute on files") {
  TempDir dir;
  const auto dev = mdtest::mask_x1(mdtest::simple_cohort(1200, 0.5, 1), 0.4, 1);
  const auto val = mdtest::mask_x1(mdtest::simple_cohort(1000, 0.5, 2), 0.4, 2);
  save_csv(dev, dir / "dev.csv");
  save_csv(val, dir / "val.csv");
  const std::string bundle = (dir / "b" / "bundle.json").string();

  auto d = cli({"--seed", "4", "develop", "--data", (dir / "dev.csv").string(), "--method", "mi_with_y",
                "--predictors", "X1,X2", "--outcome", "Y", "--bundle", bundle});
  REQUIRE(d.code == 0);
  CHECK(std::filesystem::exists(bundle));

  auto v = cli({"--out", (dir / "v").string(), "validate", "--bundle", bundle, "--data", (dir / "val.csv").string(),
                "--handling", "mi_with_y:refit"});
  REQUIRE(v.code == 0);
  for (const char* m : {"auc", "brier", "cal_intercept", "cal_slope"}) CHECK(v.out.find(m) != std::string::npos);
  CHECK(std::filesystem::exists(dir / "v" / "report.csv"));

  auto c = cli({"--out", (dir / "c").string(), "validate", "--bundle", bundle, "--data", (dir / "val.csv").string(),
                "--handling", "cca"});
  REQUIRE(c.code == 0);
  CHECK(c.out.find("retained rows " + std::to_string(val.rows() - val.missing_count(0))) != std::string::npos);

  auto w = cli({"--out", (dir / "w").string(), "validate", "--bundle", bundle, "--data", (dir / "val.csv").string(),
                "--handling", "psm"});
  CHECK(w.code == 1);

  auto warn = cli({"--out", (dir / "x").string(), "validate", "--bundle", bundle, "--data",
                   (dir / "val.csv").string(), "--handling", "mean_mode:refit"});
  CHECK(warn.code == 0);
  CHECK(warn.err.find("warning") != std::string::npos);

  // Deployment data has no outcome: imputation with the outcome is impossible.
  std::vector<ColumnSpec> no_y = {val.column(0), val.column(1)};
  save_csv(Dataset(no_y, val.values().leftCols(2), val.mask().leftCols(2)), dir / "deploy.csv");
  auto nope = cli({"--out", (dir / "n").string(), "validate", "--bundle", bundle, "--data",
                   (dir / "deploy.csv").string(), "--handling", "mi_with_y:refit"});
  CHECK(nope.code == 1);
  CHECK(nope.err.find("outcome") != std::string::npos);

  auto imp = cli({"--out", (dir / "i").string(), "impute", "--data", (dir / "dev.csv").string(), "--strategy",
                  "regression", "--predictors", "X1,X2", "--outcome", "Y"});
  CHECK(imp.code == 0);
  CHECK(std::filesystem::exists(dir / "i" / "package.json"));
}

TEST_CASE("bootstrap command") {
  TempDir dir;
  save_csv(mdtest::mask_x1(mdtest::simple_cohort(300, 0.5, 3), 0.3, 3), dir / "d.csv");
  mdtest::write_file(dir / "plan.ini",
                     "b = 3\noutcome = Y\nm = 2\ndev_methods = cca, regression\n[predictors]\nX1 = continuous\n"
                     "X2 = continuous\n");
  const auto r = cli({"--out", (dir / "o").string(), "bootstrap", "--data", (dir / "d.csv").string(), "--plan",
                      (dir / "plan.ini").string()});
  CHECK(r.code == 0);
  CHECK(r.err.find("replicate 3 done") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "o" / "bias_E_RI.csv"));

  mdtest::write_file(dir / "zero.ini", "b = 0\noutcome = Y\n[predictors]\nX1 = continuous\n");
  CHECK(cli({"bootstrap", "--data", (dir / "d.csv").string(), "--plan", (dir / "zero.ini").string()}).code == 2);

  mdtest::write_file(dir / "miss.ini", "b = 1\noutcome = Y\n[predictors]\nX9 = continuous\n");
  const auto m = cli({"bootstrap", "--data", (dir / "d.csv").string(), "--plan", (dir / "miss.ini").string()});
  CHECK(m.code == 1);
  CHECK(m.err.find("X9") != std::string::npos);
}

}
