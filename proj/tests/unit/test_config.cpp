#include <doctest.h>

#include "mdcompat/config.hpp"
#include "mdcompat/error.hpp"
#include "support.hpp"

using namespace mdcompat;

TEST_SUITE("config") {

TEST_CASE("sections become sub-grids") {
  const auto cfg = parse_grid_config(
      "# comment\n"
      "rho = 0, 0.75\n"
      "n_dev = 100\n"
      "[mar]\n"
      "beta2_dev = 0.5\n"
      "beta2_val = 0.5  # trailing comment\n"
      "x1_type = continuous, categorical\n"
      "[run]\n"
      "seed = 99\n"
      "workers = 3\n");
  REQUIRE(cfg.grids.size() == 2);
  CHECK(cfg.grids[0].rho == std::vector<double>{0.0, 0.75});
  CHECK(cfg.grids[0].n_dev == std::vector<Index>{100});
  CHECK(cfg.grids[1].x1_type.size() == 2);
  CHECK(cfg.seed == 99u);
  CHECK(cfg.workers == 3);
  CHECK(enumerate_scenarios(cfg.grids).size() == 4);
}

TEST_CASE("unknown keys list the valid ones") {
  try {
    parse_grid_config("rho = 0\nbeta4_dev = 1\n", "g.ini");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("g.ini:2") != std::string::npos);
    CHECK(msg.find("beta4_dev") != std::string::npos);
    for (const auto& k : grid_keys()) CHECK(msg.find(k) != std::string::npos);
  }
  CHECK_THROWS_AS(parse_grid_config("rho = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_config("rho = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_config("missing_prop = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_config("iterations = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_config("[run]\nrho = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_config("rho 0\n"), ConfigError);
}

TEST_CASE("grid keys cover every parameter") {
  CHECK(grid_keys().size() == 14);
}

TEST_CASE("presets render and parse back") {
  for (const char* name : {"paper", "desk"}) {
    const auto grids = preset_grids(name);
    const auto again = parse_grid_config(format_grid_config(grids)).grids;
    const auto a = enumerate_scenarios(grids);
    const auto b = enumerate_scenarios(again);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].scenario_id == b[i].scenario_id);
  }
  CHECK_THROWS_AS(preset_grids("huge"), ArgumentError);
}

TEST_CASE("full-grid preset sizes") {
  for (const auto& s : enumerate_scenarios(preset_grids("paper"))) {
    REQUIRE(s.n_dev == 50000);
    REQUIRE(s.n_val == 50000);
    REQUIRE(s.iterations == 100);
  }
  for (const auto& s : enumerate_scenarios(preset_grids("desk"))) {
    REQUIRE(s.n_dev == 5000);
    REQUIRE(s.iterations == 200);
    REQUIRE(s.x1_kind == X1Kind::continuous);
    REQUIRE(s.target_missing == 0.5);
  }
}

}
