#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "mdcompat/datagen.hpp"
#include "mdcompat/rng.hpp"
#include "mdcompat/tabular.hpp"

namespace mdtest {

using namespace mdcompat;

inline std::vector<ColumnSpec> two_predictor_specs(ColumnKind x1 = ColumnKind::continuous) {
  return {{"X1", x1, ColumnRole::predictor},
          {"X2", ColumnKind::continuous, ColumnRole::predictor},
          {"Y", ColumnKind::binary, ColumnRole::outcome}};
}

/// X1, X2 standard normal with correlation rho; Y ~ logistic(-1.4 + 0.5 X1 + 0.5 X2).
inline Dataset simple_cohort(Index n, double rho, std::uint64_t seed) {
  Stream rng({seed, {"cohort"}});
  MatrixXd x = sample_bivariate_normal(n, rho, rng);
  MatrixXd values(n, 3);
  values.leftCols(2) = x;
  for (Index i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(-1.4 + 0.5 * x(i, 0) + 0.5 * x(i, 1))));
    values(i, 2) = rng.uniform() < p ? 1.0 : 0.0;
  }
  return Dataset::fully_observed(two_predictor_specs(), values);
}

/// Masks X1 completely at random with probability `p`.
inline Dataset mask_x1(const Dataset& ds, double p, std::uint64_t seed) {
  Stream rng({seed, {"mask"}});
  MaskMatrix mask = ds.mask();
  for (Index i = 0; i < ds.rows(); ++i) {
    if (rng.uniform() < p) mask(i, 0) = 0;
  }
  return ds.with_mask(mask);
}

inline ScenarioConfig desk_config() {
  ScenarioConfig cfg;
  cfg.n_dev = 2000;
  cfg.n_val = 2000;
  cfg.iterations = 2;
  cfg.scenario_id = "test";
  return cfg;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mdcompat_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace mdtest
