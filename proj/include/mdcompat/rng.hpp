#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mdcompat/types.hpp"

namespace mdcompat {

/// Root seed plus an ordered path of labels, e.g. (scenario, iteration, stage).
struct SeedSpec {
  std::uint64_t root_seed = 0;
  std::vector<std::string> path;

  SeedSpec child(std::string label) const;
  std::string path_string() const;

  bool operator==(const SeedSpec&) const = default;
};

/// 64-bit key for a seed spec; a pure function of (root_seed, path).
std::uint64_t stream_key(const SeedSpec& seed);

/// Deterministic random stream. Streams are derived from their SeedSpec only,
/// so children can be created in any order without affecting each other.
class Stream {
 public:
  explicit Stream(SeedSpec seed);

  const SeedSpec& seed() const { return seed_; }
  Stream split(std::string label) const { return Stream(seed_.child(std::move(label))); }

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  double chi_squared(double dof);
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer on [0, n).
  Index uniform_index(Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  SeedSpec seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

inline Stream derive_stream(const SeedSpec& seed) { return Stream(seed); }

/// n x 2 draws of (X1, X2) with unit variances and correlation rho, built from
/// the closed-form 2x2 Cholesky factor so rho = +-1 stays well defined.
MatrixXd sample_bivariate_normal(Index n, double rho, Stream& rng);

/// Draws from N(mean, cov) for a symmetric positive semidefinite cov.
class MvnSampler {
 public:
  MvnSampler(VectorXd mean, const MatrixXd& cov);
  VectorXd operator()(Stream& rng) const;
  Index dim() const { return mean_.size(); }

 private:
  VectorXd mean_;
  MatrixXd factor_;
};

VectorXd sample_mvn(const VectorXd& mean, const MatrixXd& cov, Stream& rng);

}  // namespace mdcompat
